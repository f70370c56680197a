#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sublab/types.hpp"

namespace sublab {

/// One coordinate axis of a chart domain. Periodic axes wrap into [lo, hi);
/// non-periodic axes are open intervals (lo, hi).
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;

  double period() const { return hi - lo; }
};

/// Christoffel symbols of the second kind, Γ^k_{ij}, stored densely.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int dim) : dim_(dim) { data_.fill(0.0); }

  int dim() const { return dim_; }
  double& operator()(int k, int i, int j) { return data_[(k * dim_ + i) * dim_ + j]; }
  double operator()(int k, int i, int j) const { return data_[(k * dim_ + i) * dim_ + j]; }

  /// Γ^k_{ij} u^i v^j.
  Vec contract(const Vec& u, const Vec& v) const;
  /// Matrix B with B(k, i) = Γ^k_{ij} u^j, so that Γ(u, w) = B w.
  Mat contract_one(const Vec& u) const;
  double max_abs() const;

 private:
  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

using MetricField = std::function<Mat(const Vec&)>;
/// Returns the m partial derivatives ∂_l g at a point.
using MetricDerivativeField = std::function<std::array<Mat, kMaxDim>(const Vec&)>;
using ChristoffelField = std::function<Christoffel(const Vec&)>;

/// Builds a closed-form Christoffel field from closed-form metric and metric derivatives.
ChristoffelField closed_form_christoffel(MetricField metric, MetricDerivativeField derivative);

/// A Riemannian manifold described in a single chart. Immutable; copies share state.
class ChartedManifold {
 public:
  ChartedManifold(std::string name, std::vector<Axis> domain, MetricField metric,
                  std::optional<ChristoffelField> christoffel = std::nullopt,
                  double fd_step = 1e-4);

  const std::string& name() const { return state_->name; }
  int dim() const { return static_cast<int>(state_->domain.size()); }
  const std::vector<Axis>& domain() const { return state_->domain; }
  double fd_step() const { return state_->fd_step; }
  /// Overall factor applied to the metric relative to the construction-time field.
  double scale() const { return state_->scale; }
  bool has_closed_form_christoffel() const { return state_->christoffel.has_value(); }

  /// Wraps periodic axes into the fundamental domain. Throws a domain error
  /// when a non-periodic coordinate lies outside its open interval.
  Vec wrap(const Vec& x) const;
  bool contains(const Vec& x) const;
  /// Throws a domain error unless every point within `radius` (sup norm) of x is in the chart.
  void require_ball(const Vec& x, double radius, const char* what) const;
  /// a - b with periodic components reduced to the minimal image.
  Vec difference(const Vec& a, const Vec& b) const;

  /// Raw metric components at the wrapped point, no contract checks.
  Mat metric(const Vec& x) const;
  /// Christoffel symbols at x: closed form when available, else central differences.
  Christoffel christoffel(const Vec& x) const;

  /// Same chart and field, metric multiplied by `factor` > 0.
  ChartedManifold rescaled(double factor) const;

 private:
  struct State {
    std::string name;
    std::vector<Axis> domain;
    MetricField metric;
    std::optional<ChristoffelField> christoffel;
    double fd_step;
    double scale;
  };
  explicit ChartedManifold(std::shared_ptr<const State> state) : state_(std::move(state)) {}

  Christoffel finite_difference_christoffel(const Vec& x) const;

  std::shared_ptr<const State> state_;
};

struct TangentVector {
  Vec base;
  Vec components;
};

/// Metric at a point together with its inverse and lower Cholesky factor L (g = L Lᵀ).
struct MetricAt {
  Mat g;
  Mat g_inv;
  Mat chol;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;

  double inner(const Vec& u, const Vec& v) const { return u.dot(g * v); }
  double norm(const Vec& u) const;
  /// Components in a g-orthonormal frame: Lᵀ u.
  Vec to_orthonormal(const Vec& u) const { return chol.transpose() * u; }
  /// Inverse of to_orthonormal: L⁻ᵀ w.
  Vec from_orthonormal(const Vec& w) const;
  Mat from_orthonormal(const Mat& w) const;
};

MetricAt metric_at(const ChartedManifold& manifold, const Vec& x);

struct ChristoffelAt {
  Christoffel gamma;
  double max_abs = 0.0;
};

ChristoffelAt christoffel_at(const ChartedManifold& manifold, const Vec& x);

struct CurvatureReport {
  /// riemann[(k * m + l) * m * m + i * m + j] = R^k_{lij}, with
  /// R(∂_i, ∂_j)∂_l = R^k_{lij} ∂_k.
  std::vector<double> riemann;
  Mat ricci;
  double ricci_operator_norm = 0.0;
  std::pair<double, double> sectional_range{0.0, 0.0};
  int dim = 0;

  double R(int k, int l, int i, int j) const {
    return riemann[static_cast<std::size_t>(((k * dim + l) * dim + i) * dim + j)];
  }
};

CurvatureReport curvature_at(const ChartedManifold& manifold, const Vec& x);

/// Sectional curvature of span(u, v) at x from a precomputed Riemann tensor.
double sectional_curvature(const CurvatureReport& curvature, const Mat& g, const Vec& u,
                           const Vec& v);

/// Conditioning threshold for metric evaluations.
inline constexpr double kMaxConditionNumber = 1e12;

}  // namespace sublab
