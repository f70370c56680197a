#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sublab/manifold.hpp"

namespace sublab {

using MapField = std::function<Vec(const Vec&)>;
/// n×m Jacobian in chart components.
using JacobianField = std::function<Mat(const Vec&)>;

/// A smooth map total → base, with an optional closed-form Jacobian.
struct SubmersionMap {
  std::string name;
  ChartedManifold total;
  ChartedManifold base;
  MapField map_field;
  std::optional<JacobianField> jacobian_field;
  double fd_step = 1e-4;

  /// f(x) wrapped into the base chart.
  Vec operator()(const Vec& x) const;
  /// Same map with the total metric scaled by g_factor and the base metric by h_factor.
  SubmersionMap rescaled(double g_factor, double h_factor) const;
};

/// Minimum singular value of df (orthonormal frames in and out) accepted as full rank.
inline constexpr double kMinRankSingularValue = 1e-8;

/// Jacobian in chart components; closed form when available, else central differences.
/// Throws NotASubmersion when the rank drops below n.
Mat differential_at(const SubmersionMap& f, const Vec& x);

/// Columns of `vertical` (m×(m−n)) and `horizontal` (m×n) are g-orthonormal.
struct VerticalSplit {
  Vec point;
  Mat vertical;
  Mat horizontal;
};

VerticalSplit split_at(const SubmersionMap& f, const Vec& x);

/// g-orthogonal projector onto the horizontal space, g⁻¹Jᵀ(Jg⁻¹Jᵀ)⁻¹J.
Mat horizontal_projector(const SubmersionMap& f, const Vec& x);

/// The unique horizontal vector at x mapping to the base vector w.
/// Throws a conditioning error when Jg⁻¹Jᵀ is not positive definite.
Vec horizontal_preimage(const SubmersionMap& f, const Vec& x, const Vec& w);

/// Singular values of df on the horizontal space, orthonormal in and out (descending).
Vec horizontal_singular_values(const SubmersionMap& f, const Vec& x);

/// Smallest δ with e^{-δ}|v| ≤ |df(v)| ≤ e^{δ}|v| for horizontal v at x.
double delta_at(const SubmersionMap& f, const Vec& x);

struct TensorAt {
  /// II: components[a * k + b] for vertical frame indices a, b (k = m − n).
  /// A: components[i * n + j] for horizontal frame indices i, j.
  std::vector<Vec> components;
  double norm = 0.0;
};

/// Horizontal part of ∇_T T over the vertical frame of split_at. Norm: largest
/// |eigenvalue| of each horizontal component, combined in the Euclidean norm.
TensorAt second_fundamental_form_at(const SubmersionMap& f, const Vec& x);

/// Vertical part of [X_i, X_j] over the horizontal frame of split_at.
/// Norm: max over i < j of |A(X_i, X_j)|_g.
TensorAt integrability_tensor_at(const SubmersionMap& f, const Vec& x);

/// Largest principal angle between two equal-dimensional subspaces of T_xM in
/// the g inner product. Symmetric bit for bit in (V1, V2).
double dihedral_angle(const ChartedManifold& manifold, const Vec& x, const Mat& v1, const Mat& v2);

/// Largest angular Hausdorff distance between the unit spheres of V1 and V2,
/// estimated from `samples` points on each sphere. Cross-check for dihedral_angle.
double sampled_hausdorff_angle(const ChartedManifold& manifold, const Vec& x, const Mat& v1,
                               const Mat& v2, int samples, std::uint64_t seed);

/// max over the grid of d_h(f1(x), f2(x)).
double map_distance(const SubmersionMap& f1, const SubmersionMap& f2, const std::vector<Vec>& grid,
                    double trust_radius);

struct LclResult {
  bool pass = true;
  bool forward_pass = true;
  bool backward_pass = true;
  int samples = 0;
  /// Largest d_h(f(x), f(y)) / r over the forward samples.
  double forward_ratio = 0.0;
  /// Largest d_g(x, lift end) / r over the backward samples.
  double backward_ratio = 0.0;
  std::optional<Vec> witness;
  std::string witness_kind;
};

/// Sampled check of B_{r/Q}(f(x)) ⊂ f(B_r(x)) ⊂ B_{Qr}(f(x)). Backward samples are
/// verified by horizontally lifting the base geodesic to the sample and measuring
/// how far the lift end lies from x.
LclResult lcl_check(const SubmersionMap& f, double q, const Vec& x, double r, int sample_budget,
                    double trust_radius, std::uint64_t seed = 1);

struct GhaResult {
  bool pass = true;
  double distortion = 0.0;
  double density_gap = 0.0;
  /// max_i d(x_i, F(x_i)) when both samples live in one space.
  std::optional<double> displacement;
  std::pair<int, int> worst_pair{-1, -1};
};

/// Verifies |d_Y(F x, F x') − d_X(x, x')| < ε on all pairs and ε-density of the image.
/// `correspondence[i]` is the Y index of X point i. `cross` (optional) holds d(x_i, y_j).
GhaResult gha_check(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                    const std::vector<int>& correspondence, double epsilon,
                    const Eigen::MatrixXd* cross = nullptr);

}  // namespace sublab
