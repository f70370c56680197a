#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sublab/curve.hpp"
#include "sublab/submersion.hpp"

namespace sublab {

using ParamList = std::vector<std::pair<std::string, double>>;

/// One inequality: pass ⇔ lhs ≤ rhs + tolerance.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  ParamList parameters;
  bool pass = true;
  double tolerance = 0.0;

  double parameter(const std::string& key) const;
};

BoundReport make_bound(std::string name, double lhs, double rhs, double tolerance, ParamList params);

/// A named numeric table (plot data).
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Values below this are finite-difference noise and count as zero in drift checks.
inline constexpr double kNumericalZero = 1e-8;

struct VariationResult {
  BoundReport upper;
  BoundReport lower;
  double ratio = 0.0;  // |∂̃_s|(0,1) / |v|
};

/// Lifts the base geodesic t ↦ exp(t w) from points of the fiber through
/// fiber_vector.base and compares |∂̃_s|(0,1) with e^{±e^ε|II| r}|v|.
VariationResult variation_bound_experiment(const SubmersionMap& f, const TangentVector& fiber_vector,
                                           const Vec& base_velocity, double eps_measured,
                                           double tolerance = 1e-9);

/// α(s, t) = exp_{start(s)}(t · velocity(s)) on the base.
struct GeodesicVariation {
  std::function<Vec(double)> start;
  std::function<Vec(double)> velocity;
};

/// Geodesics of velocity r·direction (constant chart components) issuing from the
/// points exp_p(s·spread). In one dimension pass spread = direction.
GeodesicVariation geodesic_fan(const ChartedManifold& base, const Vec& p, const Vec& direction,
                               const Vec& spread, double r);

struct VerticalComponentOptions {
  double constant = 2.0;                // C, reported, never fitted into the pass decision
  double base_sectional_bound = 1.0;    // asserted sup |sec(N)|
  double tolerance = 1e-5;
};

struct VerticalComponentResult {
  BoundReport report;
  double fitted_constant = 0.0;  // smallest C for which the bound holds (0 when |A| r = 0)
  bool small_r_regime = true;
};

/// Measures the f-vertical part of the lifted variation field at (0, 1) against
/// C(a + b)e^{3ε + e^ε|II| r}|A| r.
VerticalComponentResult vertical_component_experiment(const SubmersionMap& f,
                                                      const GeodesicVariation& alpha,
                                                      const Vec& lift_start, double eps_measured,
                                                      const VerticalComponentOptions& options = {});

struct ChartBounds {
  double c = 1.0;   // C⁻¹I ≤ g ≤ CI
  double mu = 0.0;  // sup |Γ^k_{ij}|
};

/// Sampled chart constants over a set of points.
ChartBounds measure_chart_bounds(const ChartedManifold& manifold, const std::vector<Vec>& points);

/// Integrated deviation bound for h = ½r²:
/// ⅓[√(m⁵C³)μ + (m−1)δ₁]s³ + ⅘√δ₂ s^{5/2}.
double deviation_rhs(double s, int m, double c, double mu, double delta1, double delta2);

struct DeviationResult {
  BoundReport report;
  double slope = 0.0;  // least-squares slope of log r against log s
  Series series;       // s, r(s), √(2 rhs(s))
};

DeviationResult deviation_experiment(const ChartedManifold& manifold, const DiscreteCurve& alpha,
                                     const DiscreteCurve& beta, const std::vector<double>& s_grid,
                                     double trust_radius, double tolerance = 1e-9);

struct HolonomyResult {
  BoundReport report;
  double length = 0.0;
  double rotation_angle = 0.0;  // 2-d only: signed holonomy angle in an orthonormal frame
};

/// |v(0) − v(l)|²_{g(start)} after transport around the loop against m⁵C³μ²l².
HolonomyResult holonomy_experiment(const ChartedManifold& manifold, const DiscreteCurve& loop,
                                   const Vec& v0, double tolerance = 1e-9);

struct RescaleResult {
  BoundReport report;
  double angle_drift = 0.0;
  double delta_drift = 0.0;
  double ii_product = 0.0;
  double ii_product_rescaled = 0.0;
  double a_product = 0.0;
  double a_product_rescaled = 0.0;
};

/// Rescales g → λ²g, h → λ²h and measures the drift of dihedral angles, δ and
/// the products |II|·d_h, |A|·d_h over the grid.
RescaleResult rescaling_invariance_experiment(const SubmersionMap& f1, const SubmersionMap& f2,
                                              double lambda, const std::vector<Vec>& grid,
                                              double trust_radius, double tolerance = 1e-6);

}  // namespace sublab
