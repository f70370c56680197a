#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sublab/curve.hpp"
#include "sublab/submersion.hpp"

namespace sublab {

using ParamMap = std::map<std::string, double>;

struct ParamSpec {
  std::string name;
  double default_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool hi_inclusive = true;
  std::string doc;
};

struct ScenarioInfo {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
};

/// Registered scenarios in a fixed order.
std::vector<ScenarioInfo> list_scenarios();

struct Scenario {
  std::string name;
  ParamMap params;
  ChartedManifold total;
  ChartedManifold base;
  SubmersionMap f1;
  SubmersionMap f2;
  double trust_radius = 0.5;
  /// Hypotheses the lab cannot verify globally, echoed into reports as assumptions.
  std::map<std::string, double> asserted;
  /// Per-axis sampling box inside the total chart.
  std::vector<std::pair<double, double>> sample_box;
  /// Default total-space point for pointwise experiments.
  Vec anchor;

  // Closed-form oracles; empty when the scenario has none.
  std::function<Vec(const Vec&)> phi_oracle;
  std::function<Mat(const Vec&)> dphi_oracle;
  std::function<double(const Vec&)> delta_oracle;  // δ of f2
  std::function<double(const Vec&)> ii_oracle;     // |II| of f2
  std::function<double(const Vec&)> a_oracle;      // |A| of f2
  std::optional<double> sup_delta;                 // sup of δ(f2) over the whole chart
  std::optional<double> map_distance_oracle;       // sup d_h(f1, f2)

  std::map<std::string, DiscreteCurve> total_curves;
  std::map<std::string, DiscreteCurve> base_curves;

  /// Product grid over sample_box; counts per total axis, last axis fastest.
  std::vector<Vec> grid(const std::vector<int>& counts) const;
  /// Deterministic low-discrepancy sample of `count` points in sample_box.
  std::vector<Vec> scatter(int count) const;
};

/// Builds a scenario; unknown names raise a registry error, bad parameters a
/// validation error. With `verify`, every oracle is checked against the numeric
/// pipeline on a 100-point scatter and a mismatch raises a validation error.
Scenario build_scenario(const std::string& name, const ParamMap& params = {}, bool verify = true);

struct OracleCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

std::vector<OracleCheck> verify_oracles(const Scenario& scenario, int count = 100);

// Manifold factories.
ChartedManifold flat_torus(int dim);
ChartedManifold flat_circle();
ChartedManifold flat_line(double lo, double hi);
ChartedManifold flat_plane(double half_extent);
/// Sphere of the given radius in the (colatitude, longitude) chart.
ChartedManifold round_sphere(double radius);

/// σ with σ + a sin σ = θ (a in [0, 1)).
double twisted_root(double theta, double a);

/// Closed geodesic triangle on the unit sphere chart with three right angles,
/// placed clear of the chart poles; `shrink` moves the vertices toward the centroid
/// along great circles (1 = full triangle, 0.5 = halfway).
DiscreteCurve sphere_right_triangle(double shrink, double nodes_per_unit_length = 512.0);

/// Axis-aligned square loop of side `side` in a flat 2-d chart starting at `corner`.
DiscreteCurve square_loop(const Vec& corner, double side, int nodes_per_side);

struct SharpnessResult {
  double gap = 0.0;         // max ‖dΦᵀ g₂(Φx) dΦ − g₁(x)‖ over the grid
  double oracle_gap = 0.0;  // max |1/(1 + a cos σ)² − 1| over the same θ₂ samples
  Vec worst_point;
};

/// C⁰ gap between Φ*g₂ and g₁ on flat_torus_pair over a counts[0]×counts[1] grid.
SharpnessResult sharpness_check(const Scenario& scenario, const std::vector<int>& counts);

}  // namespace sublab
