#include "sublab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sublab/bundle.hpp"
#include "sublab/transport.hpp"

namespace sublab {

double BoundReport::parameter(const std::string& key) const {
  for (const auto& [k, v] : parameters)
    if (k == key) return v;
  throw Error(ErrorKind::Contract, "bound '" + name + "' has no parameter '" + key + "'");
}

BoundReport make_bound(std::string name, double lhs, double rhs, double tolerance, ParamList params) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.tolerance = tolerance;
  r.parameters = std::move(params);
  r.pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + tolerance;
  return r;
}

namespace {

constexpr double kVariationStep = 1e-4;
constexpr int kTensorSamples = 9;

// Integrates c' = X(c) over [0, span] with a few RK4 steps.
template <typename Field>
Vec flow(const Vec& start, double span, int steps, Field&& field) {
  const double h = span / steps;
  Vec c = start;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = field(c, i * h);
    const Vec k2 = field(Vec(c + 0.5 * h * k1), (i + 0.5) * h);
    const Vec k3 = field(Vec(c + 0.5 * h * k2), (i + 0.5) * h);
    const Vec k4 = field(Vec(c + h * k3), (i + 1) * h);
    c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return c;
}

struct TensorSup {
  double ii = 0.0;
  double a = 0.0;
};

TensorSup tensor_sup_along(const SubmersionMap& f, const DiscreteCurve& curve) {
  TensorSup out;
  const std::size_t n = curve.size();
  for (int k = 0; k < kTensorSamples; ++k) {
    const std::size_t i = (n - 1) * k / (kTensorSamples - 1);
    out.ii = std::max(out.ii, second_fundamental_form_at(f, curve.points[i]).norm);
    out.a = std::max(out.a, integrability_tensor_at(f, curve.points[i]).norm);
  }
  return out;
}

}  // namespace

VariationResult variation_bound_experiment(const SubmersionMap& f, const TangentVector& fiber_vector,
                                           const Vec& base_velocity, double eps_measured,
                                           double tolerance) {
  const Vec& x0 = fiber_vector.base;
  const Vec& t0 = fiber_vector.components;
  const MetricAt gx = metric_at(f.total, x0);
  const double v_norm = gx.norm(t0);
  if (!(v_norm > 0.0)) throw Error(ErrorKind::Contract, "fiber vector must be nonzero");
  const Vec p = f(x0);
  const MetricAt hp = metric_at(f.base, p);
  if (hp.norm(differential_at(f, x0) * t0) > 1e-8 * v_norm)
    throw Error(ErrorKind::Contract, "fiber vector is not vertical");

  const double r = hp.norm(base_velocity);
  const int steps = steps_for_length(r);
  // Fiber curve through x0 with initial velocity t0: flow of the projected constant field.
  const int m = f.total.dim();
  auto vertical = [&](const Vec& c, double) -> Vec {
    return (Mat::Identity(m, m) - horizontal_projector(f, c)) * t0;
  };
  const double hs = kVariationStep / v_norm;
  const Vec c_plus = flow(x0, hs, 4, vertical);
  const Vec c_minus = flow(x0, -hs, 4, vertical);

  const DiscreteCurve lift = lift_base_geodesic(f, x0, base_velocity, steps);
  const Vec e_plus = lift_base_geodesic(f, c_plus, base_velocity, steps).back();
  const Vec e_minus = lift_base_geodesic(f, c_minus, base_velocity, steps).back();
  const Vec ds = f.total.difference(e_plus, e_minus) / (2.0 * hs);
  const double ds_norm = metric_at(f.total, lift.back()).norm(ds);

  const double ii = tensor_sup_along(f, lift).ii;
  const double factor = std::exp(std::exp(eps_measured) * ii * r);
  const ParamList params = {{"eps", eps_measured}, {"II", ii}, {"r", r}, {"v", v_norm}};
  VariationResult out;
  out.ratio = ds_norm / v_norm;
  out.upper = make_bound("variation_upper", ds_norm, factor * v_norm, tolerance, params);
  out.lower = make_bound("variation_lower", v_norm / factor, ds_norm, tolerance, params);
  return out;
}

GeodesicVariation geodesic_fan(const ChartedManifold& base, const Vec& p, const Vec& direction,
                               const Vec& spread, double r) {
  const int steps = steps_for_length(1.0);
  return {[base, p, spread, steps](double s) {
            return s == 0.0 ? p : geodesic_endpoint(base, p, Vec(s * spread), 1.0, steps);
          },
          [v = Vec(r * direction)](double) { return v; }};
}

VerticalComponentResult vertical_component_experiment(const SubmersionMap& f,
                                                      const GeodesicVariation& alpha,
                                                      const Vec& lift_start, double eps_measured,
                                                      const VerticalComponentOptions& options) {
  const Vec p0 = alpha.start(0.0);
  if (f.base.difference(f(lift_start), p0).cwiseAbs().maxCoeff() > 1e-6)
    throw Error(ErrorKind::Contract, "lift start does not lie over the variation start");
  const double r = metric_at(f.base, p0).norm(alpha.velocity(0.0));
  // Scale-invariant form of "length ≤ π/2 under |sec| ≤ 1".
  const double scaled_length = r * std::sqrt(std::max(options.base_sectional_bound, 0.0));
  if (scaled_length > std::numbers::pi / 2 + 1e-12)
    throw Error(ErrorKind::Contract, "variation geodesics are longer than π/2 in curvature units");
  const int steps = steps_for_length(r);

  // s ↦ α(s, 0) lifted horizontally from lift_start.
  auto start_velocity = [&](double s) -> Vec {
    constexpr double h = 1e-6;
    return f.base.difference(alpha.start(s + h), alpha.start(s - h)) / (2.0 * h);
  };
  auto lift_field = [&](const Vec& c, double s) { return horizontal_preimage(f, c, start_velocity(s)); };
  const double hs = kVariationStep;
  const Vec c_plus = flow(lift_start, hs, 4, lift_field);
  const Vec c_minus = flow(lift_start, -hs, 4, lift_field);

  // Each α(s, ·) is lifted from its own start; lift_base_geodesic reads the base
  // start from f(c), which equals α(s, 0) up to the flow error.
  const DiscreteCurve lift0 = lift_base_geodesic(f, lift_start, alpha.velocity(0.0), steps);
  const Vec e_plus = lift_base_geodesic(f, c_plus, alpha.velocity(hs), steps).back();
  const Vec e_minus = lift_base_geodesic(f, c_minus, alpha.velocity(-hs), steps).back();
  const Vec end0 = lift0.back();
  const Vec ds = f.total.difference(e_plus, e_minus) / (2.0 * hs);
  const int m = f.total.dim();
  const Vec vertical = (Mat::Identity(m, m) - horizontal_projector(f, end0)) * ds;
  const double lhs = metric_at(f.total, end0).norm(vertical);

  const double a = metric_at(f.base, p0).norm(start_velocity(0.0));
  const Vec q_plus = geodesic_endpoint(f.base, alpha.start(hs), alpha.velocity(hs), 1.0, steps);
  const Vec q_minus = geodesic_endpoint(f.base, alpha.start(-hs), alpha.velocity(-hs), 1.0, steps);
  const Vec q0 = geodesic_endpoint(f.base, p0, alpha.velocity(0.0), 1.0, steps);
  const double b = metric_at(f.base, q0).norm(f.base.difference(q_plus, q_minus) / (2.0 * hs));

  const TensorSup sup = tensor_sup_along(f, lift0);
  const double growth = std::exp(3.0 * eps_measured + std::exp(eps_measured) * sup.ii * r);
  const double unit_rhs = (a + b) * growth * sup.a * r;
  VerticalComponentResult out;
  out.fitted_constant = unit_rhs > 0.0 ? lhs / unit_rhs : 0.0;
  out.small_r_regime = scaled_length <= 0.5;
  out.report = make_bound("vertical_component", lhs, options.constant * unit_rhs, options.tolerance,
                          {{"C", options.constant},
                           {"a", a},
                           {"b", b},
                           {"r", r},
                           {"eps", eps_measured},
                           {"II", sup.ii},
                           {"A", sup.a},
                           {"fitted_C", out.fitted_constant},
                           {"base_sectional_bound", options.base_sectional_bound},
                           {"small_r_regime", out.small_r_regime ? 1.0 : 0.0}});
  return out;
}

ChartBounds measure_chart_bounds(const ChartedManifold& manifold, const std::vector<Vec>& points) {
  ChartBounds out;
  for (const Vec& x : points) {
    const MetricAt g = metric_at(manifold, x);
    out.c = std::max({out.c, g.max_eigenvalue, 1.0 / g.min_eigenvalue});
    out.mu = std::max(out.mu, manifold.christoffel(x).max_abs());
  }
  return out;
}

double deviation_rhs(double s, int m, double c, double mu, double delta1, double delta2) {
  const double lead = std::sqrt(std::pow(m, 5) * std::pow(c, 3)) * mu + (m - 1) * delta1;
  return lead * s * s * s / 3.0 + 0.8 * std::sqrt(delta2) * std::pow(s, 2.5);
}

DeviationResult deviation_experiment(const ChartedManifold& manifold, const DiscreteCurve& alpha,
                                     const DiscreteCurve& beta, const std::vector<double>& s_grid,
                                     double trust_radius, double tolerance) {
  if (s_grid.empty()) throw Error(ErrorKind::Contract, "deviation needs a nonempty s grid");
  if (manifold.difference(alpha.front(), beta.front()).cwiseAbs().maxCoeff() > 1e-8 ||
      (alpha.velocities.front() - beta.velocities.front()).cwiseAbs().maxCoeff() > 1e-8)
    throw Error(ErrorKind::Contract, "curves must share their initial point and velocity");
  for (std::size_t i = 1; i < s_grid.size(); ++i)
    if (!(s_grid[i] > s_grid[i - 1])) throw Error(ErrorKind::Contract, "s grid must increase");

  const int m = manifold.dim();
  const double delta1 = max_geodesic_curvature(manifold, alpha);
  const double delta2 = max_geodesic_curvature(manifold, beta);
  std::vector<Vec> region = alpha.points;
  region.insert(region.end(), beta.points.begin(), beta.points.end());
  const ChartBounds chart = measure_chart_bounds(manifold, region);

  DeviationResult out;
  out.series.name = "deviation";
  out.series.columns = {"s", "r", "r_bound"};
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_lhs = 0.0, worst_rhs = 0.0, worst_s = 0.0, max_h = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int fitted = 0;
  for (double s : s_grid) {
    const double r = distance_to_curve(manifold, alpha.point_at(s), beta, trust_radius).distance;
    const double h = 0.5 * r * r;
    const double rhs = deviation_rhs(s, m, chart.c, chart.mu, delta1, delta2);
    out.series.rows.push_back({s, r, std::sqrt(2.0 * rhs)});
    max_h = std::max(max_h, h);
    if (rhs - h < worst_margin) {
      worst_margin = rhs - h;
      worst_lhs = h;
      worst_rhs = rhs;
      worst_s = s;
    }
    if (s > 0.0 && r > 1e-12) {
      const double lx = std::log(s), ly = std::log(r);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++fitted;
    }
  }
  if (fitted >= 2) out.slope = (fitted * sxy - sx * sy) / (fitted * sxx - sx * sx);
  out.report = make_bound("deviation", worst_lhs, worst_rhs, tolerance,
                          {{"m", static_cast<double>(m)},
                           {"C", chart.c},
                           {"mu", chart.mu},
                           {"delta1", delta1},
                           {"delta2", delta2},
                           {"s", worst_s},
                           {"h_max", max_h},
                           {"slope", out.slope}});
  return out;
}

HolonomyResult holonomy_experiment(const ChartedManifold& manifold, const DiscreteCurve& loop,
                                   const Vec& v0, double tolerance) {
  if (loop.size() < 3) throw Error(ErrorKind::Contract, "loop needs at least three nodes");
  if (manifold.difference(loop.back(), loop.front()).cwiseAbs().maxCoeff() > 1e-8)
    throw Error(ErrorKind::Contract, "loop is not closed within 1e-8");
  const MetricAt g0 = metric_at(manifold, loop.front());
  if (std::abs(g0.norm(v0) - 1.0) > 1e-8) throw Error(ErrorKind::Contract, "v0 must be g-unit");

  const TransportResult transported = parallel_transport(manifold, loop, v0);
  const Vec diff = v0 - transported.end;
  const double lhs = g0.inner(diff, diff);
  const ChartBounds chart = measure_chart_bounds(manifold, loop.points);
  const double length = curve_length(manifold, loop);
  const int m = manifold.dim();
  const double rhs = std::pow(m, 5) * std::pow(chart.c, 3) * chart.mu * chart.mu * length * length;

  HolonomyResult out;
  out.length = length;
  if (m == 2) {
    const Vec a = g0.to_orthonormal(v0), b = g0.to_orthonormal(transported.end);
    out.rotation_angle = std::atan2(a[0] * b[1] - a[1] * b[0], a.dot(b));
  }
  out.report = make_bound("holonomy", lhs, rhs, tolerance,
                          {{"m", static_cast<double>(m)},
                           {"C", chart.c},
                           {"mu", chart.mu},
                           {"l", length},
                           {"angle", out.rotation_angle}});
  return out;
}

namespace {

double relative_drift(double a, double b) {
  if (std::abs(a) < kNumericalZero && std::abs(b) < kNumericalZero) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

struct ScaleSnapshot {
  std::vector<double> angles;
  std::vector<double> deltas;
  double ii = 0.0;
  double a = 0.0;
  double distance = 0.0;
};

ScaleSnapshot snapshot(const SubmersionMap& f1, const SubmersionMap& f2, const std::vector<Vec>& grid,
                       double trust_radius) {
  ScaleSnapshot s;
  for (const Vec& x : grid) {
    s.angles.push_back(dihedral_angle(f1.total, x, split_at(f1, x).vertical, split_at(f2, x).vertical));
    s.deltas.push_back(delta_at(f1, x));
    s.deltas.push_back(delta_at(f2, x));
    for (const SubmersionMap* f : {&f1, &f2}) {
      s.ii = std::max(s.ii, second_fundamental_form_at(*f, x).norm);
      s.a = std::max(s.a, integrability_tensor_at(*f, x).norm);
    }
  }
  s.distance = map_distance(f1, f2, grid, trust_radius);
  return s;
}

}  // namespace

RescaleResult rescaling_invariance_experiment(const SubmersionMap& f1, const SubmersionMap& f2,
                                              double lambda, const std::vector<Vec>& grid,
                                              double trust_radius, double tolerance) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::Validation, "rescale factor must be positive");
  const double l2 = lambda * lambda;
  const ScaleSnapshot before = snapshot(f1, f2, grid, trust_radius);
  const ScaleSnapshot after =
      snapshot(f1.rescaled(l2, l2), f2.rescaled(l2, l2), grid, trust_radius * lambda);

  RescaleResult out;
  for (std::size_t i = 0; i < before.angles.size(); ++i)
    out.angle_drift = std::max(out.angle_drift, std::abs(before.angles[i] - after.angles[i]));
  for (std::size_t i = 0; i < before.deltas.size(); ++i)
    out.delta_drift = std::max(out.delta_drift, std::abs(before.deltas[i] - after.deltas[i]));
  out.ii_product = before.ii * before.distance;
  out.ii_product_rescaled = after.ii * after.distance;
  out.a_product = before.a * before.distance;
  out.a_product_rescaled = after.a * after.distance;
  const double product_drift = std::max(relative_drift(out.ii_product, out.ii_product_rescaled),
                                        relative_drift(out.a_product, out.a_product_rescaled));
  const double drift = std::max({out.angle_drift, out.delta_drift, product_drift});
  out.report = make_bound("rescale_invariance", drift, 0.0, tolerance,
                          {{"lambda", lambda},
                           {"angle_drift", out.angle_drift},
                           {"delta_drift", out.delta_drift},
                           {"product_drift", product_drift},
                           {"II_dh", out.ii_product},
                           {"A_dh", out.a_product},
                           {"d_h", before.distance}});
  return out;
}

}  // namespace sublab
