#include "sublab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>

#include "sublab/bundle.hpp"
#include "sublab/transport.hpp"

namespace sublab {

int default_jobs() {
  if (const char* env = std::getenv("SUBLAB_JOBS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0 && n <= 1024) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> grid_counts(const Scenario& s, const ExperimentSpec& spec, int fallback) {
  const int m = s.total.dim();
  if (spec.grid.empty()) return std::vector<int>(m, fallback);
  if (static_cast<int>(spec.grid.size()) != m)
    throw Error(ErrorKind::Validation, "grid has " + std::to_string(spec.grid.size()) +
                                           " counts but the total chart has dimension " + std::to_string(m));
  return spec.grid;
}

// Uniform samples in the scenario box; the stream depends only on the seed.
std::vector<Vec> random_points(const Scenario& s, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int m = s.total.dim();
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(m);
    for (int k = 0; k < m; ++k) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x[k] = s.sample_box[k].first + u * (s.sample_box[k].second - s.sample_box[k].first);
    }
    out.push_back(x);
  }
  return out;
}

const SubmersionMap& pick_map(const Scenario& s, const ExperimentSpec& spec) {
  const std::string which = spec.text("map", "f2");
  if (which == "f1") return s.f1;
  if (which == "f2") return s.f2;
  throw Error(ErrorKind::Validation, "options.map must be f1 or f2, got '" + which + "'");
}

const DiscreteCurve& pick_curve(const Scenario& s, const std::string& space, const std::string& name) {
  const auto& curves = space == "base" ? s.base_curves : s.total_curves;
  if (space != "base" && space != "total")
    throw Error(ErrorKind::Validation, "options.space must be total or base, got '" + space + "'");
  const auto it = curves.find(name);
  if (it == curves.end())
    throw Error(ErrorKind::Registry, "scenario " + s.name + " has no " + space + " curve '" + name + "'");
  return it->second;
}

// Unit vector in the base chart: `direction` (or the first coordinate axis) normalized in h at p.
Vec base_direction(const Scenario& s, const ExperimentSpec& spec, const Vec& p) {
  const int n = s.base.dim();
  Vec d = Vec::Zero(n);
  if (spec.options.contains("direction")) {
    const auto& arr = spec.options.at("direction");
    if (static_cast<int>(arr.size()) != n)
      throw Error(ErrorKind::Validation, "options.direction needs " + std::to_string(n) + " components");
    for (int k = 0; k < n; ++k) d[k] = arr[k].get<double>();
  } else {
    d[0] = 1.0;
  }
  const double norm = metric_at(s.base, p).norm(d);
  if (!(norm > 0.0)) throw Error(ErrorKind::Validation, "options.direction must be nonzero");
  return d / norm;
}

double measured_eps(const Scenario& s, const SubmersionMap& f, const ExperimentSpec& spec, int jobs) {
  if (spec.options.contains("eps")) return spec.option("eps", 0.0);
  const std::vector<Vec> points = s.scatter(64);
  const auto deltas = parallel_map<double>(points.size(), jobs, [&](std::size_t i) { return delta_at(f, points[i]); });
  double eps = 0.0;
  for (double d : deltas) eps = std::max(eps, d);
  return eps;
}

void add_metric(ExperimentResult& r, const std::string& name, double value) { r.metrics.emplace_back(name, value); }

// ---------------------------------------------------------------------------

void run_tensors(const Scenario& s, const ExperimentSpec& spec, int jobs, ExperimentResult& r) {
  std::vector<Vec> points;
  if (spec.options.contains("samples")) {
    const double n = spec.option("samples", 0);
    if (n < 1) throw Error(ErrorKind::Validation, "options.samples must be positive");
    points = random_points(s, static_cast<int>(n), spec.seed);
  } else {
    points = s.grid(grid_counts(s, spec, 8));
  }
  struct Row {
    double d1, ii1, a1, d2, ii2, a2, dist;
  };
  const auto rows = parallel_map<Row>(points.size(), jobs, [&](std::size_t i) {
    const Vec& x = points[i];
    return Row{delta_at(s.f1, x),
               second_fundamental_form_at(s.f1, x).norm,
               integrability_tensor_at(s.f1, x).norm,
               delta_at(s.f2, x),
               second_fundamental_form_at(s.f2, x).norm,
               integrability_tensor_at(s.f2, x).norm,
               map_distance(s.f1, s.f2, {x}, s.trust_radius)};
  });

  Series series{"tensors", {}, {}};
  for (int k = 0; k < s.total.dim(); ++k) series.columns.push_back("x" + std::to_string(k));
  for (const char* c : {"delta_f1", "II_f1", "A_f1", "delta_f2", "II_f2", "A_f2", "d_h"}) series.columns.push_back(c);
  Row sup{0, 0, 0, 0, 0, 0, 0};
  double delta_err = 0.0, ii_err = 0.0, a_err = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& w = rows[i];
    sup = {std::max(sup.d1, w.d1), std::max(sup.ii1, w.ii1), std::max(sup.a1, w.a1), std::max(sup.d2, w.d2),
           std::max(sup.ii2, w.ii2), std::max(sup.a2, w.a2), std::max(sup.dist, w.dist)};
    if (s.delta_oracle) delta_err = std::max(delta_err, std::abs(w.d2 - s.delta_oracle(points[i])));
    if (s.ii_oracle) ii_err = std::max(ii_err, std::abs(w.ii2 - s.ii_oracle(points[i])));
    if (s.a_oracle) a_err = std::max(a_err, std::abs(w.a2 - s.a_oracle(points[i])));
    std::vector<double> row(points[i].data(), points[i].data() + points[i].size());
    row.insert(row.end(), {w.d1, w.ii1, w.a1, w.d2, w.ii2, w.a2, w.dist});
    series.rows.push_back(std::move(row));
  }
  add_metric(r, "points", static_cast<double>(points.size()));
  add_metric(r, "sup_delta_f1", sup.d1);
  add_metric(r, "sup_delta_f2", sup.d2);
  add_metric(r, "sup_II_f1", sup.ii1);
  add_metric(r, "sup_II_f2", sup.ii2);
  add_metric(r, "sup_A_f1", sup.a1);
  add_metric(r, "sup_A_f2", sup.a2);
  add_metric(r, "map_distance", sup.dist);
  add_metric(r, "c0", std::max({sup.ii1, sup.ii2, sup.a1, sup.a2}) * sup.dist);
  if (s.delta_oracle) r.checks.push_back(make_check("delta_oracle_error", delta_err, spec.tolerance("delta", 1e-6)));
  if (s.ii_oracle) r.checks.push_back(make_check("II_oracle_error", ii_err, spec.tolerance("ii", 1e-4)));
  if (s.a_oracle) r.checks.push_back(make_check("A_oracle_error", a_err, spec.tolerance("a", 1e-3)));
  if (s.map_distance_oracle)
    r.checks.push_back(make_check("map_distance_oracle_error", std::abs(sup.dist - *s.map_distance_oracle),
                                  spec.tolerance("map_distance", 1e-4)));
  r.series.push_back(std::move(series));
}

void run_bundle_map(const Scenario& s, const ExperimentSpec& spec, int jobs, ExperimentResult& r) {
  const std::vector<Vec> points = s.grid(grid_counts(s, spec, 8));
  const double fd_step = spec.option("fd_step", 1e-4);
  const bool prop33 = spec.flag("prop33", true);
  const bool transversality = spec.flag("transversality", false);
  const Vec p = s.f2(s.anchor);
  const int m = s.total.dim();

  struct Row {
    PhiDiagnostics d;
    double phi_err = 0.0, dphi_err = 0.0;
    double delta = 0.0, tensor = 0.0, dist = 0.0;
    double transversal = 0.0;
  };
  const auto rows = parallel_map<Row>(points.size(), jobs, [&](std::size_t i) {
    const Vec& x = points[i];
    Row w;
    w.d = phi_diagnostics(s.f1, s.f2, x, s.trust_radius, fd_step);
    if (s.phi_oracle)
      w.phi_err = s.total.difference(w.d.phi_point, s.phi_oracle(x)).cwiseAbs().maxCoeff();
    if (s.dphi_oracle) w.dphi_err = (w.d.dphi - s.dphi_oracle(x)).cwiseAbs().maxCoeff();
    if (prop33) {
      w.delta = std::max(delta_at(s.f1, x), delta_at(s.f2, x));
      for (const SubmersionMap* f : {&s.f1, &s.f2})
        w.tensor = std::max({w.tensor, second_fundamental_form_at(*f, x).norm, integrability_tensor_at(*f, x).norm});
      w.dist = map_distance(s.f1, s.f2, {x}, s.trust_radius);
    }
    if (transversality) w.transversal = transversality_check(s.f1, s.f2, p, x, s.trust_radius, fd_step);
    return w;
  });

  double commutation = 0.0, leakage = 0.0, phi_err = 0.0, dphi_err = 0.0, top = 0.0;
  double sv_min = std::numeric_limits<double>::infinity(), sv_max = 0.0;
  double bot_min = std::numeric_limits<double>::infinity(), bot_max = 0.0;
  double eps = 0.0, tensor = 0.0, dist = 0.0, transversal = std::numeric_limits<double>::infinity();
  int singular = 0;
  Series hist{"singular_values", {}, {}};
  for (int k = 0; k < m; ++k) hist.columns.push_back("x" + std::to_string(k));
  for (int k = 0; k < m; ++k) hist.columns.push_back("sigma" + std::to_string(k));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& w = rows[i];
    commutation = std::max(commutation, w.d.commutation_residual);
    leakage = std::max(leakage, w.d.vertical_leakage);
    phi_err = std::max(phi_err, w.phi_err);
    dphi_err = std::max(dphi_err, w.dphi_err);
    top = std::max(top, w.d.horizontal_top_norm);
    sv_min = std::min(sv_min, w.d.singular_values.minCoeff());
    sv_max = std::max(sv_max, w.d.singular_values.maxCoeff());
    bot_min = std::min(bot_min, w.d.horizontal_bot_range.first);
    bot_max = std::max(bot_max, w.d.horizontal_bot_range.second);
    eps = std::max(eps, w.delta);
    tensor = std::max(tensor, w.tensor);
    dist = std::max(dist, w.dist);
    transversal = std::min(transversal, w.transversal);
    singular += w.d.dphi_singular ? 1 : 0;
    std::vector<double> row(points[i].data(), points[i].data() + m);
    row.insert(row.end(), w.d.singular_values.data(), w.d.singular_values.data() + m);
    hist.rows.push_back(std::move(row));
  }

  add_metric(r, "points", static_cast<double>(points.size()));
  add_metric(r, "max_commutation_residual", commutation);
  add_metric(r, "max_vertical_leakage", leakage);
  add_metric(r, "min_singular_value", sv_min);
  add_metric(r, "max_singular_value", sv_max);
  add_metric(r, "singular_points", singular);
  r.checks.push_back(make_check("commutation_residual", commutation, spec.tolerance("commutation", 1e-6)));
  r.checks.push_back(make_check("vertical_leakage", leakage, spec.tolerance("leakage", 5e-4)));
  if (s.phi_oracle) {
    add_metric(r, "phi_oracle_error", phi_err);
    r.checks.push_back(make_check("phi_oracle_error", phi_err, spec.tolerance("phi", 1e-6)));
  }
  if (s.dphi_oracle) {
    add_metric(r, "dphi_oracle_error", dphi_err);
    r.checks.push_back(make_check("dphi_oracle_error", dphi_err, spec.tolerance("dphi", 1e-4)));
  }
  if (singular > 0) r.flags.push_back("dphi_singular");

  // Proposition-style decomposition: the f2-horizontal part of dΦ on f1-horizontal
  // unit vectors is pinned to [e^{-2ε}, e^{2ε}]; the vertical part is reported
  // through the constant it would need, never asserted.
  if (prop33 && singular == 0) {
    const double c0 = tensor * dist;
    const double tol = spec.tolerance("prop33", 1e-5);
    add_metric(r, "eps", eps);
    add_metric(r, "c0", c0);
    add_metric(r, "horizontal_bot_min", bot_min);
    add_metric(r, "horizontal_bot_max", bot_max);
    add_metric(r, "horizontal_top_norm", top);
    add_metric(r, "fitted_C", c0 > 0.0 ? top / (2.0 * std::exp(4.0 * eps + std::exp(eps) * c0) * c0) : 0.0);
    r.checks.push_back(make_check("horizontal_bot_lower", std::exp(-2.0 * eps) - bot_min, tol));
    r.checks.push_back(make_check("horizontal_bot_upper", bot_max - std::exp(2.0 * eps), tol));
  }
  if (transversality) {
    add_metric(r, "min_transversality", transversal);
    if (transversal < kSingularThreshold) r.flags.push_back("transversality_failure");
  }
  r.series.push_back(std::move(hist));
}

void run_variation(const Scenario& s, const ExperimentSpec& spec, int jobs, ExperimentResult& r) {
  const SubmersionMap& f = pick_map(s, spec);
  const Vec x0 = s.anchor;
  const Mat vertical = split_at(f, x0).vertical;
  if (vertical.cols() == 0) throw Error(ErrorKind::Contract, "map has no fibers of positive dimension");
  const Vec p = f(x0);
  const double radius = spec.option("r", 0.3);
  const Vec w = radius * base_direction(s, spec, p);
  const double eps = measured_eps(s, f, spec, jobs);
  const VariationResult v = variation_bound_experiment(f, TangentVector{x0, vertical.col(0)}, w, eps);
  // Both sides at once: |ln(|∂̃_s| / |v|)| ≤ e^ε|II| r.
  r.bounds.push_back(make_bound("variation", std::abs(std::log(v.ratio)), std::log(v.upper.rhs / v.upper.parameter("v")),
                                spec.tolerance("bound", 1e-6), v.upper.parameters));
  add_metric(r, "ratio", v.ratio);
  add_metric(r, "upper_margin", v.upper.margin);
  add_metric(r, "lower_margin", v.lower.margin);
}

void run_vertical_component(const Scenario& s, const ExperimentSpec& spec, int jobs, ExperimentResult& r) {
  const SubmersionMap& f = pick_map(s, spec);
  const Vec x0 = s.anchor;
  const Vec p0 = f(x0);
  const Vec e1 = base_direction(s, spec, p0);
  Vec e2 = e1;
  if (s.base.dim() >= 2) {
    // h-orthonormal complement of e1 inside the first two axes.
    const MetricAt h = metric_at(s.base, p0);
    Vec t = Vec::Zero(s.base.dim());
    t[std::abs(e1[0]) > std::abs(e1[1]) ? 1 : 0] = 1.0;
    t -= h.inner(t, e1) * e1;
    e2 = t / h.norm(t);
  }
  const GeodesicVariation alpha = geodesic_fan(s.base, p0, e1, e2, spec.option("r", 0.2));
  VerticalComponentOptions options;
  options.constant = spec.option("constant", 2.0);
  const auto bound = s.asserted.find("base_sectional_bound");
  options.base_sectional_bound = bound == s.asserted.end() ? 1.0 : bound->second;
  options.tolerance = spec.tolerance("bound", 1e-5);
  const double eps = measured_eps(s, f, spec, jobs);
  const VerticalComponentResult v = vertical_component_experiment(f, alpha, x0, eps, options);
  r.bounds.push_back(v.report);
  add_metric(r, "fitted_C", v.fitted_constant);
  if (!v.small_r_regime) r.flags.push_back("outside_small_r_regime");
}

void run_deviation(const Scenario& s, const ExperimentSpec& spec, ExperimentResult& r) {
  const std::string space = spec.text("space", "total");
  const ChartedManifold& manifold = space == "base" ? s.base : s.total;
  const DiscreteCurve& alpha = pick_curve(s, space, spec.text("alpha", "alpha"));
  const DiscreteCurve& beta = pick_curve(s, space, spec.text("beta", "beta"));
  const double s_max = spec.option("s_max", std::min(alpha.end_time(), beta.end_time()));
  const int count = static_cast<int>(spec.option("s_count", 32));
  if (count < 1 || !(s_max > 0.0)) throw Error(ErrorKind::Validation, "deviation needs s_count ≥ 1 and s_max > 0");
  std::vector<double> grid;
  for (int k = 1; k <= count; ++k) grid.push_back(s_max * k / count);
  DeviationResult d = deviation_experiment(manifold, alpha, beta, grid, s.trust_radius, spec.tolerance("bound", 1e-9));
  r.bounds.push_back(d.report);
  add_metric(r, "slope", d.slope);
  r.series.push_back(std::move(d.series));
}

void run_holonomy(const Scenario& s, const ExperimentSpec& spec, ExperimentResult& r) {
  const std::string space = spec.text("space", "total");
  const ChartedManifold& manifold = space == "base" ? s.base : s.total;
  const DiscreteCurve& loop = pick_curve(s, space, spec.text("loop", "loop"));
  const MetricAt g = metric_at(manifold, loop.front());
  Vec v0 = Vec::Zero(manifold.dim());
  if (spec.options.contains("direction")) {
    const auto& arr = spec.options.at("direction");
    if (static_cast<int>(arr.size()) != manifold.dim())
      throw Error(ErrorKind::Validation, "options.direction has the wrong dimension");
    for (int k = 0; k < manifold.dim(); ++k) v0[k] = arr[k].get<double>();
  } else {
    v0 = g.from_orthonormal(Vec(Vec::Unit(manifold.dim(), 0)));
  }
  v0 /= g.norm(v0);
  const HolonomyResult h = holonomy_experiment(manifold, loop, v0, spec.tolerance("bound", 1e-9));
  r.bounds.push_back(h.report);
  add_metric(r, "length", h.length);
  add_metric(r, "rotation_angle", h.rotation_angle);
}

void run_bounds(const Scenario& s, const ExperimentSpec& spec, int jobs, ExperimentResult& r) {
  const std::string which = spec.text("experiment", "");
  if (which == "variation") run_variation(s, spec, jobs, r);
  else if (which == "vertical_component") run_vertical_component(s, spec, jobs, r);
  else if (which == "deviation") run_deviation(s, spec, r);
  else if (which == "holonomy") run_holonomy(s, spec, r);
  else throw Error(ErrorKind::Validation, "unknown bounds experiment '" + which + "'");
}

void run_sharpness(const Scenario& s, const ExperimentSpec& spec, ExperimentResult& r) {
  const SharpnessResult sh = sharpness_check(s, grid_counts(s, spec, 32));
  add_metric(r, "gap", sh.gap);
  add_metric(r, "oracle_gap", sh.oracle_gap);
  r.checks.push_back(make_check("oracle_agreement", std::abs(sh.gap - sh.oracle_gap), spec.tolerance("oracle", 1e-3)));
  if (s.params.at("a") == 0.0) r.checks.push_back(make_check("identity_gap", sh.gap, spec.tolerance("identity", 1e-6)));
  else r.checks.push_back(make_check("gap_positive", sh.gap > 0.0 ? 0.0 : 1.0, 0.0));
}

void run_rescale(const Scenario& s, const ExperimentSpec& spec, ExperimentResult& r) {
  const double lambda = spec.option("lambda", 10.0);
  const RescaleResult res = rescaling_invariance_experiment(s.f1, s.f2, lambda, s.grid(grid_counts(s, spec, 6)),
                                                            s.trust_radius, spec.tolerance("drift", 1e-6));
  r.bounds.push_back(res.report);
  add_metric(r, "angle_drift", res.angle_drift);
  add_metric(r, "delta_drift", res.delta_drift);
  add_metric(r, "II_dh", res.ii_product);
  add_metric(r, "II_dh_rescaled", res.ii_product_rescaled);
  add_metric(r, "A_dh", res.a_product);
  add_metric(r, "A_dh_rescaled", res.a_product_rescaled);
}

}  // namespace

ExperimentResult run_experiment(const Scenario& scenario, const ExperimentSpec& spec, int jobs) {
  ExperimentResult r;
  r.name = spec.name;
  r.kind = spec.kind;
  const auto start = Clock::now();
  try {
    if (spec.kind == "tensors") run_tensors(scenario, spec, jobs, r);
    else if (spec.kind == "bundle_map") run_bundle_map(scenario, spec, jobs, r);
    else if (spec.kind == "bounds") run_bounds(scenario, spec, jobs, r);
    else if (spec.kind == "sharpness") run_sharpness(scenario, spec, r);
    else if (spec.kind == "rescale") run_rescale(scenario, spec, r);
    else throw Error(ErrorKind::Validation, "unknown experiment kind '" + spec.kind + "'");
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.wall_seconds = seconds_since(start);
  return r;
}

RunReport run(const ExperimentConfig& config, int jobs) {
  const auto start = Clock::now();
  RunReport report;
  report.version = kVersion;
  report.jobs = jobs > 0 ? jobs : default_jobs();
  report.config = config.source;
  const Scenario scenario = build_scenario(config.scenario, config.params);
  report.scenario = scenario.name;
  report.params = scenario.params;
  report.assumptions = scenario.asserted;
  report.settings = {{"steps_per_unit_length", kStepsPerUnitLength},
                     {"map_fd_step", scenario.f2.fd_step},
                     {"manifold_fd_step", 1e-4},
                     {"log_map_tolerance", LogMapOptions{}.tolerance},
                     {"log_map_accept", LogMapOptions{}.accept},
                     {"singular_threshold", kSingularThreshold},
                     {"numerical_zero", kNumericalZero},
                     {"trust_radius", scenario.trust_radius}};
  for (const auto& spec : config.experiments) report.results.push_back(run_experiment(scenario, spec, report.jobs));
  report.wall_seconds = seconds_since(start);
  return report;
}

}  // namespace sublab
