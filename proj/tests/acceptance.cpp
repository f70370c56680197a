// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned here
// and every expected value comes from a closed form computed in this file.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "sublab/bounds.hpp"
#include "sublab/bundle.hpp"
#include "sublab/runner.hpp"
#include "sublab/scenarios.hpp"
#include "sublab/transport.hpp"

using namespace sublab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && elapsed > budget_seconds) {
    out.pass = false;
    out.detail += " | over time budget";
  }
  if (!out.pass) ++failures;
  std::printf("[%s] criterion %2d: %s — %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.c_str(),
              elapsed);
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// σ with σ + a sin σ = θ, by bisection (independent of the library's Newton solve).
double sigma_bisect(double theta, double a) {
  double lo = theta - a - 1e-12, hi = theta + a + 1e-12;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + a * std::sin(mid) < theta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double wrapped_gap(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)); }

// Unit sphere in (colatitude, longitude): embedding helpers for closed-form geodesics.
Eigen::Vector3d embed(double th, double ph) {
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

Eigen::Vector3d push(double th, double ph, const Vec& v) {
  const Eigen::Vector3d dth(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
  const Eigen::Vector3d dph(-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0);
  return v[0] * dth + v[1] * dph;
}

Vec unit_in(const ChartedManifold& m, const Vec& x, int axis) {
  const MetricAt g = metric_at(m, x);
  Vec e = Vec::Zero(m.dim());
  e[axis] = 1.0;
  return g.from_orthonormal(e);
}

}  // namespace

int main() {
  const int jobs = default_jobs();
  std::printf("acceptance suite (%d workers)\n", jobs);

  criterion(1, "flat_torus_pair Φ and dΦ against the σ-equation", 60.0, [&] {
    const Scenario s = build_scenario("flat_torus_pair", {{"a", 0.3}});
    const double a = 0.3;
    const std::vector<Vec> grid = s.grid({64, 64});
    struct Err {
      double phi, dphi;
    };
    const auto errs = parallel_map<Err>(grid.size(), jobs, [&](std::size_t i) {
      const Vec& x = grid[i];
      const Vec y = construct_phi(s.f1, s.f2, x, s.trust_radius);
      const double sigma = sigma_bisect(x[1], a);
      const double phi = std::max(wrapped_gap(y[0], x[0]), wrapped_gap(y[1], sigma));
      const Mat d = phi_differential(s.f1, s.f2, x, s.trust_radius);
      Mat expect = Mat::Zero(2, 2);
      expect(0, 0) = 1.0;
      expect(1, 1) = 1.0 / (1.0 + a * std::cos(sigma));
      return Err{phi, (d - expect).cwiseAbs().maxCoeff()};
    });
    double phi = 0, dphi = 0;
    for (const auto& e : errs) phi = std::max(phi, e.phi), dphi = std::max(dphi, e.dphi);
    return Outcome{phi < 1e-6 && dphi < 1e-4, fmt("max Φ error %.3e (< 1e-6), max dΦ error %.3e (< 1e-4)", phi, dphi)};
  });

  criterion(2, "bundle contract on flat_torus_pair and hopf", 120.0, [&] {
    std::string detail;
    bool pass = true;
    for (const auto& [name, counts] : std::vector<std::pair<std::string, std::vector<int>>>{
             {"flat_torus_pair", {32, 32}}, {"hopf", {16, 8, 8}}}) {
      const Scenario s = build_scenario(name, {});
      const std::vector<Vec> grid = s.grid(counts);
      const auto diags = parallel_map<PhiDiagnostics>(
          grid.size(), jobs, [&](std::size_t i) { return phi_diagnostics(s.f1, s.f2, grid[i], s.trust_radius); });
      double comm = 0, leak = 0;
      for (const auto& d : diags) comm = std::max(comm, d.commutation_residual), leak = std::max(leak, d.vertical_leakage);
      pass = pass && comm < 1e-6 && leak < 5e-4;
      detail += fmt("%s: residual %.3e, leakage %.3e; ", name.c_str(), comm, leak);
    }
    return Outcome{pass, detail + "limits 1e-6 / 5e-4"};
  });

  criterion(3, "holonomy suite", 30.0, [&] {
    const Scenario torus = build_scenario("flat_torus_pair", {});
    const DiscreteCurve& flat_loop = torus.total_curves.at("loop");
    const HolonomyResult flat = holonomy_experiment(torus.total, flat_loop, unit_in(torus.total, flat_loop.front(), 0));

    const Scenario sp = build_scenario("sphere_product", {});
    const ChartedManifold& sphere = sp.base;
    const DiscreteCurve& tri = sp.base_curves.at("loop");
    const DiscreteCurve& half = sp.base_curves.at("loop_half");
    const HolonomyResult full = holonomy_experiment(sphere, tri, unit_in(sphere, tri.front(), 0));
    const HolonomyResult small = holonomy_experiment(sphere, half, unit_in(sphere, half.front(), 0));
    // Rotation by the enclosed area π/2: |v − Rv|² = (2 sin(π/4))².
    const double expected = std::pow(2.0 * std::sin(kPi / 4.0), 2);
    const double ratio = small.report.lhs / full.report.lhs;
    const bool flat_ok = flat.report.lhs == 0.0 && flat.report.pass;
    const bool tri_ok = std::abs(full.report.lhs - expected) <= 1e-3 && full.report.pass;
    const bool scale_ok = std::abs(ratio - 0.25) <= 0.3 * 0.25;
    return Outcome{flat_ok && tri_ok && scale_ok,
                   fmt("flat lhs %.3e; triangle lhs %.6f (expect 2 ± 1e-3) ≤ rhs %.4g; halved/full lhs ratio %.4f "
                       "(window 0.25 ± 30%%); halved/full holonomy angle ratio %.4f",
                       flat.report.lhs, full.report.lhs, full.report.rhs, ratio,
                       small.rotation_angle / full.rotation_angle)};
  });

  criterion(4, "deviation suite", 60.0, [&] {
    std::vector<double> grid;
    for (int k = 1; k <= 32; ++k) grid.push_back(k / 32.0);
    const Scenario plane = build_scenario("plane_curves", {{"R", 1.0}});
    const DeviationResult bench = deviation_experiment(plane.total, plane.total_curves.at("alpha"),
                                                       plane.total_curves.at("beta"), grid, plane.trust_radius);
    // Unit circle tangent to the line: r(s) = 1 − cos s.
    double oracle = 0;
    for (const auto& row : bench.series.rows) oracle = std::max(oracle, std::abs(row[1] - (1.0 - std::cos(row[0]))));
    const Scenario pt = build_scenario("perturbed_torus", {});
    const DeviationResult run = deviation_experiment(pt.total, pt.total_curves.at("alpha"), pt.total_curves.at("beta"),
                                                     grid, pt.trust_radius);
    const bool pass = bench.report.pass && bench.report.margin > 0 && oracle < 1e-8 && run.report.pass &&
                      run.slope >= 1.25 && run.slope <= 2.0;
    return Outcome{pass, fmt("circle/line worst margin %.3e, r(s) oracle error %.2e; perturbed torus margin %.3e, "
                             "slope %.4f (window [1.25, 2])",
                             bench.report.margin, oracle, run.report.margin, run.slope)};
  });

  criterion(5, "variation suite", 120.0, [&] {
    const Scenario hopf = build_scenario("hopf", {});
    const Vec x0 = hopf.anchor;
    const Vec p0 = hopf.f1(x0);
    const Vec e1 = unit_in(hopf.base, p0, 0), e2 = unit_in(hopf.base, p0, 1);
    const Mat vertical = split_at(hopf.f1, x0).vertical;
    const VariationResult var =
        variation_bound_experiment(hopf.f1, TangentVector{x0, vertical.col(0)}, Vec(0.3 * e1), 0.0);

    const Scenario product = build_scenario("sphere_product", {});
    const Vec q0 = product.f1(product.anchor);
    VerticalComponentOptions popt;
    popt.base_sectional_bound = product.asserted.at("base_sectional_bound");
    const VerticalComponentResult flat = vertical_component_experiment(
        product.f1,
        geodesic_fan(product.base, q0, unit_in(product.base, q0, 0), unit_in(product.base, q0, 1), 0.3),
        product.anchor, 0.0, popt);

    VerticalComponentOptions hopt;
    hopt.base_sectional_bound = hopf.asserted.at("base_sectional_bound");
    std::vector<double> lhs;
    bool bound_ok = true;
    double fitted = 0;
    for (double r : {0.1, 0.2, 0.4}) {
      const VerticalComponentResult v =
          vertical_component_experiment(hopf.f1, geodesic_fan(hopf.base, p0, e1, e2, r), x0, 0.0, hopt);
      lhs.push_back(v.report.lhs);
      bound_ok = bound_ok && v.report.pass;
      fitted = std::max(fitted, v.fitted_constant);
    }
    const double q1 = lhs[1] / lhs[0], q2 = lhs[2] / lhs[1];
    const bool linear = std::abs(q1 - 2.0) <= 0.3 && std::abs(q2 - 2.0) <= 0.3;
    const bool pass = std::abs(var.ratio - 1.0) <= 1e-3 && var.upper.pass && var.lower.pass && flat.report.lhs < 1e-5 &&
                      bound_ok && linear;
    return Outcome{pass, fmt("Hopf ratio %.8f; product vertical part %.2e; Hopf lhs(0.1,0.2,0.4) = %.4e, %.4e, %.4e "
                             "(doubling ratios %.3f, %.3f; fitted C %.3f, bound with C = 2 %s)",
                             var.ratio, flat.report.lhs, lhs[0], lhs[1], lhs[2], q1, q2, fitted,
                             bound_ok ? "holds" : "fails")};
  });

  criterion(6, "rescaling invariance on flat_torus_pair", 10.0, [&] {
    const Scenario s = build_scenario("flat_torus_pair", {{"a", 0.3}});
    const std::vector<Vec> grid = s.grid({8, 8});
    double worst = 0;
    bool pass = true;
    for (double lambda : {10.0, 1 / 0.3, 1 / 0.1, 1 / 0.03}) {
      const RescaleResult r = rescaling_invariance_experiment(s.f1, s.f2, lambda, grid, s.trust_radius, 1e-6);
      worst = std::max(worst, r.report.lhs);
      pass = pass && r.report.pass && r.angle_drift < 1e-6;
    }
    return Outcome{pass, fmt("worst drift %.3e over λ ∈ {10, 1/0.3, 1/0.1, 1/0.03} (< 1e-6)", worst)};
  });

  criterion(7, "sharpness of C⁰ closeness", 60.0, [&] {
    const Scenario s3 = build_scenario("flat_torus_pair", {{"a", 0.3}});
    const SharpnessResult g3 = sharpness_check(s3, {8, 64});
    // sup over σ of |1/(1 + a cos σ)² − 1| is attained at σ = π.
    const double closed = 1.0 / ((1.0 - 0.3) * (1.0 - 0.3)) - 1.0;
    const Scenario s0 = build_scenario("flat_torus_pair", {{"a", 0.0}});
    const SharpnessResult g0 = sharpness_check(s0, {8, 64});
    const bool pass = g3.gap > 0 && std::abs(g3.gap - closed) <= 1e-3 && g0.gap < 1e-6;
    return Outcome{pass, fmt("a = 0.3 gap %.6f vs closed form %.6f; a = 0 gap %.2e", g3.gap, closed, g0.gap)};
  });

  criterion(8, "numerical geometry baseline", 0.0, [&] {
    const double ricci = curvature_at(flat_torus(2), (Vec(2) << 0.3, 1.2).finished()).ricci_operator_norm;
    const ChartedManifold sphere = round_sphere(1.0);
    const auto sec = curvature_at(sphere, (Vec(2) << kPi / 3, 0.4).finished()).sectional_range;

    // Geodesic from (θ0, φ0) against the great circle through the embedding.
    const double th = kPi / 2 - 0.3, ph = 0.2;
    const Vec x0 = (Vec(2) << th, ph).finished();
    Vec v0 = (Vec(2) << 0.6, 0.9).finished();
    v0 /= metric_at(sphere, x0).norm(v0);
    const Eigen::Vector3d p = embed(th, ph), t = push(th, ph, v0);
    const Eigen::Vector3d q = std::cos(1.0) * p + std::sin(1.0) * t;
    const Eigen::Vector3d exact(std::acos(q.z()), std::atan2(q.y(), q.x()), 0.0);
    auto err = [&](int steps) {
      const Vec e = geodesic_endpoint(sphere, x0, v0, 1.0, steps);
      return std::hypot(e[0] - exact[0], std::remainder(e[1] - exact[1], 2 * kPi));
    };
    const double e4 = err(4), e8 = err(8), e16 = err(16);
    const double r1 = e4 / e8, r2 = e8 / e16;

    const Scenario sp = build_scenario("sphere_product", {});
    const DiscreteCurve& tri = sp.base_curves.at("loop");
    const Vec w0 = unit_in(sphere, tri.front(), 1);
    const TransportResult tr = parallel_transport(sphere, tri, w0);
    double drift = 0;
    for (std::size_t i = 0; i < tri.size(); ++i)
      drift = std::max(drift, std::abs(metric_at(sphere, tri.points[i]).norm(tr.field[i]) - 1.0));

    const bool pass = ricci < 1e-5 && std::abs(sec.first - 1) <= 1e-3 && std::abs(sec.second - 1) <= 1e-3 &&
                      r1 >= 8 && r2 >= 8 && drift < 1e-8;
    return Outcome{pass, fmt("flat Ricci %.2e; sphere sectional [%.6f, %.6f]; step-halving ratios %.2f, %.2f; "
                             "transport norm drift %.2e",
                             ricci, sec.first, sec.second, r1, r2, drift)};
  });

  criterion(9, "transversality failure witness on torus3_orthogonal", 0.0, [&] {
    const Scenario s = build_scenario("torus3_orthogonal", {});
    const Vec p = s.f2(s.anchor);
    double worst = 0;
    int singular = 0;
    const std::vector<Vec> grid = s.grid({4, 4, 4});
    for (const Vec& x : grid) {
      worst = std::max(worst, std::abs(transversality_check(s.f1, s.f2, p, x, s.trust_radius)));
      singular += phi_diagnostics(s.f1, s.f2, x, s.trust_radius).dphi_singular ? 1 : 0;
    }
    const bool pass = worst <= 1e-5 && singular == static_cast<int>(grid.size());
    return Outcome{pass, fmt("max |transversality| %.2e (0 ± 1e-5); dΦ flagged singular at %d/%zu points", worst,
                             singular, grid.size())};
  });

  criterion(10, "determinism across 1, 4 and 8 workers", 0.0, [&] {
    const ExperimentConfig config = load_config(SUBLAB_SOURCE_DIR "/configs/torus_a03_full.json");
    const std::string one = numeric_content(run(config, 1));
    const std::string four = numeric_content(run(config, 4));
    const std::string eight = numeric_content(run(config, 8));
    const bool pass = one == four && one == eight;
    return Outcome{pass, fmt("report content %zu bytes, %s", one.size(), pass ? "byte-identical" : "differs")};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
