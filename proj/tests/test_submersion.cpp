#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sublab/scenarios.hpp"
#include "sublab/submersion.hpp"
#include "support.hpp"

using namespace sublab;
using testing::kPi;
using testing::vec;

namespace {

Mat central_jacobian(const SubmersionMap& f, const Vec& x, double h) {
  Mat j(f.base.dim(), f.total.dim());
  for (int i = 0; i < f.total.dim(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    j.col(i) = f.base.difference(f.map_field(p), f.map_field(m)) / (2 * h);
  }
  return j;
}

std::vector<Vec> sample_points(const Scenario& s, int count, std::uint64_t seed) {
  testing::Rng rng(seed);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(s.total.dim());
    for (int k = 0; k < x.size(); ++k) x[k] = rng.uniform(s.sample_box[k].first, s.sample_box[k].second);
    out.push_back(x);
  }
  return out;
}

SubmersionMap identity_map(const ChartedManifold& m) {
  return SubmersionMap{"identity", m, m, [](const Vec& x) { return x; },
                       [m](const Vec&) { return Mat(Mat::Identity(m.dim(), m.dim())); }, 1e-4};
}

Mat column(const Vec& v) {
  Mat out(v.size(), 1);
  out.col(0) = v;
  return out;
}

}  // namespace

TEST_CASE("differential") {
  const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
  SUBCASE("canonical projection") {
    const Mat j = differential_at(torus.f1, vec({0.4, 1.0}));
    CHECK(j(0, 0) == 0.0);
    CHECK(j(0, 1) == 1.0);
  }
  SUBCASE("twisted projection agrees with a finite-difference oracle") {
    const Mat j = differential_at(torus.f2, vec({0.4, 0.0}));
    const Mat oracle = central_jacobian(torus.f2, vec({0.4, 0.0}), 1e-5);
    CHECK(std::abs(j(0, 1) - 1.3) < 1e-6);
    CHECK(std::abs(j(0, 1) - oracle(0, 1)) < 1e-6);
    CHECK(std::abs(j(0, 0)) < 1e-12);
  }
  SUBCASE("numeric jacobian without a closed form") {
    SubmersionMap f = torus.f2;
    f.jacobian_field.reset();
    CHECK(std::abs(differential_at(f, vec({0.4, 0.0}))(0, 1) - 1.3) < 1e-6);
  }
  SUBCASE("hopf is a full-rank submersion") {
    const Scenario hopf = build_scenario("hopf");
    for (const Vec& x : sample_points(hopf, 10, 4)) {
      const Mat j = differential_at(hopf.f1, x);
      const Mat oracle = central_jacobian(hopf.f1, x, 1e-5);
      CHECK((j - oracle).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(horizontal_singular_values(hopf.f1, x).minCoeff() > 0.9);
      CHECK(horizontal_singular_values(hopf.f2, x).minCoeff() > 0.9);
    }
  }
  SUBCASE("rank deficiency") {
    const ChartedManifold plane = flat_plane(2.0);
    SubmersionMap fold{"fold", plane, flat_line(-5.0, 5.0), [](const Vec& x) { return vec({x[0] * x[0]}); },
                       std::nullopt, 1e-4};
    try {
      differential_at(fold, vec({0.0, 0.3}));
      FAIL("expected not-a-submersion");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotASubmersion);
    }
  }
}

TEST_CASE("vertical and horizontal split") {
  SUBCASE("canonical and twisted torus are vertical along the first axis") {
    const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
    for (const auto* f : {&torus.f1, &torus.f2}) {
      const VerticalSplit s = split_at(*f, vec({0.3, 2.0}));
      CHECK(std::abs(std::abs(s.vertical(0, 0)) - 1.0) < 1e-12);
      CHECK(std::abs(s.vertical(1, 0)) < 1e-12);
      CHECK(std::abs(std::abs(s.horizontal(1, 0)) - 1.0) < 1e-12);
    }
  }
  SUBCASE("contract holds on every scenario") {
    for (const auto& info : list_scenarios()) {
      const Scenario sc = build_scenario(info.name, {}, false);
      for (const Vec& x : sample_points(sc, 10, 9)) {
        for (const auto* f : {&sc.f1, &sc.f2}) {
          const VerticalSplit s = split_at(*f, x);
          const MetricAt g = metric_at(sc.total, x);
          const MetricAt h = metric_at(sc.base, (*f)(x));
          const Mat j = differential_at(*f, x);
          for (int a = 0; a < s.vertical.cols(); ++a) CHECK(h.norm(j * s.vertical.col(a)) < 1e-8);
          Mat all(x.size(), x.size());
          all << s.vertical, s.horizontal;
          CHECK((all.transpose() * g.g * all - Mat::Identity(x.size(), x.size())).cwiseAbs().maxCoeff() < 1e-10);
          // Horizontal singular values sit inside the δ band.
          const double d = delta_at(*f, x);
          const Vec sv = horizontal_singular_values(*f, x);
          CHECK(sv.maxCoeff() <= std::exp(d) * (1 + 1e-10));
          CHECK(sv.minCoeff() >= std::exp(-d) * (1 - 1e-10));
          const Mat p = horizontal_projector(*f, x);
          CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-10);
          CHECK((p * s.horizontal - s.horizontal).cwiseAbs().maxCoeff() < 1e-10);
        }
      }
    }
  }
  SUBCASE("horizontal preimage") {
    const Scenario hopf = build_scenario("hopf");
    const Vec x = hopf.anchor;
    const Vec w = vec({0.3, -0.2});
    const Vec u = horizontal_preimage(hopf.f2, x, w);
    CHECK((differential_at(hopf.f2, x) * u - w).norm() < 1e-12);
    CHECK((horizontal_projector(hopf.f2, x) * u - u).norm() < 1e-12);
  }
}

TEST_CASE("delta") {
  const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
  CHECK(delta_at(torus.f1, vec({0.1, 0.7})) == 0.0);
  CHECK(delta_at(torus.f2, vec({0.1, 0.0})) == doctest::Approx(0.26236).epsilon(1e-5));
  CHECK(std::abs(delta_at(torus.f2, vec({0.1, 0.0})) - std::log(1.3)) < 1e-6);
  for (double t : {0.5, 2.0, kPi}) CHECK(std::abs(delta_at(torus.f2, vec({0.0, t})) - std::abs(std::log(1 + 0.3 * std::cos(t)))) < 1e-12);

  const Scenario hopf = build_scenario("hopf");
  for (const Vec& x : sample_points(hopf, 10, 5)) {
    CHECK(delta_at(hopf.f1, x) < 1e-6);
    CHECK(delta_at(hopf.f2, x) < 1e-6);
  }
  SUBCASE("invariant under simultaneous rescaling") {
    for (double lambda : {0.1, 3.0, 100.0}) {
      const SubmersionMap r = torus.f2.rescaled(lambda, lambda);
      for (double t : {0.0, 1.0, 2.5}) CHECK(std::abs(delta_at(r, vec({0.2, t})) - delta_at(torus.f2, vec({0.2, t}))) < 1e-10);
    }
  }
}

TEST_CASE("second fundamental form") {
  const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
  for (const Vec& x : sample_points(torus, 10, 6)) {
    CHECK(second_fundamental_form_at(torus.f1, x).norm < 1e-5);
    CHECK(second_fundamental_form_at(torus.f2, x).norm < 1e-5);
  }
  const Scenario hopf = build_scenario("hopf");
  for (const Vec& x : sample_points(hopf, 10, 7)) CHECK(second_fundamental_form_at(hopf.f1, x).norm < 1e-4);

  SUBCASE("warped product fibers have |w'/w|") {
    const double b = 0.5;
    const Scenario warped = build_scenario("warped_product", {{"b", b}});
    for (double r : {-0.6, -0.1, 0.0, 0.3, 0.7}) {
      const double oracle = std::abs(2 * b * r / (1 + b * r * r));
      CHECK(std::abs(second_fundamental_form_at(warped.f1, vec({r, 1.3})).norm - oracle) < 1e-4);
    }
  }
  SUBCASE("scales by 1/λ when only the total metric grows by λ²") {
    const Scenario warped = build_scenario("warped_product");
    const Vec x = vec({0.4, 2.0});
    const double base = second_fundamental_form_at(warped.f1, x).norm;
    const double scaled = second_fundamental_form_at(warped.f1.rescaled(25.0, 1.0), x).norm;
    CHECK(scaled * 5.0 == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("integrability tensor") {
  const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
  for (const Vec& x : sample_points(torus, 10, 8)) {
    CHECK(integrability_tensor_at(torus.f1, x).norm < 1e-5);
    CHECK(integrability_tensor_at(torus.f2, x).norm < 1e-5);
  }
  const Scenario product = build_scenario("sphere_product");
  for (const Vec& x : sample_points(product, 10, 8)) CHECK(integrability_tensor_at(product.f1, x).norm < 1e-6);

  SUBCASE("hopf: constant and equal to the bracket of an explicit frame") {
    const Scenario hopf = build_scenario("hopf");
    const auto points = sample_points(hopf, 10, 10);
    // Horizontal frame X = ∂η, Y = tan η ∂ξ₁ − cot η ∂ξ₂; fiber direction T = ∂ξ₁ + ∂ξ₂.
    // The bracket is differentiated numerically from the frame coefficients.
    auto frame_y = [](double eta) { return vec({0.0, std::tan(eta), -1.0 / std::tan(eta)}); };
    std::vector<double> values;
    for (const Vec& x : points) {
      const double eta = x[0], h = 1e-5;
      const Vec bracket = (frame_y(eta + h) - frame_y(eta - h)) / (2 * h);
      const MetricAt g = metric_at(hopf.total, x);
      const Vec t = vec({0.0, 1.0, 1.0}) / g.norm(vec({0.0, 1.0, 1.0}));
      const double oracle = std::abs(g.inner(bracket, t)) / (g.norm(vec({1.0, 0.0, 0.0})) * g.norm(frame_y(eta)));
      const double value = integrability_tensor_at(hopf.f1, x).norm;
      CHECK(std::abs(value - oracle) < 1e-3);
      values.push_back(value);
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    CHECK(*lo > 0.0);
    CHECK(*hi - *lo < 1e-3);
  }
}

TEST_CASE("dihedral angle") {
  const ChartedManifold r3 = flat_torus(3);
  const Vec x = vec({1.0, 1.0, 1.0});
  const double a = 0.4;
  const Mat v1 = column(vec({1.0, 0.0, 0.0}));
  const Mat v2 = column(vec({std::cos(a), std::sin(a), 0.0}));
  CHECK(dihedral_angle(r3, x, v1, v1) < 1e-15);
  CHECK(std::abs(dihedral_angle(r3, x, v1, v2) - 0.4) < 1e-8);
  CHECK(std::abs(sampled_hausdorff_angle(r3, x, v1, v2, 10000, 1) - 0.4) < 1e-3);
  CHECK(dihedral_angle(r3, x, v1, v2) == dihedral_angle(r3, x, v2, v1));
  CHECK(dihedral_angle(r3.rescaled(49.0), x, v1, v2) == doctest::Approx(dihedral_angle(r3, x, v1, v2)).epsilon(1e-14));

  SUBCASE("planes and the triangle inequality") {
    testing::Rng rng(12);
    auto random_plane = [&] {
      Mat p(3, 2);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) p(i, j) = rng.uniform(-1, 1);
      return p;
    };
    for (int n = 0; n < 30; ++n) {
      const Mat p = random_plane(), q = random_plane(), s = random_plane();
      const double pq = dihedral_angle(r3, x, p, q), qs = dihedral_angle(r3, x, q, s), ps = dihedral_angle(r3, x, p, s);
      CHECK(ps <= pq + qs + 1e-8);
      CHECK(pq == dihedral_angle(r3, x, q, p));
      // Two planes in R³ meet at the angle between their normals.
      const Eigen::Vector3d np = Eigen::Vector3d(p.col(0)).cross(Eigen::Vector3d(p.col(1))).normalized();
      const Eigen::Vector3d nq = Eigen::Vector3d(q.col(0)).cross(Eigen::Vector3d(q.col(1))).normalized();
      CHECK(std::abs(pq - std::acos(std::min(1.0, std::abs(np.dot(nq))))) < 1e-7);
    }
  }
  SUBCASE("dimension mismatch") {
    try {
      dihedral_angle(r3, x, v1, Mat(Mat::Identity(3, 2)));
      FAIL("expected a contract error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Contract);
    }
  }
}

TEST_CASE("map distance") {
  const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
  const std::vector<Vec> grid = torus.grid({4, 64});
  CHECK(map_distance(torus.f1, torus.f1, grid, torus.trust_radius) == 0.0);
  CHECK(std::abs(map_distance(torus.f1, torus.f2, grid, torus.trust_radius) - 0.3) < 1e-4);
  CHECK(map_distance(torus.f1, torus.f2, grid, torus.trust_radius) ==
        map_distance(torus.f2, torus.f1, grid, torus.trust_radius));
  try {
    map_distance(torus.f1, torus.f2, grid, 0.1);
    FAIL("expected out-of-range");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
}

TEST_CASE("locally co-Lipschitz check") {
  SUBCASE("identity with Q = 1") {
    const ChartedManifold plane = flat_plane(5.0);
    CHECK(lcl_check(identity_map(plane), 1.0, vec({0.1, 0.2}), 0.5, 200, 1.0).pass);
  }
  SUBCASE("canonical torus projection with Q = 1") {
    const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
    for (double t : {0.0, 1.0, 3.0})
      for (double r : {0.1, 0.4}) CHECK(lcl_check(torus.f1, 1.0, vec({0.5, t}), r, 200, torus.trust_radius).pass);
  }
  SUBCASE("twisted torus passes at e^0.27 and fails at e^0.1") {
    const Scenario torus = build_scenario("flat_torus_pair", {{"a", 0.3}});
    const Vec x = vec({0.5, 0.0});
    CHECK(lcl_check(torus.f2, std::exp(0.27), x, 0.2, 400, torus.trust_radius).pass);
    const LclResult bad = lcl_check(torus.f2, std::exp(0.1), x, 0.2, 400, torus.trust_radius);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.witness.has_value());
    CHECK(bad.forward_ratio > std::exp(0.1));
  }
  SUBCASE("invalid arguments") {
    const Scenario torus = build_scenario("flat_torus_pair");
    CHECK_THROWS_AS(lcl_check(torus.f1, 0.5, vec({0.5, 0.0}), 0.2, 10, 1.0), Error);
    CHECK_THROWS_AS(lcl_check(torus.f1, 1.0, vec({0.5, 0.0}), 2.0, 10, 1.0), Error);
  }
}

TEST_CASE("Gromov-Hausdorff approximation check") {
  auto circle_distance = [](double a, double b) {
    const double d = std::abs(std::remainder(a - b, 2 * kPi));
    return d;
  };
  const int n = 200;
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = 2 * kPi * i / n;
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = circle_distance(theta[i], theta[j]);

  SUBCASE("identity correspondence") {
    std::vector<int> id(n);
    for (int i = 0; i < n; ++i) id[i] = i;
    const GhaResult r = gha_check(d, d, id, 1e-12);
    CHECK(r.pass);
    CHECK(r.distortion == 0.0);
  }
  SUBCASE("rotated flat tori") {
    // Matched samples of two rotated copies of a flat 2-torus grid.
    const int k = 12;
    const double spacing = 2 * kPi / k;
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) pts.emplace_back(i * spacing, j * spacing);
    const int m = static_cast<int>(pts.size());
    Eigen::MatrixXd dx(m, m), dy(m, m);
    auto torus_distance = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      return std::hypot(circle_distance(a.x(), b.x()), circle_distance(a.y(), b.y()));
    };
    const Eigen::Vector2d shift(0.37, -1.1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        dx(i, j) = torus_distance(pts[i], pts[j]);
        dy(i, j) = torus_distance(pts[i] + shift, pts[j] + shift);
      }
    std::vector<int> id(m);
    for (int i = 0; i < m; ++i) id[i] = i;
    CHECK(gha_check(dx, dy, id, spacing).pass);
  }
  SUBCASE("canonical vs twisted circle graph") {
    const double a = 0.3;
    std::vector<int> corr(n);
    for (int i = 0; i < n; ++i) {
      const double image = theta[i] + a * std::sin(theta[i]);
      int best = 0;
      for (int j = 1; j < n; ++j)
        if (circle_distance(image, theta[j]) < circle_distance(image, theta[best])) best = j;
      corr[i] = best;
    }
    const GhaResult r = gha_check(d, d, corr, 1.0, &d);
    REQUIRE(r.displacement.has_value());
    CHECK(std::abs(*r.displacement - 0.3) < 0.02);
    CHECK(r.density_gap < 0.1);
  }
  SUBCASE("malformed correspondence") {
    CHECK_THROWS_AS(gha_check(d, d, std::vector<int>(3, 0), 1.0), Error);
  }
}
