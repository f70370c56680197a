#include "sublab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sublab/bundle.hpp"
#include "sublab/transport.hpp"

namespace sublab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ChristoffelField zero_christoffel(int dim) {
  return [dim](const Vec&) { return Christoffel(dim); };
}

Vec vec(std::initializer_list<double> values) {
  Vec out(static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) out[i++] = v;
  return out;
}

Mat diag(std::initializer_list<double> values) { return vec(values).asDiagonal(); }

}  // namespace

ChartedManifold flat_torus(int dim) {
  std::vector<Axis> axes(dim, Axis{0.0, kTwoPi, true});
  return ChartedManifold("flat_torus" + std::to_string(dim), axes,
                         [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); },
                         zero_christoffel(dim));
}

ChartedManifold flat_circle() {
  return ChartedManifold("circle", {Axis{0.0, kTwoPi, true}},
                         [](const Vec&) { return Mat(Mat::Identity(1, 1)); }, zero_christoffel(1));
}

ChartedManifold flat_line(double lo, double hi) {
  return ChartedManifold("line", {Axis{lo, hi, false}},
                         [](const Vec&) { return Mat(Mat::Identity(1, 1)); }, zero_christoffel(1));
}

ChartedManifold flat_plane(double half_extent) {
  return ChartedManifold("plane",
                         {Axis{-half_extent, half_extent, false}, Axis{-half_extent, half_extent, false}},
                         [](const Vec&) { return Mat(Mat::Identity(2, 2)); }, zero_christoffel(2));
}

ChartedManifold round_sphere(double radius) {
  const double r2 = radius * radius;
  auto metric = [r2](const Vec& x) {
    const double s = std::sin(x[0]);
    return diag({r2, r2 * s * s});
  };
  auto derivative = [r2](const Vec& x) {
    std::array<Mat, kMaxDim> d;
    d[0] = diag({0.0, 2.0 * r2 * std::sin(x[0]) * std::cos(x[0])});
    d[1] = Mat::Zero(2, 2);
    return d;
  };
  std::ostringstream name;
  name << "sphere(" << radius << ")";
  return ChartedManifold(name.str(), {Axis{0.0, kPi, false}, Axis{0.0, kTwoPi, true}}, metric,
                         closed_form_christoffel(metric, derivative));
}

double twisted_root(double theta, double a) {
  // g(σ) = σ + a sin σ − θ is increasing with g' ≥ 1 − a; σ lies within a of θ.
  double lo = theta - a, hi = theta + a;
  double s = theta;
  for (int it = 0; it < 100; ++it) {
    const double g = s + a * std::sin(s) - theta;
    if (g == 0.0) break;
    if (g > 0.0) hi = s; else lo = s;
    double next = s - g / (1.0 + a * std::cos(s));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-16 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

std::vector<Vec> Scenario::grid(const std::vector<int>& counts) const {
  const int m = total.dim();
  if (static_cast<int>(counts.size()) != m)
    throw Error(ErrorKind::Validation, name + ": grid needs one count per chart axis (" +
                                           std::to_string(m) + ")");
  std::vector<std::vector<double>> axes(m);
  for (int i = 0; i < m; ++i) {
    const int n = counts[i];
    if (n < 1) throw Error(ErrorKind::Validation, "grid counts must be positive");
    const auto [lo, hi] = sample_box[i];
    const Axis& axis = total.domain()[i];
    // A full periodic axis is sampled at lo + kL/n; everything else cell-centred.
    const bool full = axis.periodic && lo == axis.lo && hi == axis.hi;
    for (int k = 0; k < n; ++k)
      axes[i].push_back(full ? lo + (hi - lo) * k / n : lo + (hi - lo) * (k + 0.5) / n);
  }
  std::vector<Vec> out;
  std::vector<int> idx(m, 0);
  while (true) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = axes[i][idx[i]];
    out.push_back(x);
    int i = m - 1;
    while (i >= 0 && ++idx[i] == counts[i]) idx[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

std::vector<Vec> Scenario::scatter(int count) const {
  static constexpr double kRoots[] = {1.4142135623730951, 1.7320508075688772, 2.2360679774997898,
                                      2.6457513110645907};
  const int m = total.dim();
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(m);
    for (int k = 0; k < m; ++k) {
      const double u = std::fmod(0.5 + (i + 1) * kRoots[k], 1.0);
      x[k] = sample_box[k].first + (sample_box[k].second - sample_box[k].first) * u;
    }
    out.push_back(x);
  }
  return out;
}

namespace {

Eigen::Vector3d sphere_point(double theta, double phi) {
  return Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                         std::cos(theta));
}

// Builds one great-circle arc as a chart curve with unwrapped longitude.
DiscreteCurve arc_curve(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double per_unit) {
  const double angle = std::acos(std::clamp(from.dot(to), -1.0, 1.0));
  const Eigen::Vector3d b = (to - std::cos(angle) * from).normalized();
  const int n = std::max(8, static_cast<int>(std::ceil(angle * per_unit)));
  DiscreteCurve c;
  double last_phi = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i == n ? angle : angle * i / n;
    const Eigen::Vector3d p = std::cos(t) * from + std::sin(t) * b;
    const Eigen::Vector3d dp = -std::sin(t) * from + std::cos(t) * b;
    const double theta = std::acos(std::clamp(p.z(), -1.0, 1.0));
    double phi = std::atan2(p.y(), p.x());
    if (i > 0) phi += kTwoPi * std::round((last_phi - phi) / kTwoPi);
    last_phi = phi;
    const double rho2 = p.x() * p.x() + p.y() * p.y();
    c.times.push_back(t);
    c.points.push_back(vec({theta, phi}));
    c.velocities.push_back(vec({-dp.z() / std::sin(theta), (p.x() * dp.y() - p.y() * dp.x()) / rho2}));
  }
  return c;
}

}  // namespace

DiscreteCurve sphere_right_triangle(double shrink, double nodes_per_unit_length) {
  const Eigen::Vector3d centroid = Eigen::Vector3d(1.0, 1.0, 1.0).normalized();
  // Centroid on the equator at longitude 0: every edge stays well away from the
  // chart poles (where the measured C and μ blow up) and from the longitude seam.
  const Eigen::Quaterniond rot =
      Eigen::Quaterniond::FromTwoVectors(centroid, Eigen::Vector3d::UnitX());
  std::array<Eigen::Vector3d, 3> v;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(i);
    const double angle = std::acos(centroid.dot(e));
    const Eigen::Vector3d dir = (e - std::cos(angle) * centroid).normalized();
    const Eigen::Vector3d p = std::cos(shrink * angle) * centroid + std::sin(shrink * angle) * dir;
    v[i] = rot * p;
  }
  std::vector<DiscreteCurve> pieces;
  for (int i = 0; i < 3; ++i) pieces.push_back(arc_curve(v[i], v[(i + 1) % 3], nodes_per_unit_length));
  return concatenate(pieces);
}

DiscreteCurve square_loop(const Vec& corner, double side, int nodes_per_side) {
  const Vec dirs[4] = {vec({1.0, 0.0}), vec({0.0, 1.0}), vec({-1.0, 0.0}), vec({0.0, -1.0})};
  std::vector<DiscreteCurve> pieces;
  Vec start = corner;
  for (const Vec& d : dirs) {
    const Vec s0 = start;
    pieces.push_back(sample_curve([s0, d](double t) { return Vec(s0 + t * d); },
                                  [d](double) { return d; }, 0.0, side, nodes_per_side));
    start = s0 + side * d;
  }
  return concatenate(pieces);
}

namespace {

void validate_params(const ScenarioInfo& info, const ParamMap& given, ParamMap& out) {
  for (const ParamSpec& p : info.params) out[p.name] = p.default_value;
  for (const auto& [key, value] : given) {
    auto it = std::find_if(info.params.begin(), info.params.end(),
                           [&](const ParamSpec& p) { return p.name == key; });
    if (it == info.params.end())
      throw Error(ErrorKind::Validation, info.name + ": unknown parameter '" + key + "'");
    const bool above = it->hi_inclusive ? value > it->hi : value >= it->hi;
    if (!std::isfinite(value) || value < it->lo || above) {
      std::ostringstream os;
      os << info.name << ": parameter '" << key << "' = " << value << " outside [" << it->lo
         << ", " << it->hi << (it->hi_inclusive ? "]" : ")");
      throw Error(ErrorKind::Validation, os.str());
    }
    out[key] = value;
  }
}

SubmersionMap make_map(std::string name, const ChartedManifold& total, const ChartedManifold& base,
                       MapField field, JacobianField jacobian) {
  return SubmersionMap{std::move(name), total, base, std::move(field), std::move(jacobian), 1e-4};
}

Scenario make_scenario(const std::string& name, const ParamMap& params, ChartedManifold total,
                       ChartedManifold base, SubmersionMap f1, SubmersionMap f2) {
  return Scenario{name, params, std::move(total), std::move(base), std::move(f1), std::move(f2),
                  0.5, {}, {}, Vec(), {}, {}, {}, {}, {}, {}, {}, {}, {}};
}

std::vector<std::pair<double, double>> full_box(const ChartedManifold& m) {
  std::vector<std::pair<double, double>> box;
  for (const Axis& a : m.domain()) box.emplace_back(a.lo, a.hi);
  return box;
}

Scenario build_flat_torus_pair(const ParamMap& params) {
  const double a = params.at("a");
  const ChartedManifold total = flat_torus(2);
  const ChartedManifold base = flat_circle();
  SubmersionMap f1 = make_map("canonical", total, base, [](const Vec& x) { return vec({x[1]}); },
                              [](const Vec&) {
                                Mat j(1, 2);
                                j << 0.0, 1.0;
                                return j;
                              });
  SubmersionMap f2 = make_map(
      "twisted", total, base, [a](const Vec& x) { return vec({x[1] + a * std::sin(x[1])}); },
      [a](const Vec& x) {
        Mat j(1, 2);
        j << 0.0, 1.0 + a * std::cos(x[1]);
        return j;
      });
  Scenario s = make_scenario("flat_torus_pair", params, total, base, f1, f2);
  s.trust_radius = 1.5;
  s.sample_box = full_box(total);
  s.anchor = vec({0.5, 0.0});
  s.asserted = {{"base_sectional_bound", 0.0}, {"total_sectional_bound", 0.0},
                {"injectivity_radius_standin", s.trust_radius}, {"fibers_compact", 1.0}};
  s.phi_oracle = [total, a](const Vec& x) {
    return total.wrap(vec({x[0], twisted_root(x[1], a)}));
  };
  s.dphi_oracle = [a](const Vec& x) {
    const double sigma = twisted_root(x[1], a);
    return diag({1.0, 1.0 / (1.0 + a * std::cos(sigma))});
  };
  s.delta_oracle = [a](const Vec& x) { return std::abs(std::log(1.0 + a * std::cos(x[1]))); };
  s.ii_oracle = [](const Vec&) { return 0.0; };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.sup_delta = a > 0.0 ? std::max(std::log(1.0 + a), -std::log(1.0 - a)) : 0.0;
  s.map_distance_oracle = a;
  s.total_curves["loop"] = square_loop(vec({0.5, 0.5}), 1.0, 256);
  s.total_curves["loop_half"] = square_loop(vec({0.5, 0.5}), 0.5, 128);
  return s;
}

// S³(1) in Hopf angles (η, ξ₁, ξ₂) ↦ (cos η e^{iξ₁}, sin η e^{iξ₂}).
ChartedManifold hopf_total() {
  auto metric = [](const Vec& x) {
    const double c = std::cos(x[0]), s = std::sin(x[0]);
    return diag({1.0, c * c, s * s});
  };
  auto derivative = [](const Vec& x) {
    const double sc = std::sin(x[0]) * std::cos(x[0]);
    std::array<Mat, kMaxDim> d;
    d[0] = diag({0.0, -2.0 * sc, 2.0 * sc});
    d[1] = Mat::Zero(3, 3);
    d[2] = Mat::Zero(3, 3);
    return d;
  };
  return ChartedManifold("S3", {Axis{0.0, kPi / 2, false}, Axis{0.0, kTwoPi, true}, Axis{0.0, kTwoPi, true}},
                         metric, closed_form_christoffel(metric, derivative));
}

// Rotation of the base sphere about the x-axis, in the (θ, φ) chart.
struct BaseRotation {
  Eigen::Matrix3d r;

  Vec apply(const Vec& y) const {
    const Eigen::Vector3d u = r * sphere_point(y[0], y[1]);
    return vec({std::acos(std::clamp(u.z(), -1.0, 1.0)), std::atan2(u.y(), u.x())});
  }
  Mat jacobian(const Vec& y) const {
    const double t = y[0], p = y[1];
    Eigen::Matrix<double, 3, 2> embed;
    embed << std::cos(t) * std::cos(p), -std::sin(t) * std::sin(p),
        std::cos(t) * std::sin(p), std::sin(t) * std::cos(p), -std::sin(t), 0.0;
    const Eigen::Vector3d u = r * sphere_point(t, p);
    const double rho2 = u.x() * u.x() + u.y() * u.y();
    Eigen::Matrix<double, 2, 3> chart;
    chart << 0.0, 0.0, -1.0 / std::sqrt(rho2), -u.y() / rho2, u.x() / rho2, 0.0;
    return Mat(chart * r * embed);
  }
};

Scenario build_hopf(const ParamMap& params) {
  const double angle = params.at("rotation");
  const ChartedManifold total = hopf_total();
  const ChartedManifold base = round_sphere(0.5);
  auto hopf = [](const Vec& x) { return vec({2.0 * x[0], x[2] - x[1]}); };
  auto hopf_jac = [](const Vec&) {
    Mat j(2, 3);
    j << 2.0, 0.0, 0.0, 0.0, -1.0, 1.0;
    return j;
  };
  BaseRotation rot{Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix()};
  SubmersionMap f1 = make_map("hopf", total, base, hopf, hopf_jac);
  SubmersionMap f2 = make_map(
      "rotated_hopf", total, base, [rot, hopf](const Vec& x) { return rot.apply(hopf(x)); },
      [rot, hopf, hopf_jac](const Vec& x) { return Mat(rot.jacobian(hopf(x)) * hopf_jac(x)); });
  Scenario s = make_scenario("hopf", params, total, base, f1, f2);
  s.trust_radius = 0.5;
  s.sample_box = {{0.45, 1.12}, {0.0, kTwoPi}, {0.0, kTwoPi}};
  s.anchor = vec({0.7, 0.3, 1.1});
  s.asserted = {{"base_sectional_bound", 4.0}, {"total_sectional_bound", 1.0},
                {"injectivity_radius_standin", s.trust_radius}, {"fibers_compact", 1.0}};
  s.delta_oracle = [](const Vec&) { return 0.0; };
  s.ii_oracle = [](const Vec&) { return 0.0; };
  // With [X, Y] unhalved, the Hopf horizontal frame (∂η, tan η ∂ξ₁ − cot η ∂ξ₂) has
  // bracket sec²η ∂ξ₁ + csc²η ∂ξ₂, whose vertical part has length 2.
  s.a_oracle = [](const Vec&) { return 2.0; };
  s.sup_delta = 0.0;
  return s;
}

Scenario build_warped_product(const ParamMap& params) {
  const double b = params.at("b");
  auto w = [b](double r) { return 1.0 + b * r * r; };
  auto metric = [w](const Vec& x) {
    const double wr = w(x[0]);
    return diag({1.0, wr * wr});
  };
  auto derivative = [w, b](const Vec& x) {
    std::array<Mat, kMaxDim> d;
    d[0] = diag({0.0, 2.0 * w(x[0]) * 2.0 * b * x[0]});
    d[1] = Mat::Zero(2, 2);
    return d;
  };
  const ChartedManifold total("warped", {Axis{-1.0, 1.0, false}, Axis{0.0, kTwoPi, true}}, metric,
                              closed_form_christoffel(metric, derivative));
  const ChartedManifold base = flat_line(-1.0, 1.0);
  auto jac = [](const Vec&) {
    Mat j(1, 2);
    j << 1.0, 0.0;
    return j;
  };
  SubmersionMap f = make_map("radial", total, base, [](const Vec& x) { return vec({x[0]}); }, jac);
  Scenario s = make_scenario("warped_product", params, total, base, f, f);
  s.trust_radius = 0.8;
  s.sample_box = {{-0.8, 0.8}, {0.0, kTwoPi}};
  s.anchor = vec({0.2, 1.0});
  s.asserted = {{"base_sectional_bound", 0.0}, {"injectivity_radius_standin", s.trust_radius},
                {"fibers_compact", 1.0}};
  s.phi_oracle = [total](const Vec& x) { return total.wrap(x); };
  s.delta_oracle = [](const Vec&) { return 0.0; };
  s.ii_oracle = [b, w](const Vec& x) { return std::abs(2.0 * b * x[0] / w(x[0])); };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.sup_delta = 0.0;
  s.map_distance_oracle = 0.0;
  return s;
}

Scenario build_torus3_orthogonal(const ParamMap& params) {
  const ChartedManifold total = flat_torus(3);
  const ChartedManifold base = flat_circle();
  auto axis_map = [&](int axis, const std::string& name) {
    return make_map(name, total, base, [axis](const Vec& x) { return vec({x[axis]}); },
                    [axis](const Vec&) {
                      Mat j = Mat::Zero(1, 3);
                      j(0, axis) = 1.0;
                      return j;
                    });
  };
  Scenario s = make_scenario("torus3_orthogonal", params, total, base, axis_map(0, "first_circle"),
                             axis_map(1, "second_circle"));
  s.trust_radius = 3.0;
  s.sample_box = {{0.0, 1.0}, {0.0, 1.0}, {0.0, kTwoPi}};
  s.anchor = vec({0.4, 0.7, 1.0});
  s.asserted = {{"base_sectional_bound", 0.0}, {"injectivity_radius_standin", s.trust_radius},
                {"fibers_compact", 1.0}};
  // The f2-lift moves θ₂ onto θ₁ and leaves the rest alone.
  s.phi_oracle = [total](const Vec& x) { return total.wrap(vec({x[0], x[0], x[2]})); };
  s.dphi_oracle = [](const Vec&) {
    Mat d(3, 3);
    d << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    return d;
  };
  s.delta_oracle = [](const Vec&) { return 0.0; };
  s.ii_oracle = [](const Vec&) { return 0.0; };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.sup_delta = 0.0;
  return s;
}

Scenario build_plane_curves(const ParamMap& params) {
  const double radius = params.at("R");
  const ChartedManifold total = flat_plane(10.0);
  const ChartedManifold base = flat_line(-10.0, 10.0);
  auto jac = [](const Vec&) {
    Mat j(1, 2);
    j << 1.0, 0.0;
    return j;
  };
  SubmersionMap f = make_map("first_coordinate", total, base, [](const Vec& x) { return vec({x[0]}); }, jac);
  Scenario s = make_scenario("plane_curves", params, total, base, f, f);
  s.trust_radius = 5.0;
  s.sample_box = {{-2.0, 2.0}, {-2.0, 2.0}};
  s.anchor = vec({0.0, 0.0});
  s.asserted = {{"base_sectional_bound", 0.0}, {"injectivity_radius_standin", s.trust_radius}};
  s.phi_oracle = [](const Vec& x) { return x; };
  s.delta_oracle = [](const Vec&) { return 0.0; };
  s.ii_oracle = [](const Vec&) { return 0.0; };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.sup_delta = 0.0;
  const int n = static_cast<int>(std::ceil(kStepsPerUnitLength));
  s.total_curves["alpha"] = sample_curve(
      [radius](double t) { return vec({radius * std::sin(t / radius), radius * (1.0 - std::cos(t / radius))}); },
      [radius](double t) { return vec({std::cos(t / radius), std::sin(t / radius)}); }, 0.0, 1.0, n);
  s.total_curves["beta"] = sample_curve([](double t) { return vec({t, 0.0}); },
                                        [](double) { return vec({1.0, 0.0}); }, 0.0, 2.0, 2 * n);
  return s;
}

Scenario build_sphere_product(const ParamMap& params) {
  auto metric = [](const Vec& x) {
    const double s = std::sin(x[0]);
    return diag({1.0, s * s, 1.0});
  };
  auto derivative = [](const Vec& x) {
    std::array<Mat, kMaxDim> d;
    d[0] = diag({0.0, 2.0 * std::sin(x[0]) * std::cos(x[0]), 0.0});
    d[1] = Mat::Zero(3, 3);
    d[2] = Mat::Zero(3, 3);
    return d;
  };
  const ChartedManifold total("S2xS1", {Axis{0.0, kPi, false}, Axis{0.0, kTwoPi, true}, Axis{0.0, kTwoPi, true}},
                              metric, closed_form_christoffel(metric, derivative));
  const ChartedManifold base = round_sphere(1.0);
  auto jac = [](const Vec&) {
    Mat j(2, 3);
    j << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    return j;
  };
  SubmersionMap f = make_map("sphere_factor", total, base,
                             [](const Vec& x) { return vec({x[0], x[1]}); }, jac);
  Scenario s = make_scenario("sphere_product", params, total, base, f, f);
  s.trust_radius = 1.0;
  s.sample_box = {{0.6, 2.5}, {0.0, kTwoPi}, {0.0, kTwoPi}};
  s.anchor = vec({1.2, 0.4, 0.0});
  s.asserted = {{"base_sectional_bound", 1.0}, {"total_sectional_bound", 1.0},
                {"injectivity_radius_standin", s.trust_radius}, {"fibers_compact", 1.0}};
  s.phi_oracle = [total](const Vec& x) { return total.wrap(x); };
  s.delta_oracle = [](const Vec&) { return 0.0; };
  s.ii_oracle = [](const Vec&) { return 0.0; };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.sup_delta = 0.0;
  s.map_distance_oracle = 0.0;
  s.base_curves["loop"] = sphere_right_triangle(1.0);
  s.base_curves["loop_half"] = sphere_right_triangle(0.5);
  return s;
}

Scenario build_perturbed_torus(const ParamMap& params) {
  const double c = params.at("c");
  // Conformal metric e^{2φ} I with φ = c sin θ₁ sin θ₂.
  auto phi = [c](const Vec& x) { return c * std::sin(x[0]) * std::sin(x[1]); };
  auto metric = [phi](const Vec& x) { return Mat(std::exp(2.0 * phi(x)) * Mat::Identity(2, 2)); };
  auto derivative = [c, phi](const Vec& x) {
    const double e = std::exp(2.0 * phi(x));
    std::array<Mat, kMaxDim> d;
    d[0] = 2.0 * c * std::cos(x[0]) * std::sin(x[1]) * e * Mat::Identity(2, 2);
    d[1] = 2.0 * c * std::sin(x[0]) * std::cos(x[1]) * e * Mat::Identity(2, 2);
    return d;
  };
  const ChartedManifold total("perturbed_torus", {Axis{0.0, kTwoPi, true}, Axis{0.0, kTwoPi, true}},
                              metric, closed_form_christoffel(metric, derivative));
  const ChartedManifold base = flat_circle();
  auto jac = [](const Vec&) {
    Mat j(1, 2);
    j << 0.0, 1.0;
    return j;
  };
  SubmersionMap f = make_map("second_circle", total, base, [](const Vec& x) { return vec({x[1]}); }, jac);
  Scenario s = make_scenario("perturbed_torus", params, total, base, f, f);
  s.trust_radius = 1.0;
  s.sample_box = full_box(total);
  s.anchor = vec({1.0, 0.7});
  s.asserted = {{"injectivity_radius_standin", s.trust_radius}, {"fibers_compact", 1.0}};
  s.phi_oracle = [total](const Vec& x) { return total.wrap(x); };
  // Fibers are θ₁-lines; their geodesic curvature is e^{-φ}|∂₂φ|.
  s.ii_oracle = [c, phi](const Vec& x) {
    return std::exp(-phi(x)) * std::abs(c * std::sin(x[0]) * std::cos(x[1]));
  };
  s.a_oracle = [](const Vec&) { return 0.0; };
  s.delta_oracle = [phi](const Vec& x) { return std::abs(phi(x)); };
  s.sup_delta = c;
  const Vec x0 = s.anchor;
  const Vec v0 = vec({std::exp(-phi(x0)), 0.0});
  const int n = static_cast<int>(std::ceil(kStepsPerUnitLength));
  s.total_curves["alpha"] = integrate_constant_curvature(total, x0, v0, 1.0, 1.0, n);
  s.total_curves["beta"] = integrate_constant_curvature(total, x0, v0, 0.25, 2.0, 2 * n);
  s.total_curves["loop"] = square_loop(vec({0.5, 0.5}), 1.0, 512);
  s.total_curves["loop_half"] = square_loop(vec({0.5, 0.5}), 0.5, 256);
  return s;
}

}  // namespace

std::vector<ScenarioInfo> list_scenarios() {
  return {
      {"flat_torus_pair", "flat 2-torus over the circle: canonical projection vs θ₂ + a sin θ₂",
       {{"a", 0.3, 0.0, 0.9, false, "twist amplitude"}}},
      {"hopf", "Hopf fibration S³(1) → S²(½) vs the same map followed by a base rotation",
       {{"rotation", 0.02, 0.0, 0.3, true, "base rotation angle about the x-axis"}}},
      {"warped_product", "dr² + (1 + b r²)² dθ² fibered over r",
       {{"b", 0.5, 0.0, 1.0, true, "warping coefficient"}}},
      {"torus3_orthogonal", "flat 3-torus projected onto two orthogonal circle factors", {}},
      {"plane_curves", "flat plane with a circle of radius R and its tangent line",
       {{"R", 1.0, 0.5, 10.0, true, "circle radius"}}},
      {"sphere_product", "Riemannian product S²(1) × S¹ projected onto the sphere", {}},
      {"perturbed_torus", "conformally perturbed 2-torus e^{2c sin θ₁ sin θ₂}(dθ₁² + dθ₂²)",
       {{"c", 0.2, 0.0, 0.5, true, "perturbation amplitude"}}},
  };
}

Scenario build_scenario(const std::string& name, const ParamMap& params, bool verify) {
  const std::vector<ScenarioInfo> infos = list_scenarios();
  auto it = std::find_if(infos.begin(), infos.end(), [&](const ScenarioInfo& i) { return i.name == name; });
  if (it == infos.end()) throw Error(ErrorKind::Registry, "unknown scenario '" + name + "'");
  ParamMap resolved;
  validate_params(*it, params, resolved);

  Scenario s = [&] {
    if (name == "flat_torus_pair") return build_flat_torus_pair(resolved);
    if (name == "hopf") return build_hopf(resolved);
    if (name == "warped_product") return build_warped_product(resolved);
    if (name == "torus3_orthogonal") return build_torus3_orthogonal(resolved);
    if (name == "plane_curves") return build_plane_curves(resolved);
    if (name == "sphere_product") return build_sphere_product(resolved);
    return build_perturbed_torus(resolved);
  }();

  if (verify) {
    for (const OracleCheck& check : verify_oracles(s))
      if (!check.pass) {
        std::ostringstream os;
        os << name << ": oracle '" << check.name << "' disagrees with the numeric pipeline by "
           << check.max_error << " (tolerance " << check.tolerance << ")";
        throw Error(ErrorKind::Validation, os.str());
      }
  }
  return s;
}

std::vector<OracleCheck> verify_oracles(const Scenario& s, int count) {
  const std::vector<Vec> points = s.scatter(count);
  std::vector<OracleCheck> out;
  auto run = [&](const std::string& name, double tol, auto&& error_at) {
    OracleCheck c{name, 0.0, tol, true};
    for (const Vec& x : points) c.max_error = std::max(c.max_error, error_at(x));
    c.pass = c.max_error <= tol;
    out.push_back(c);
  };
  if (s.delta_oracle)
    run("delta", 1e-6, [&](const Vec& x) { return std::abs(delta_at(s.f2, x) - s.delta_oracle(x)); });
  if (s.ii_oracle)
    run("second_fundamental_form", 1e-4, [&](const Vec& x) {
      return std::abs(second_fundamental_form_at(s.f2, x).norm - s.ii_oracle(x));
    });
  if (s.a_oracle)
    run("integrability_tensor", 1e-3, [&](const Vec& x) {
      return std::abs(integrability_tensor_at(s.f2, x).norm - s.a_oracle(x));
    });
  if (s.phi_oracle)
    run("phi", 1e-6, [&](const Vec& x) {
      const Vec d = s.total.difference(construct_phi(s.f1, s.f2, x, s.trust_radius), s.phi_oracle(x));
      return d.cwiseAbs().maxCoeff();
    });
  return out;
}

SharpnessResult sharpness_check(const Scenario& s, const std::vector<int>& counts) {
  if (s.name != "flat_torus_pair")
    throw Error(ErrorKind::Contract, "sharpness check is defined on flat_torus_pair");
  const double a = s.params.at("a");
  SharpnessResult out;
  out.worst_point = s.anchor;
  for (const Vec& x : s.grid(counts)) {
    const Vec y = construct_phi(s.f1, s.f2, x, s.trust_radius);
    const Mat d = phi_differential(s.f1, s.f2, x, s.trust_radius);
    const Mat pulled = d.transpose() * s.total.metric(y) * d - s.total.metric(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(0.5 * (pulled + pulled.transpose())), Eigen::EigenvaluesOnly);
    const double gap = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (gap > out.gap) {
      out.gap = gap;
      out.worst_point = x;
    }
    const double sigma = twisted_root(x[1], a);
    const double k = 1.0 + a * std::cos(sigma);
    out.oracle_gap = std::max(out.oracle_gap, std::abs(1.0 / (k * k) - 1.0));
  }
  return out;
}

}  // namespace sublab
