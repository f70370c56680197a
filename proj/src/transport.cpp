#include "sublab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace sublab {

int steps_for_length(double length, int min_steps) {
  const double wanted = std::ceil(kStepsPerUnitLength * std::max(length, 0.0));
  return std::max(min_steps, static_cast<int>(std::min(wanted, 1e6)));
}

namespace {

struct State {
  Vec x;
  Vec v;
};

template <typename Accel>
State rk4_step(const ChartedManifold& manifold, const State& s, double h, double t,
               Accel&& accel) {
  auto eval = [&](const Vec& x, const Vec& v, double te) {
    if (!manifold.contains(x)) throw EscapeError(manifold.name() + ": trajectory left the chart", te);
    return accel(x, v);
  };
  const Vec k1x = s.v;
  const Vec k1v = eval(s.x, s.v, t);
  const Vec x2 = s.x + 0.5 * h * k1x, v2 = s.v + 0.5 * h * k1v;
  const Vec k2v = eval(x2, v2, t);
  const Vec x3 = s.x + 0.5 * h * v2, v3 = s.v + 0.5 * h * k2v;
  const Vec k3v = eval(x3, v3, t);
  const Vec x4 = s.x + h * v3, v4 = s.v + h * k3v;
  const Vec k4v = eval(x4, v4, t);
  State out;
  out.x = s.x + h / 6.0 * (k1x + 2.0 * v2 + 2.0 * v3 + v4);
  out.v = s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return out;
}

template <typename Accel, typename Sink>
void integrate_second_order(const ChartedManifold& manifold, const Vec& x0, const Vec& v0,
                            double duration, int steps, Accel&& accel, Sink&& sink) {
  if (steps < 1) throw Error(ErrorKind::Contract, "integration needs at least one step");
  if (x0.size() != manifold.dim() || v0.size() != manifold.dim())
    throw Error(ErrorKind::Contract, "initial state dimension mismatch");
  if (!manifold.contains(x0)) throw EscapeError(manifold.name() + ": start outside the chart", 0.0);
  const double h = duration / steps;
  State s{x0, v0};
  sink(0.0, s);
  for (int i = 0; i < steps; ++i) {
    const double t = h * i;
    s = rk4_step(manifold, s, h, t, accel);
    if (!manifold.contains(s.x))
      throw EscapeError(manifold.name() + ": trajectory left the chart", t);
    sink(i + 1 == steps ? duration : h * (i + 1), s);
  }
}

auto geodesic_accel(const ChartedManifold& manifold) {
  return [&manifold](const Vec& x, const Vec& v) -> Vec {
    return -manifold.christoffel(x).contract(v, v);
  };
}

double inf_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

DiscreteCurve integrate_geodesic(const ChartedManifold& manifold, const Vec& x0, const Vec& v0,
                                 double duration, int steps) {
  DiscreteCurve curve;
  curve.times.reserve(steps + 1);
  curve.points.reserve(steps + 1);
  curve.velocities.reserve(steps + 1);
  integrate_second_order(manifold, x0, v0, duration, steps, geodesic_accel(manifold),
                         [&](double t, const State& s) {
                           curve.times.push_back(t);
                           curve.points.push_back(s.x);
                           curve.velocities.push_back(s.v);
                         });
  return curve;
}

Vec geodesic_endpoint(const ChartedManifold& manifold, const Vec& x0, const Vec& v0,
                      double duration, int steps) {
  Vec end = x0;
  integrate_second_order(manifold, x0, v0, duration, steps, geodesic_accel(manifold),
                         [&](double, const State& s) { end = s.x; });
  return end;
}

Vec log_map(const ChartedManifold& manifold, const Vec& from, const Vec& to, double trust_radius,
            const LogMapOptions& options) {
  const int m = manifold.dim();
  const Vec straight = manifold.difference(to, from);
  if (inf_norm(straight) == 0.0) return Vec::Zero(m);

  const MetricAt metric = metric_at(manifold, from);
  Vec v = options.seed ? *options.seed : straight;
  const int steps = options.steps ? *options.steps : steps_for_length(metric.norm(v));

  auto residual = [&](const Vec& w) -> Vec {
    try {
      return manifold.difference(geodesic_endpoint(manifold, from, w, 1.0, steps), to);
    } catch (const EscapeError&) {
      return Vec::Constant(m, std::numeric_limits<double>::infinity());
    }
  };

  Vec r = residual(v);
  double err = inf_norm(r);
  if (!std::isfinite(err) && options.seed) {
    v = straight;
    r = residual(v);
    err = inf_norm(r);
  }
  for (int it = 0; it < options.max_iterations && err > options.tolerance; ++it) {
    Mat jac(m, m);
    const double eta = 1e-7 * (1.0 + inf_norm(v));
    for (int k = 0; k < m; ++k) {
      Vec w = v;
      w[k] += eta;
      jac.col(k) = (residual(w) - r) / eta;
    }
    if (!jac.allFinite()) break;
    const Vec step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      const Vec trial = v + lambda * step;
      const Vec rt = residual(trial);
      const double et = inf_norm(rt);
      if (et < err) {
        v = trial;
        r = rt;
        err = et;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(err <= options.accept))
    throw Error(ErrorKind::NoConvergence, manifold.name() + ": shooting residual " +
                                              std::to_string(err) + " after Newton iterations");
  if (metric.norm(v) > trust_radius * (1.0 + 1e-9))
    throw Error(ErrorKind::OutOfRange, manifold.name() + ": log vector of length " +
                                           std::to_string(metric.norm(v)) +
                                           " exceeds trust radius " + std::to_string(trust_radius));
  return v;
}

double geodesic_distance(const ChartedManifold& manifold, const Vec& a, const Vec& b,
                         double trust_radius) {
  const Vec wa = manifold.wrap(a), wb = manifold.wrap(b);
  const bool swap = std::lexicographical_compare(wb.data(), wb.data() + wb.size(), wa.data(),
                                                 wa.data() + wa.size());
  const Vec& from = swap ? wb : wa;
  const Vec& to = swap ? wa : wb;
  const Vec v = log_map(manifold, from, to, trust_radius);
  return metric_at(manifold, from).norm(v);
}

TransportResult parallel_transport(const ChartedManifold& manifold, const DiscreteCurve& curve,
                                   const Vec& v0) {
  if (curve.size() < 2) throw Error(ErrorKind::Contract, "transport needs at least two nodes");
  if (v0.size() != manifold.dim()) throw Error(ErrorKind::Contract, "vector dimension mismatch");
  TransportResult out;
  out.field.reserve(curve.size());
  Vec v = v0;
  out.field.push_back(v);
  Christoffel gamma_left = manifold.christoffel(curve.points[0]);
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dt = curve.times[i + 1] - curve.times[i];
    const Christoffel gamma_right = manifold.christoffel(curve.points[i + 1]);
    if (dt > 0.0) {
      const double tm = curve.times[i] + 0.5 * dt;
      const Vec xm = curve.point_at(tm);
      const Vec um = curve.velocity_at(tm);
      const Christoffel gamma_mid = manifold.christoffel(xm);
      const Mat b0 = gamma_left.contract_one(curve.velocities[i]);
      const Mat bm = gamma_mid.contract_one(um);
      const Mat b1 = gamma_right.contract_one(curve.velocities[i + 1]);
      const Vec k1 = -b0 * v;
      const Vec k2 = -bm * (v + 0.5 * dt * k1);
      const Vec k3 = -bm * (v + 0.5 * dt * k2);
      const Vec k4 = -b1 * (v + dt * k3);
      v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.field.push_back(v);
    gamma_left = gamma_right;
  }
  out.end = v;
  return out;
}

double geodesic_curvature(const ChartedManifold& manifold, const DiscreteCurve& curve, double t) {
  const std::size_t n = curve.size();
  if (n < 3) throw Error(ErrorKind::Contract, "geodesic curvature needs at least three nodes");
  std::size_t k = curve.cell_of(t);
  if (std::abs(curve.times[k + 1] - t) < std::abs(t - curve.times[k])) ++k;

  const Vec& x = curve.points[k];
  const Vec& v = curve.velocities[k];
  const MetricAt metric = metric_at(manifold, x);
  const double speed = metric.norm(v);
  if (std::abs(speed - 1.0) > 1e-6)
    throw Error(ErrorKind::Contract, "geodesic curvature requires a unit-speed curve (speed " +
                                         std::to_string(speed) + ")");

  auto spacing = [&](std::size_t a, std::size_t b) { return curve.times[b] - curve.times[a]; };
  const bool left = k >= 1 && spacing(k - 1, k) > 0.0;
  const bool right = k + 1 < n && spacing(k, k + 1) > 0.0;
  Vec accel;
  if (left && right) {
    accel = (curve.velocities[k + 1] - curve.velocities[k - 1]) / spacing(k - 1, k + 1);
  } else if (right && k + 2 < n && spacing(k + 1, k + 2) > 0.0) {
    const double h = spacing(k, k + 1);
    accel = (-3.0 * v + 4.0 * curve.velocities[k + 1] - curve.velocities[k + 2]) / (2.0 * h);
  } else if (left && k >= 2 && spacing(k - 2, k - 1) > 0.0) {
    const double h = spacing(k - 1, k);
    accel = (3.0 * v - 4.0 * curve.velocities[k - 1] + curve.velocities[k - 2]) / (2.0 * h);
  } else {
    throw Error(ErrorKind::Contract, "not enough smooth neighbours for geodesic curvature");
  }
  const Vec covariant = accel + manifold.christoffel(x).contract(v, v);
  return metric.norm(covariant);
}

double max_geodesic_curvature(const ChartedManifold& manifold, const DiscreteCurve& curve) {
  double best = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k)
    best = std::max(best, geodesic_curvature(manifold, curve, curve.times[k]));
  return best;
}

CurveDistance distance_to_curve(const ChartedManifold& manifold, const Vec& x,
                                const DiscreteCurve& target, double trust_radius) {
  const std::size_t n = target.size();
  if (n < 2) throw Error(ErrorKind::Contract, "target curve needs at least two nodes");
  const double inf = std::numeric_limits<double>::infinity();

  // Cheap chart-metric estimate to locate the basin of the minimum.
  std::size_t k = 0;
  double best_approx = inf;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec d = manifold.difference(x, target.points[i]);
    const double a = std::sqrt(d.dot(manifold.metric(target.points[i]) * d));
    if (a < best_approx) {
      best_approx = a;
      k = i;
    }
  }

  std::map<std::size_t, double> exact_cache;
  std::optional<Vec> warm;
  auto distance_from = [&](const Vec& p) -> double {
    try {
      LogMapOptions options;
      if (warm) options.seed = *warm;
      const Vec v = log_map(manifold, p, x, trust_radius, options);
      warm = v;
      return metric_at(manifold, p).norm(v);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::OutOfRange || e.kind() == ErrorKind::NoConvergence) return inf;
      throw;
    }
  };
  auto exact = [&](std::size_t i) {
    auto it = exact_cache.find(i);
    if (it != exact_cache.end()) return it->second;
    const double d = distance_from(target.points[i]);
    exact_cache.emplace(i, d);
    return d;
  };

  for (std::size_t guard = 0; guard < n; ++guard) {
    const double here = exact(k);
    const double prev = k > 0 ? exact(k - 1) : inf;
    const double next = k + 1 < n ? exact(k + 1) : inf;
    if (prev <= here && prev <= next && k > 0) {
      --k;
    } else if (next < here) {
      ++k;
    } else {
      break;
    }
  }

  double best_t = target.times[k];
  double best_d = exact(k);
  const double lo = target.times[k > 0 ? k - 1 : 0];
  const double hi = target.times[std::min(k + 1, n - 1)];
  if (hi > lo && best_d > 0.0) {
    constexpr double ratio = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = distance_from(target.point_at(c)), fd = distance_from(target.point_at(d));
    while (b - a > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b))) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = distance_from(target.point_at(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = distance_from(target.point_at(d));
      }
    }
    const double t = fc <= fd ? c : d;
    const double f = std::min(fc, fd);
    if (f < best_d || (f == best_d && t < best_t)) {
      best_d = f;
      best_t = t;
    }
  }
  if (!std::isfinite(best_d) || best_d > trust_radius)
    throw Error(ErrorKind::OutOfRange, "no foot point on the target curve within the trust radius");

  CurveDistance out;
  out.distance = best_d;
  out.foot_time = best_t;
  const Vec foot = best_t == target.times[k] ? target.points[k] : target.point_at(best_t);
  const Vec v = log_map(manifold, foot, x, trust_radius);
  out.distance = metric_at(manifold, foot).norm(v);
  out.geodesic = integrate_geodesic(manifold, foot, v, 1.0, steps_for_length(out.distance));
  return out;
}

DiscreteCurve integrate_constant_curvature(const ChartedManifold& manifold, const Vec& x0,
                                           const Vec& v0, double kappa, double length,
                                           int steps) {
  if (manifold.dim() != 2)
    throw Error(ErrorKind::Contract, "constant-curvature curves are defined in 2-d charts");
  auto accel = [&manifold, kappa](const Vec& x, const Vec& v) -> Vec {
    const Mat g = manifold.metric(x);
    Eigen::LLT<Mat> llt(g);
    const Mat l = llt.matrixL();
    const Vec u = l.transpose() * v;
    Vec turned(2);
    turned << -u[1], u[0];
    const Vec normal = l.transpose().triangularView<Eigen::Upper>().solve(turned);
    return -manifold.christoffel(x).contract(v, v) + kappa * normal;
  };
  DiscreteCurve curve;
  integrate_second_order(manifold, x0, v0, length, steps, accel, [&](double t, const State& s) {
    curve.times.push_back(t);
    curve.points.push_back(s.x);
    curve.velocities.push_back(s.v);
  });
  return curve;
}

}  // namespace sublab
