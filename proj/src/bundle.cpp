#include "sublab/bundle.hpp"

#include <algorithm>
#include <cmath>

#include "sublab/transport.hpp"

namespace sublab {

namespace {

void require_inside(const ChartedManifold& manifold, const Vec& x, double t) {
  if (!manifold.contains(x)) throw EscapeError(manifold.name() + ": lift left the chart", t);
}

Mat lower_factor(const ChartedManifold& manifold, const Vec& x) {
  Eigen::LLT<Mat> llt(manifold.metric(x));
  return llt.matrixL();
}

// Orthonormal-frame matrix Lyᵀ A with A in chart components at y.
Mat measured(const Mat& ly, const Mat& a) { return ly.transpose() * a; }

}  // namespace

DiscreteCurve horizontal_lift(const SubmersionMap& f, const DiscreteCurve& base_curve,
                              const Vec& start) {
  if (base_curve.size() < 2) throw Error(ErrorKind::Contract, "base curve needs two nodes");
  const Vec offset = f.base.difference(f(start), base_curve.front());
  if (offset.cwiseAbs().maxCoeff() > 1e-6)
    throw Error(ErrorKind::Contract, "lift start does not lie over the base curve start");

  DiscreteCurve out;
  Vec c = start;
  out.times.push_back(base_curve.times[0]);
  out.points.push_back(c);
  out.velocities.push_back(horizontal_preimage(f, c, base_curve.velocities[0]));
  for (std::size_t i = 0; i + 1 < base_curve.size(); ++i) {
    const double t0 = base_curve.times[i];
    const double dt = base_curve.times[i + 1] - t0;
    if (dt > 0.0) {
      const Vec wm = base_curve.velocity_at(t0 + 0.5 * dt);
      const Vec k1 = horizontal_preimage(f, c, base_curve.velocities[i]);
      Vec y = c + 0.5 * dt * k1;
      require_inside(f.total, y, t0);
      const Vec k2 = horizontal_preimage(f, y, wm);
      y = c + 0.5 * dt * k2;
      require_inside(f.total, y, t0);
      const Vec k3 = horizontal_preimage(f, y, wm);
      y = c + dt * k3;
      require_inside(f.total, y, t0);
      const Vec k4 = horizontal_preimage(f, y, base_curve.velocities[i + 1]);
      c += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      require_inside(f.total, c, t0 + dt);
    }
    out.times.push_back(base_curve.times[i + 1]);
    out.points.push_back(c);
    out.velocities.push_back(horizontal_preimage(f, c, base_curve.velocities[i + 1]));
  }
  return out;
}

DiscreteCurve lift_base_geodesic(const SubmersionMap& f, const Vec& start,
                                 const Vec& base_velocity, int steps) {
  if (steps < 1) throw Error(ErrorKind::Contract, "lift needs at least one step");
  struct State {
    Vec y, w, c;
  };
  auto rhs = [&](const State& s, double t, Vec& dy, Vec& dw, Vec& dc) {
    if (!f.base.contains(s.y)) throw EscapeError(f.base.name() + ": geodesic left the chart", t);
    require_inside(f.total, s.c, t);
    dy = s.w;
    dw = -f.base.christoffel(s.y).contract(s.w, s.w);
    dc = horizontal_preimage(f, s.c, s.w);
  };
  const double h = 1.0 / steps;
  State s{f(start), base_velocity, start};
  DiscreteCurve out;
  out.times.reserve(steps + 1);
  out.points.reserve(steps + 1);
  out.velocities.reserve(steps + 1);
  out.times.push_back(0.0);
  out.points.push_back(s.c);
  out.velocities.push_back(horizontal_preimage(f, s.c, s.w));
  Vec y1, w1, c1, y2, w2, c2, y3, w3, c3, y4, w4, c4;
  for (int i = 0; i < steps; ++i) {
    const double t = h * i;
    rhs(s, t, y1, w1, c1);
    rhs({s.y + 0.5 * h * y1, s.w + 0.5 * h * w1, s.c + 0.5 * h * c1}, t, y2, w2, c2);
    rhs({s.y + 0.5 * h * y2, s.w + 0.5 * h * w2, s.c + 0.5 * h * c2}, t, y3, w3, c3);
    rhs({s.y + h * y3, s.w + h * w3, s.c + h * c3}, t, y4, w4, c4);
    s.y += h / 6.0 * (y1 + 2.0 * y2 + 2.0 * y3 + y4);
    s.w += h / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4);
    s.c += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
    require_inside(f.total, s.c, t + h);
    out.times.push_back(i + 1 == steps ? 1.0 : h * (i + 1));
    out.points.push_back(s.c);
    out.velocities.push_back(horizontal_preimage(f, s.c, s.w));
  }
  return out;
}

namespace {

// End of the f-horizontal lift from x over the geodesic from f(x) to p.
Vec lift_to(const SubmersionMap& f, const Vec& x, const Vec& p, double trust_radius) {
  const Vec q = f(x);
  const Vec straight = f.base.difference(p, q);
  if (straight.cwiseAbs().maxCoeff() == 0.0) return f.total.wrap(x);
  // The lift reuses the step count of the shooting solve so that its base
  // geodesic is the one log_map converged on.
  const int steps = steps_for_length(metric_at(f.base, q).norm(straight));
  LogMapOptions options;
  options.steps = steps;
  const Vec v = log_map(f.base, q, p, trust_radius, options);
  return f.total.wrap(lift_base_geodesic(f, x, v, steps).back());
}

}  // namespace

Vec construct_phi(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                  double trust_radius) {
  return lift_to(f2, x, f1(x), trust_radius);
}

LocalTrivialization::LocalTrivialization(SubmersionMap f2, Vec p, double radius)
    : f2_(std::move(f2)), p_(std::move(p)), radius_(radius) {}

Vec LocalTrivialization::fiber_coordinate(const Vec& x) const {
  return lift_to(f2_, x, p_, radius_);
}

std::pair<Vec, Vec> LocalTrivialization::operator()(const Vec& x) const {
  return {f2_(x), fiber_coordinate(x)};
}

LocalTrivialization local_trivialization(const SubmersionMap& f2, const Vec& p, double radius) {
  return LocalTrivialization(f2, f2.base.wrap(p), radius);
}

namespace {

template <typename Fn>
Mat central_jacobian(const ChartedManifold& manifold, const Vec& x, double h, Fn&& fn) {
  const int m = manifold.dim();
  manifold.require_ball(x, h, "differential");
  Mat out(m, m);
  for (int k = 0; k < m; ++k) {
    Vec plus = x, minus = x;
    plus[k] += h;
    minus[k] -= h;
    out.col(k) = manifold.difference(fn(plus), fn(minus)) / (2.0 * h);
  }
  return out;
}

}  // namespace

Mat phi_differential(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                     double trust_radius, double fd_step) {
  return central_jacobian(f1.total, x, fd_step,
                          [&](const Vec& y) { return construct_phi(f1, f2, y, trust_radius); });
}

PhiDiagnostics phi_diagnostics(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                               double trust_radius, double fd_step) {
  const int m = f1.total.dim();
  PhiDiagnostics out;
  out.point = f1.total.wrap(x);
  out.phi_point = construct_phi(f1, f2, x, trust_radius);
  const Vec p = f1(x);
  out.commutation_residual =
      metric_at(f2.base, p).norm(f2.base.difference(f2(out.phi_point), p));

  const Mat dphi = phi_differential(f1, f2, x, trust_radius, fd_step);
  out.dphi = dphi;
  const Mat lx = lower_factor(f1.total, x);
  const Mat ly = lower_factor(f2.total, out.phi_point);
  const Mat normalized =
      lx.transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(
          Mat(ly.transpose() * dphi));
  Eigen::JacobiSVD<Mat> svd(normalized);
  out.singular_values = svd.singularValues();
  out.dphi_singular = out.singular_values[m - 1] < kSingularThreshold;

  const VerticalSplit s1 = split_at(f1, x);
  const Mat ph2 = horizontal_projector(f2, out.phi_point);
  const Mat pv2 = Mat::Identity(m, m) - ph2;
  if (s1.vertical.cols() > 0) {
    Eigen::JacobiSVD<Mat> leak(measured(ly, ph2 * dphi * s1.vertical));
    out.vertical_leakage = leak.singularValues()[0];
  }
  Eigen::JacobiSVD<Mat> top(measured(ly, pv2 * dphi * s1.horizontal));
  out.horizontal_top_norm = top.singularValues()[0];
  Eigen::JacobiSVD<Mat> bot(measured(ly, ph2 * dphi * s1.horizontal));
  const Vec sb = bot.singularValues();
  out.horizontal_bot_range = {sb[sb.size() - 1], sb[0]};
  return out;
}

double transversality_check(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& p,
                            const Vec& x, double trust_radius, double fd_step) {
  const LocalTrivialization phi = local_trivialization(f2, p, trust_radius);
  const Mat dphi2 = central_jacobian(f1.total, x, fd_step,
                                     [&](const Vec& y) { return phi.fiber_coordinate(y); });
  const Mat v1 = split_at(f1, x).vertical;
  if (v1.cols() == 0) throw Error(ErrorKind::Contract, "f1 has no vertical directions");
  const Mat ly = lower_factor(f1.total, phi.fiber_coordinate(x));
  Eigen::JacobiSVD<Mat> svd(measured(ly, dphi2 * v1));
  return svd.singularValues()[svd.singularValues().size() - 1];
}

}  // namespace sublab
