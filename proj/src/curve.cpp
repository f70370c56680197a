#include "sublab/curve.hpp"

#include <algorithm>
#include <cmath>

namespace sublab {

std::size_t DiscreteCurve::cell_of(double t) const {
  if (times.size() < 2) throw Error(ErrorKind::Contract, "curve needs at least two nodes");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  if (i >= times.size() - 1) i = times.size() - 2;
  while (i > 0 && times[i + 1] == times[i]) --i;
  return i;
}

namespace {

struct Hermite {
  Vec point;
  Vec velocity;
};

Hermite hermite(const DiscreteCurve& c, double t) {
  const std::size_t i = c.cell_of(t);
  const double dt = c.times[i + 1] - c.times[i];
  if (dt <= 0.0) return {c.points[i], c.velocities[i]};
  const double u = (t - c.times[i]) / dt;
  const double u2 = u * u, u3 = u2 * u;
  const Vec& p0 = c.points[i];
  const Vec& p1 = c.points[i + 1];
  const Vec m0 = c.velocities[i] * dt;
  const Vec m1 = c.velocities[i + 1] * dt;
  Hermite out;
  out.point = (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
              (u3 - u2) * m1;
  out.velocity = ((6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * p1 +
                  (3 * u2 - 2 * u) * m1) /
                 dt;
  return out;
}

}  // namespace

Vec DiscreteCurve::point_at(double t) const { return hermite(*this, t).point; }
Vec DiscreteCurve::velocity_at(double t) const { return hermite(*this, t).velocity; }

DiscreteCurve sample_curve(const std::function<Vec(double)>& position,
                           const std::function<Vec(double)>& velocity, double t0, double t1,
                           int n) {
  if (n < 1) throw Error(ErrorKind::Contract, "sample_curve needs n >= 1");
  DiscreteCurve c;
  c.times.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = i == n ? t1 : t0 + (t1 - t0) * i / n;
    c.times.push_back(t);
    c.points.push_back(position(t));
    c.velocities.push_back(velocity(t));
  }
  return c;
}

DiscreteCurve concatenate(const std::vector<DiscreteCurve>& pieces) {
  DiscreteCurve out;
  for (const DiscreteCurve& piece : pieces) {
    if (piece.empty()) continue;
    const double shift = out.empty() ? -piece.start_time() : out.end_time() - piece.start_time();
    Vec offset = Vec::Zero(piece.front().size());
    if (!out.empty()) offset = out.back() - piece.front();
    for (std::size_t i = 0; i < piece.size(); ++i) {
      out.times.push_back(piece.times[i] + shift);
      // Chart offsets keep the joined curve continuous when a piece was produced
      // in a different periodic sheet.
      out.points.push_back(piece.points[i] + offset);
      out.velocities.push_back(piece.velocities[i]);
    }
  }
  return out;
}

DiscreteCurve reversed(const DiscreteCurve& curve) {
  DiscreteCurve out;
  const std::size_t n = curve.size();
  const double total = curve.end_time();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = n - 1 - k;
    out.times.push_back(total - curve.times[i]);
    out.points.push_back(curve.points[i]);
    out.velocities.push_back(-curve.velocities[i]);
  }
  out.times.front() = 0.0;
  return out;
}

double curve_length(const ChartedManifold& manifold, const DiscreteCurve& curve) {
  auto speed = [&](const Vec& x, const Vec& v) { return std::sqrt(v.dot(manifold.metric(x) * v)); };
  double length = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dt = curve.times[i + 1] - curve.times[i];
    if (dt <= 0.0) continue;
    const double tm = 0.5 * (curve.times[i] + curve.times[i + 1]);
    const Hermite mid = hermite(curve, tm);
    length += dt / 6.0 *
              (speed(curve.points[i], curve.velocities[i]) + 4.0 * speed(mid.point, mid.velocity) +
               speed(curve.points[i + 1], curve.velocities[i + 1]));
  }
  return length;
}

bool curve_is_continuous(const DiscreteCurve& curve, double slack) {
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dt = curve.times[i + 1] - curve.times[i];
    const double vmax = std::max(curve.velocities[i].cwiseAbs().maxCoeff(),
                                 curve.velocities[i + 1].cwiseAbs().maxCoeff());
    const double jump = (curve.points[i + 1] - curve.points[i]).cwiseAbs().maxCoeff();
    if (jump > dt * vmax * (1.0 + slack) + 1e-12) return false;
  }
  return true;
}

}  // namespace sublab
