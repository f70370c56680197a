#pragma once

#include <functional>
#include <vector>

#include "sublab/manifold.hpp"

namespace sublab {

/// A time-sampled path in chart coordinates. Points are stored unwrapped so that
/// consecutive samples are close even across a periodic seam.
///
/// Times are nondecreasing; a repeated time marks a corner of a piecewise smooth
/// curve, where the two nodes carry the one-sided velocities.
struct DiscreteCurve {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<Vec> velocities;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double start_time() const { return times.front(); }
  double end_time() const { return times.back(); }
  const Vec& front() const { return points.front(); }
  const Vec& back() const { return points.back(); }

  /// Cubic Hermite interpolation of position and velocity at time t.
  Vec point_at(double t) const;
  Vec velocity_at(double t) const;
  /// Index of the cell [t_i, t_{i+1}] containing t (last non-degenerate cell at the end).
  std::size_t cell_of(double t) const;
};

/// Samples a curve from closed-form position and velocity on n + 1 uniform nodes.
DiscreteCurve sample_curve(const std::function<Vec(double)>& position,
                           const std::function<Vec(double)>& velocity, double t0, double t1,
                           int n);

/// Joins curves end to start; each later piece is shifted in time and the seam becomes a corner.
DiscreteCurve concatenate(const std::vector<DiscreteCurve>& pieces);

/// Same path traversed backwards, re-timed to start at 0.
DiscreteCurve reversed(const DiscreteCurve& curve);

/// Length in the metric, by Simpson's rule on each cell using the Hermite midpoint.
double curve_length(const ChartedManifold& manifold, const DiscreteCurve& curve);

/// Checks the sample spacing contract: consecutive points differ by at most
/// (cell duration) * (max chart speed) * (1 + slack).
bool curve_is_continuous(const DiscreteCurve& curve, double slack = 0.5);

}  // namespace sublab
