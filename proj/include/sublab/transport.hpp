#pragma once

#include <optional>

#include "sublab/curve.hpp"
#include "sublab/manifold.hpp"

namespace sublab {

/// Default fixed-step resolution of every trajectory integration.
inline constexpr double kStepsPerUnitLength = 512.0;

/// Step count for a trajectory of the given metric length (at least `min_steps`).
int steps_for_length(double length, int min_steps = 8);

/// Fixed-step RK4 solution of x'' + Γ(x', x') = 0 on [0, T].
/// Throws EscapeError when a non-periodic chart axis is left.
DiscreteCurve integrate_geodesic(const ChartedManifold& manifold, const Vec& x0, const Vec& v0,
                                 double duration, int steps);

/// Endpoint-only variant of integrate_geodesic (same arithmetic, no storage).
Vec geodesic_endpoint(const ChartedManifold& manifold, const Vec& x0, const Vec& v0,
                      double duration, int steps);

struct LogMapOptions {
  std::optional<Vec> seed;       // initial shooting vector; chart straight line if absent
  std::optional<int> steps;      // integration steps; from the seed length if absent
  int max_iterations = 50;
  double tolerance = 1e-12;      // chart residual targeted by Newton
  double accept = 1e-8;          // residual above which the solve is reported as failed
};

/// Initial vector v at `from` whose unit-time geodesic ends at `to`, by damped
/// Newton shooting. Throws NoConvergence after max_iterations, OutOfRange when
/// |v| exceeds trust_radius.
Vec log_map(const ChartedManifold& manifold, const Vec& from, const Vec& to, double trust_radius,
            const LogMapOptions& options = {});

/// Geodesic distance within the trust radius; symmetric bit for bit in its arguments.
double geodesic_distance(const ChartedManifold& manifold, const Vec& a, const Vec& b,
                         double trust_radius);

struct TransportResult {
  Vec end;                 // transported vector at the curve end
  std::vector<Vec> field;  // one vector per curve node
};

/// Solves v' + Γ(γ', v) = 0 along the curve with RK4; between nodes the curve is
/// its cubic Hermite interpolant.
TransportResult parallel_transport(const ChartedManifold& manifold, const DiscreteCurve& curve,
                                   const Vec& v0);

/// |∇_{γ'}γ'| at the node nearest to t. The curve must have unit speed there (1e-6).
double geodesic_curvature(const ChartedManifold& manifold, const DiscreteCurve& curve, double t);

/// Supremum of geodesic_curvature over all nodes.
double max_geodesic_curvature(const ChartedManifold& manifold, const DiscreteCurve& curve);

struct CurveDistance {
  double distance = 0.0;
  double foot_time = 0.0;
  DiscreteCurve geodesic;  // minimal geodesic from the foot point to x, unit time
};

/// Distance from x to the target curve: grid minimum refined by golden-section
/// search over the two adjacent cells. Throws OutOfRange when no foot point lies
/// within the trust radius.
CurveDistance distance_to_curve(const ChartedManifold& manifold, const Vec& x,
                                const DiscreteCurve& target, double trust_radius);

/// Unit-speed curve of constant geodesic curvature kappa in a 2-dimensional chart,
/// bending to the left of the initial velocity.
DiscreteCurve integrate_constant_curvature(const ChartedManifold& manifold, const Vec& x0,
                                           const Vec& v0, double kappa, double length,
                                           int steps);

}  // namespace sublab
