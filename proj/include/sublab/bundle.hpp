#pragma once

#include <utility>

#include "sublab/curve.hpp"
#include "sublab/submersion.hpp"

namespace sublab {

/// Horizontal lift of a base curve starting at `start`: c' is the horizontal
/// preimage of the base velocity, integrated by RK4 on the Hermite interpolant.
/// Throws when f(start) is not within 1e-6 of the curve start.
DiscreteCurve horizontal_lift(const SubmersionMap& f, const DiscreteCurve& base_curve,
                              const Vec& start);

/// Horizontal lift of the unit-time base geodesic leaving f(start) with velocity
/// `base_velocity`. Geodesic and lift are integrated as one RK4 system.
DiscreteCurve lift_base_geodesic(const SubmersionMap& f, const Vec& start,
                                 const Vec& base_velocity, int steps);

/// Φ(x): end of the f2-horizontal lift from x of the geodesic from f2(x) to f1(x),
/// so that f2 ∘ Φ = f1.
Vec construct_phi(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                  double trust_radius);

/// x ↦ (f2(x), φ2(x)), φ2(x) the lift end over the geodesic from f2(x) to p.
class LocalTrivialization {
 public:
  LocalTrivialization(SubmersionMap f2, Vec p, double radius);

  std::pair<Vec, Vec> operator()(const Vec& x) const;
  Vec fiber_coordinate(const Vec& x) const;

 private:
  SubmersionMap f2_;
  Vec p_;
  double radius_;
};

LocalTrivialization local_trivialization(const SubmersionMap& f2, const Vec& p, double radius);

/// dΦ at x by central differences of construct_phi (chart components, m×m).
Mat phi_differential(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                     double trust_radius, double fd_step = 1e-4);

/// Singular values below this mark dΦ as singular.
inline constexpr double kSingularThreshold = 1e-5;

struct PhiDiagnostics {
  Vec point;
  Vec phi_point;
  Mat dphi;  // chart components
  double commutation_residual = 0.0;
  Vec singular_values;  // dΦ in g-orthonormal frames, descending
  double vertical_leakage = 0.0;
  double horizontal_top_norm = 0.0;
  std::pair<double, double> horizontal_bot_range{0.0, 0.0};
  bool dphi_singular = false;
};

PhiDiagnostics phi_diagnostics(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& x,
                               double trust_radius, double fd_step = 1e-4);

/// Min singular value of dφ2 restricted to the f1-vertical space at x (orthonormal in and out).
double transversality_check(const SubmersionMap& f1, const SubmersionMap& f2, const Vec& p,
                            const Vec& x, double trust_radius, double fd_step = 1e-4);

}  // namespace sublab
