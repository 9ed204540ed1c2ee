// Rails: one-parameter curves fixed in the body frame (translated to the
// geometric center) along which internal point masses move, and the
// prescribed acceleration profiles that drive the masses along them.
#pragma once

#include <variant>
#include <vector>

#include "rollball/so3.hpp"

namespace rollball {

/// Position of a mass on its rail and the first two derivatives with respect
/// to the rail parameter.
struct RailPoint {
  Vec3 pos;
  Vec3 d1;
  Vec3 d2;
};

/// A mass that never moves relative to the body.
struct StaticPoint {
  Vec3 chi;

  friend bool operator==(const StaticPoint&, const StaticPoint&) = default;
};

/// Spherical coordinates (azimuth, elevation, radius).
struct Spherical {
  double azimuth = 0.0;
  double elevation = 0.0;
  double radius = 1.0;

  friend bool operator==(const Spherical&, const Spherical&) = default;
};

/// Circle of given radius about `center_offset`:
///   zeta(theta) = offset + radius * B * (cos theta, 0, sin theta)
/// with B = basis_from_normal(spherical_to_cartesian(direction)). The circle
/// lies in the plane of B's first and third columns; B's second column is its
/// geometric normal. direction = (0, 0, 1) gives B = I, i.e. a circle in the
/// E1-E3 plane starting on +E1.
class CircleRail {
 public:
  CircleRail(double radius, const Vec3& center_offset, const Spherical& direction);

  double radius() const { return radius_; }
  const Vec3& center_offset() const { return offset_; }
  const Spherical& direction() const { return direction_; }
  const Mat3& basis() const { return basis_; }

  friend bool operator==(const CircleRail& a, const CircleRail& b) {
    return a.radius_ == b.radius_ && a.offset_ == b.offset_ && a.direction_ == b.direction_;
  }

 private:
  double radius_;
  Vec3 offset_;
  Spherical direction_;
  Mat3 basis_;
};

using Rail = std::variant<StaticPoint, CircleRail>;

RailPoint rail_eval(const Rail& rail, double theta);

/// Right-handed orthonormal basis built from a unit vector with the
/// branch-free Frisvad construction (Duff et al. revision). Returns the matrix
/// with columns [n, b2, -b1], where (b1, b2, n) is the Frisvad frame.
Mat3 basis_from_normal(const Vec3& n);

/// (rho cos(el) cos(az), rho cos(el) sin(az), rho sin(el)).
Vec3 spherical_to_cartesian(double azimuth, double elevation, double rho);
inline Vec3 spherical_to_cartesian(const Spherical& s) {
  return spherical_to_cartesian(s.azimuth, s.elevation, s.radius);
}

struct Breakpoint {
  double t = 0.0;
  double value = 0.0;

  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Continuous piecewise-linear function of time given by breakpoints.
/// Clamps to the end values outside the breakpoint span.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  /// Throws ValidationError unless times are finite and strictly increasing.
  explicit PiecewiseLinear(std::vector<Breakpoint> points);

  static PiecewiseLinear constant(double value) { return PiecewiseLinear({{0.0, value}}); }

  double operator()(double t) const;
  const std::vector<Breakpoint>& points() const { return points_; }
  bool empty() const { return points_.empty(); }

  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

 private:
  std::vector<Breakpoint> points_;
};

/// Prescribed rail acceleration u(t) = theta_ddot(t) = sign * table(t).
struct AccelProfile {
  PiecewiseLinear table;
  double sign = 1.0;

  /// Unit pulse: 1 on [0, .1], ramp down to 0 on [.1, .2], 0 until t = 20.
  static AccelProfile short_pulse(double sign = 1.0);
  /// Identically zero.
  static AccelProfile zero() { return {PiecewiseLinear::constant(0.0), 1.0}; }

  friend bool operator==(const AccelProfile&, const AccelProfile&) = default;
};

double accel_eval(const AccelProfile& profile, double t);

/// Times where a profile has a kink; integrators may want to step onto them.
std::vector<double> kink_times(const PiecewiseLinear& table);

}  // namespace rollball
