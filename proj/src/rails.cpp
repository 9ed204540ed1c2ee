#include "rollball/rails.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rollball/errors.hpp"

namespace rollball {

CircleRail::CircleRail(double radius, const Vec3& center_offset, const Spherical& direction)
    : radius_(radius), offset_(center_offset), direction_(direction) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ValidationError("circle rail: radius must be positive and finite");
  if (!is_finite(center_offset)) throw ValidationError("circle rail: offset must be finite");
  // Only the direction matters; the spherical radius is normalized away.
  if (!(direction.radius > 0.0)) throw ValidationError("circle rail: direction radius must be positive");
  const Spherical unit{direction.azimuth, direction.elevation, 1.0};
  basis_ = basis_from_normal(spherical_to_cartesian(unit));
}

namespace {

struct RailEvaluator {
  double theta;

  RailPoint operator()(const StaticPoint& p) const { return {p.chi, Vec3::zero(), Vec3::zero()}; }

  RailPoint operator()(const CircleRail& c) const {
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const Vec3 e1 = c.basis().col(0);
    const Vec3 e3 = c.basis().col(2);
    const double rho = c.radius();
    return {c.center_offset() + rho * (cs * e1 + sn * e3),
            rho * (-sn * e1 + cs * e3),
            rho * (-cs * e1 - sn * e3)};
  }
};

}  // namespace

RailPoint rail_eval(const Rail& rail, double theta) { return std::visit(RailEvaluator{theta}, rail); }

Mat3 basis_from_normal(const Vec3& n) {
  constexpr double kUnitTolerance = 1e-9;
  const double len = norm(n);
  if (!(std::abs(len - 1.0) <= kUnitTolerance)) {
    std::ostringstream msg;
    msg << "basis_from_normal: |n| = " << len << " is not unit";
    throw ValidationError(msg.str());
  }
  const double sign = std::copysign(1.0, n.z);
  const double a = -1.0 / (sign + n.z);
  const double b = n.x * n.y * a;
  const Vec3 b1{1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
  const Vec3 b2{b, sign + n.y * n.y * a, -n.y};
  return Mat3::from_cols(n, b2, -b1);
}

Vec3 spherical_to_cartesian(double azimuth, double elevation, double rho) {
  return {rho * std::cos(elevation) * std::cos(azimuth), rho * std::cos(elevation) * std::sin(azimuth),
          rho * std::sin(elevation)};
}

PiecewiseLinear::PiecewiseLinear(std::vector<Breakpoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("piecewise-linear table needs at least one breakpoint");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].t) || !std::isfinite(points_[i].value))
      throw ValidationError("piecewise-linear table has a non-finite entry");
    if (i > 0 && !(points_[i].t > points_[i - 1].t))
      throw ValidationError("piecewise-linear breakpoint times must be strictly increasing");
  }
}

double PiecewiseLinear::operator()(double t) const {
  if (points_.empty()) return 0.0;
  if (t <= points_.front().t) return points_.front().value;
  if (t >= points_.back().t) return points_.back().value;
  const auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double tt, const Breakpoint& p) { return tt < p.t; });
  const auto lo = hi - 1;
  const double s = (t - lo->t) / (hi->t - lo->t);
  return lo->value + s * (hi->value - lo->value);
}

AccelProfile AccelProfile::short_pulse(double sign) {
  return {PiecewiseLinear({{0.0, 1.0}, {0.1, 1.0}, {0.2, 0.0}, {20.0, 0.0}}), sign};
}

double accel_eval(const AccelProfile& profile, double t) { return profile.sign * profile.table(t); }

std::vector<double> kink_times(const PiecewiseLinear& table) {
  std::vector<double> out;
  const auto& p = table.points();
  for (std::size_t i = 1; i + 1 < p.size(); ++i) out.push_back(p[i].t);
  return out;
}

}  // namespace rollball
