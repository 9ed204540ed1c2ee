#include "rollball/classic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rollball/errors.hpp"

namespace rollball {

namespace {

constexpr double kSuslovTolerance = 1e-9;

Vec3 inv_inertia(const Vec3& inertia, const Vec3& v) {
  return {v.x / inertia.x, v.y / inertia.y, v.z / inertia.z};
}

void check_inertia(const Vec3& inertia, const char* who) {
  if (!(inertia.x > 0.0 && inertia.y > 0.0 && inertia.z > 0.0) || !is_finite(inertia))
    throw ValidationError(std::string(who) + ": inertia entries must be positive");
}

Vec3 vec3_at(const Eigen::VectorXd& x, Eigen::Index i) { return {x[i], x[i + 1], x[i + 2]}; }

void put(Eigen::VectorXd& dx, Eigen::Index i, const Vec3& v) {
  dx[i] = v.x;
  dx[i + 1] = v.y;
  dx[i + 2] = v.z;
}

}  // namespace

Vec3 free_rigid_body_rhs(const Vec3& inertia, const Vec3& omega) {
  return inv_inertia(inertia, cross(hadamard(inertia, omega), omega));
}

void free_rigid_body_packed(const Vec3& inertia, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  const Vec3 omega = vec3_at(x, 0);
  const Quat q(x[3], x[4], x[5], x[6]);
  dx.resize(7);
  put(dx, 0, free_rigid_body_rhs(inertia, omega));
  const Quat qd = quat_kinematics(q, omega);
  for (Eigen::Index i = 0; i < 4; ++i) dx[3 + i] = qd[static_cast<std::size_t>(i)];
}

Vec3 spatial_momentum(const Vec3& inertia, const Versor& q, const Vec3& omega) {
  return rotate(q, hadamard(inertia, omega));
}

void HeavyTopParams::validate() const {
  check_inertia(inertia, "heavy top");
  if (!(mass > 0.0)) throw ValidationError("heavy top: mass must be positive");
  if (!(gravity >= 0.0)) throw ValidationError("heavy top: gravity must be non-negative");
  if (!is_finite(chi)) throw ValidationError("heavy top: chi must be finite");
}

HeavyTopRates heavy_top_rhs(const HeavyTopParams& p, const Vec3& omega, const Vec3& gamma) {
  const Vec3 torque = cross(hadamard(p.inertia, omega), omega) + (p.mass * p.gravity) * cross(gamma, p.chi);
  return {inv_inertia(p.inertia, torque), cross(gamma, omega)};
}

void heavy_top_packed(const HeavyTopParams& params, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  const HeavyTopRates r = heavy_top_rhs(params, vec3_at(x, 0), vec3_at(x, 3));
  dx.resize(6);
  put(dx, 0, r.omega_dot);
  put(dx, 3, r.gamma_dot);
}

double heavy_top_energy(const HeavyTopParams& params, const Vec3& omega, const Vec3& gamma) {
  return rotational_energy(params.inertia, omega) + params.mass * params.gravity * dot(params.chi, gamma);
}

XiPath XiPath::constant(const Vec3& xi) {
  const double n = norm(xi);
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("xi: direction must be nonzero and finite");
  return XiPath(xi, xi, 0.0, 0.0);
}

XiPath XiPath::slerp(const Vec3& from, const Vec3& to, double duration) {
  const double na = norm(from), nb = norm(to);
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("xi: slerp endpoints must be nonzero");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("xi: slerp duration must be positive");
  const Vec3 a = from / na, b = to / nb;
  const double angle = std::atan2(norm(cross(a, b)), dot(a, b));
  if (!(angle > 1e-8) || !(angle < std::numbers::pi - 1e-8))
    throw ValidationError("xi: slerp endpoints must not be parallel or antiparallel");
  return XiPath(from, to, duration, angle);
}

Vec3 XiPath::value(double t) const {
  if (is_constant()) return a_;
  const double tc = std::clamp(t, 0.0, duration_);
  const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * tc / duration_));
  const double sa = std::sin(angle_);
  return (std::sin((1.0 - s) * angle_) / sa) * a_ + (std::sin(s * angle_) / sa) * b_;
}

Vec3 XiPath::rate(double t) const {
  if (is_constant() || t <= 0.0 || t >= duration_) return Vec3::zero();
  const double w = std::numbers::pi / duration_;
  const double s = 0.5 * (1.0 - std::cos(w * t));
  const double ds = 0.5 * w * std::sin(w * t);
  const double sa = std::sin(angle_);
  const Vec3 dxi_ds = (angle_ / sa) * (-std::cos((1.0 - s) * angle_) * a_ + std::cos(s * angle_) * b_);
  return ds * dxi_ds;
}

void SuslovParams::validate() const { check_inertia(inertia, "suslov"); }

SuslovRates suslov_rates(const SuslovParams& params, double t, const Vec3& omega) {
  const Vec3& in = params.inertia;
  const Vec3 xi = params.xi.value(t);
  const Vec3 xi_dot = params.xi.rate(t);
  const Vec3 euler = cross(hadamard(in, omega), omega);
  const Vec3 inv_xi = inv_inertia(in, xi);
  const double lambda = -(dot(omega, xi_dot) + dot(euler, inv_xi)) / dot(xi, inv_xi);
  return {inv_inertia(in, euler + lambda * xi), lambda};
}

SuslovRates suslov_rhs(const SuslovParams& params, double t, const Vec3& omega) {
  const double c = dot(omega, params.xi.value(t));
  if (!(std::abs(c) <= kSuslovTolerance)) {
    std::ostringstream msg;
    msg << "suslov: <Omega, xi> = " << c << " violates the constraint";
    throw ValidationError(msg.str());
  }
  return suslov_rates(params, t, omega);
}

void suslov_packed(const SuslovParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  dx.resize(3);
  put(dx, 0, suslov_rates(params, t, vec3_at(x, 0)).omega_dot);
}

double rotational_energy(const Vec3& inertia, const Vec3& omega) { return 0.5 * dot(omega, hadamard(inertia, omega)); }

}  // namespace rollball
