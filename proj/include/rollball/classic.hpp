// Classic rigid-body systems with known conserved quantities: the free rigid
// body, the heavy top and Suslov's problem. Inertia tensors are diagonal and
// stored as Vec3.
//
// Packed states for the integrators:
//   free rigid body  (Omega(3), q(4))
//   heavy top        (Omega(3), Gamma(3))
//   Suslov           (Omega(3))
#pragma once

#include <Eigen/Core>

#include "rollball/so3.hpp"

namespace rollball {

/// Omega_dot = I^-1 [(I Omega) x Omega].
Vec3 free_rigid_body_rhs(const Vec3& inertia, const Vec3& omega);

void free_rigid_body_packed(const Vec3& inertia, const Eigen::VectorXd& x, Eigen::VectorXd& dx);

/// Spatial angular momentum Lambda I Omega.
Vec3 spatial_momentum(const Vec3& inertia, const Versor& q, const Vec3& omega);

struct HeavyTopParams {
  Vec3 inertia{1.0, 1.0, 1.0};
  double mass = 1.0;
  double gravity = 1.0;
  Vec3 chi;  // support point to CM, body frame

  void validate() const;

  friend bool operator==(const HeavyTopParams&, const HeavyTopParams&) = default;
};

struct HeavyTopRates {
  Vec3 omega_dot;
  Vec3 gamma_dot;
};

HeavyTopRates heavy_top_rhs(const HeavyTopParams& params, const Vec3& omega, const Vec3& gamma);

void heavy_top_packed(const HeavyTopParams& params, const Eigen::VectorXd& x, Eigen::VectorXd& dx);

/// 1/2 <Omega, I Omega> + m g <chi, Gamma>.
double heavy_top_energy(const HeavyTopParams& params, const Vec3& omega, const Vec3& gamma);

/// Constraint direction xi(t): constant, or a slerp from `from` to `to` over
/// [0, duration] eased by s = (1 - cos(pi t / duration)) / 2 and held outside.
/// from() and to() return the endpoints as given; evaluation uses their
/// normalizations.
class XiPath {
 public:
  static XiPath constant(const Vec3& xi);
  /// Throws ValidationError for zero or (anti)parallel endpoints.
  static XiPath slerp(const Vec3& from, const Vec3& to, double duration);

  Vec3 value(double t) const;
  Vec3 rate(double t) const;

  bool is_constant() const { return duration_ == 0.0; }
  const Vec3& from() const { return from_; }
  const Vec3& to() const { return to_; }
  double duration() const { return duration_; }

  friend bool operator==(const XiPath&, const XiPath&) = default;

 private:
  XiPath(const Vec3& from, const Vec3& to, double duration, double angle)
      : from_(from), to_(to), a_(from / norm(from)), b_(to / norm(to)), duration_(duration), angle_(angle) {}
  Vec3 from_;
  Vec3 to_;
  Vec3 a_;  // unit from_
  Vec3 b_;  // unit to_
  double duration_ = 0.0;
  double angle_ = 0.0;
};

struct SuslovParams {
  Vec3 inertia{1.0, 1.0, 1.0};
  XiPath xi = XiPath::constant(Vec3::unit_z());

  void validate() const;

  friend bool operator==(const SuslovParams&, const SuslovParams&) = default;
};

struct SuslovRates {
  Vec3 omega_dot;
  double lambda = 0.0;  // constraint multiplier
};

/// Throws ValidationError unless |<Omega, xi(t)>| <= 1e-9.
SuslovRates suslov_rhs(const SuslovParams& params, double t, const Vec3& omega);

/// As suslov_rhs without the consistency check, for use inside integrators.
SuslovRates suslov_rates(const SuslovParams& params, double t, const Vec3& omega);

void suslov_packed(const SuslovParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx);

/// 1/2 <Omega, I Omega>.
double rotational_energy(const Vec3& inertia, const Vec3& omega);

}  // namespace rollball
