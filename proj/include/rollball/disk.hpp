// Rolling disk: the planar reduction of the ball, rolling along spatial e1.
//
// State layout (size 2n + 2): theta(n), theta_dot(n), phi, phi_dot.
// Rails must lie in the body e1-e3 plane. The disk rotates about body E2 and
// phi > 0 rolls it towards -e1.
#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "rollball/ball.hpp"
#include "rollball/rails.hpp"

namespace rollball {

struct DiskParams {
  std::vector<double> masses;  // m_0 .. m_n
  double radius = 1.0;
  double d2 = 1.0;  // polar moment of m_0 about its CM
  double gravity = 1.0;
  std::vector<Rail> rails;          // rails[0] is a StaticPoint
  std::vector<AccelProfile> accel;  // u_1 .. u_n
  PiecewiseLinear force_x = PiecewiseLinear::constant(0.0);  // F_e,1(t)

  std::size_t n() const { return masses.empty() ? 0 : masses.size() - 1; }
  std::size_t state_size() const { return 2 * n() + 2; }
  double total_mass() const;
  /// Also rejects rails that leave the e1-e3 plane.
  void validate() const;

  friend bool operator==(const DiskParams&, const DiskParams&) = default;
};

struct DiskState {
  std::vector<double> theta;
  std::vector<double> theta_dot;
  double phi = 0.0;
  double phi_dot = 0.0;

  Eigen::VectorXd pack() const;
  static DiskState unpack(const Eigen::VectorXd& x, std::size_t n);

  friend bool operator==(const DiskState&, const DiskState&) = default;
};

/// K_i for mass i (0 <= i <= n). Mass 0 ignores the rail arguments.
double K_term(const DiskParams& params, std::size_t i, double theta, double theta_dot, double theta_ddot,
              double phi, double phi_dot);

/// phi_ddot.
double kappa_disk(const DiskParams& params, double t, const DiskState& state, std::span<const double> u);

/// Closed-form phi_ddot for one mass on a circle of radius r_1 about the GC
/// with m_0's CM at the GC. Throws ValidationError for any other setup.
double newton_oracle(const DiskParams& params, double t, const DiskState& state, double theta_ddot_1);

/// (theta_dot, u, phi_dot, phi_ddot).
Eigen::VectorXd rhs_disk(const DiskParams& params, double t, const DiskState& state, std::span<const double> u);

/// Packed-state right-hand side with u taken from the profiles.
void disk_rhs(const DiskParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx);

/// Spatial e1 coordinate of the GC: z_a - r (phi - phi_a).
double gc_position(double z_a, double phi_a, double phi, double radius);

/// Kinetic and potential energy, identical to the ball energy of the
/// embedded configuration.
Energy disk_energy(const DiskParams& params, const DiskState& state);

/// Body-frame-at-GC positions (e1, e3 components) and the system CM.
struct DiskMassPositions {
  std::vector<std::array<double, 2>> body_gc;
  std::vector<std::array<double, 2>> spatial_gc;
  std::array<double, 2> system_cm_body_gc{0.0, 0.0};
  std::array<double, 2> system_cm_spatial_gc{0.0, 0.0};
};

DiskMassPositions disk_mass_positions(const DiskParams& params, const DiskState& state);

/// Ball parameters for the same physical system: inertia (d1, d2, d3) with
/// the disk's d2, F_e = (F_e,1, 0, 0).
BallParams embed_disk_params(const DiskParams& params, double d1 = 1.0, double d3 = 1.0);

/// q = (cos(phi/2), 0, -sin(phi/2), 0), Omega = -phi_dot E2, z = (z, 0).
BallState embed_disk_state(const DiskParams& params, const DiskState& state, double z_a = 0.0,
                           double phi_a = 0.0);

/// Rotation angle about -E2 encoded by a planar versor, in (-pi, pi].
double disk_angle_from_versor(const Quat& q);

}  // namespace rollball
