// Rolling ball actuated by point masses on body-fixed rails.
//
// State layout (size 2n + 9): theta(n), theta_dot(n), q(4), Omega(3), z(2).
// Mass 0 is the static structure; its rail must be a StaticPoint at chi_0.
#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rollball/rails.hpp"
#include "rollball/so3.hpp"

namespace rollball {

/// Spatial external force on the GC, one piecewise-linear table per component.
struct ExternalForce {
  PiecewiseLinear fx = PiecewiseLinear::constant(0.0);
  PiecewiseLinear fy = PiecewiseLinear::constant(0.0);
  PiecewiseLinear fz = PiecewiseLinear::constant(0.0);

  static ExternalForce constant(const Vec3& f) {
    return {PiecewiseLinear::constant(f.x), PiecewiseLinear::constant(f.y), PiecewiseLinear::constant(f.z)};
  }
  Vec3 operator()(double t) const { return {fx(t), fy(t), fz(t)}; }
  bool is_zero() const;

  friend bool operator==(const ExternalForce&, const ExternalForce&) = default;
};

struct BallParams {
  std::vector<double> masses;  // m_0 .. m_n
  double radius = 1.0;
  Vec3 inertia{1.0, 1.0, 1.0};  // principal moments d_1, d_2, d_3 of m_0 about its CM
  double gravity = 1.0;
  std::vector<Rail> rails;           // rails[i] carries m_i
  std::vector<AccelProfile> accel;   // u_1 .. u_n
  ExternalForce force;

  std::size_t n() const { return masses.empty() ? 0 : masses.size() - 1; }
  std::size_t state_size() const { return 2 * n() + 9; }
  double total_mass() const;
  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const BallParams&, const BallParams&) = default;
};

struct BallState {
  std::vector<double> theta;
  std::vector<double> theta_dot;
  Quat q = Quat::identity();
  Vec3 omega;
  std::array<double, 2> z{0.0, 0.0};

  Eigen::VectorXd pack() const;
  static BallState unpack(const Eigen::VectorXd& x, std::size_t n);

  friend bool operator==(const BallState&, const BallState&) = default;
};

/// Offsets of the state blocks inside the packed vector.
struct BallLayout {
  std::size_t n;
  std::size_t theta() const { return 0; }
  std::size_t theta_dot() const { return n; }
  std::size_t q() const { return 2 * n; }
  std::size_t omega() const { return 2 * n + 4; }
  std::size_t z() const { return 2 * n + 7; }
  std::size_t size() const { return 2 * n + 9; }
};

struct FrameVars {
  Mat3 lambda;        // body -> spatial
  Vec3 gamma;         // Lambda^T e3
  Vec3 gamma_tilde;   // Lambda^T F_e(t)
  Vec3 omega_spatial; // Lambda Omega
};

/// Throws ValidationError if | |q| - 1 | > 1e-6.
FrameVars frame_vars(const BallParams& params, double t, const BallState& state);

/// u_i(t) for i = 1..n from the configured profiles.
std::vector<double> prescribed_u(const BallParams& params, double t);

/// Omega_dot (kappa). Throws SingularityError if cond(A) > 1e12.
Vec3 omega_dot(const BallParams& params, double t, const BallState& state, std::span<const double> u);

/// f(t, x, u) in packed layout.
Eigen::VectorXd rhs_ode(const BallParams& params, double t, const BallState& state, std::span<const double> u);

/// M x_dot - g(t, x, u); the q0 row holds the algebraic residual |q|^2 - 1.
Eigen::VectorXd dae_residual(const BallParams& params, double t, const BallState& state,
                             const Eigen::VectorXd& state_dot, std::span<const double> u);

struct Energy {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

Energy energy(const BallParams& params, double t, const BallState& state);

struct MassPositions {
  std::vector<Vec3> body_gc;     // chi_i, i = 0..n
  std::vector<Vec3> spatial_gc;  // Lambda chi_i
  Vec3 system_cm_body_gc;
  Vec3 system_cm_spatial_gc;
};

MassPositions mass_positions(const BallParams& params, const BallState& state);

/// Central-difference Jacobian of rhs_ode in x with u held fixed; column j
/// uses step rel_step * max(1, |x_j|).
Eigen::MatrixXd jacobian_fd(const BallParams& params, double t, const BallState& state,
                            std::span<const double> u, double rel_step = 1e-6);

/// Packed-state right-hand side with u taken from the profiles. Tolerates
/// |q| != 1 by evaluating the frame from q / |q|.
void ball_rhs(const BallParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx);

/// Rescales the q block of a packed state to unit length.
void normalize_versor_block(Eigen::VectorXd& x, std::size_t offset);

}  // namespace rollball
