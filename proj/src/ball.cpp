#include "rollball/ball.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rollball/errors.hpp"

namespace rollball {

namespace {

constexpr double kFrameTolerance = 1e-6;
constexpr double kMaxCondition = 1e12;

// Frame variables from any nonzero q; the rotation uses q / |q|.
FrameVars frame_from_quat(const BallParams& params, double t, const Quat& q, const Vec3& omega) {
  FrameVars f;
  f.lambda = versor_to_rotation(Versor::normalized(q));
  const Mat3 lt = f.lambda.transposed();
  f.gamma = lt.col(2);
  f.gamma_tilde = lt * params.force(t);
  f.omega_spatial = f.lambda * omega;
  return f;
}

std::string describe(double t, const Vec3& omega, const Quat& q) {
  std::ostringstream s;
  s.precision(17);
  s << "t=" << t << " q=(" << q.w << "," << q.v.x << "," << q.v.y << "," << q.v.z << ") Omega=(" << omega.x << ","
    << omega.y << "," << omega.z << ")";
  return s.str();
}

// Omega_dot from raw state blocks. theta/theta_dot/u have length n.
Vec3 kappa(const BallParams& params, double t, const double* theta, const double* theta_dot, const double* u,
           const Quat& q, const Vec3& omega, const FrameVars& f) {
  const double r = params.radius;
  const double g = params.gravity;
  const Vec3& gamma = f.gamma;
  const Vec3 i_omega = hadamard(params.inertia, omega);

  Mat3 a = -1.0 * Mat3::diag(params.inertia);
  Vec3 b = cross(omega, i_omega) + r * cross(f.gamma_tilde, gamma);
  const std::size_t n = params.n();
  for (std::size_t i = 0; i <= n; ++i) {
    const double th = i == 0 ? 0.0 : theta[i - 1];
    const double thd = i == 0 ? 0.0 : theta_dot[i - 1];
    const double thdd = i == 0 ? 0.0 : u[i - 1];
    const RailPoint p = rail_eval(params.rails[i], th);
    const Vec3 s = r * gamma + p.pos;
    const double m = params.masses[i];
    a += m * hat_sq(s);
    const Vec3 accel = g * gamma + cross(omega, cross(omega, p.pos) + 2.0 * thd * p.d1) + (thd * thd) * p.d2 +
                       thdd * p.d1;
    b += m * cross(s, accel);
  }

  // -A is symmetric positive definite.
  const Mat3 neg_a = -1.0 * a;
  const auto eig = symmetric_eigenvalues(neg_a);
  if (!(eig[0] > 0.0) || eig[2] / eig[0] > kMaxCondition) {
    std::ostringstream msg;
    msg << "rolling-ball matrix A is numerically singular (eigenvalues of -A: " << eig[0] << ", " << eig[1] << ", "
        << eig[2] << ") at " << describe(t, omega, q);
    throw SingularityError(msg.str());
  }
  return Cholesky3(neg_a).solve(-b);
}

void check_u(const BallParams& params, std::span<const double> u) {
  if (u.size() != params.n()) throw ValidationError("ball: u must have one entry per moving mass");
}

void check_state(const BallParams& params, const BallState& s) {
  if (s.theta.size() != params.n() || s.theta_dot.size() != params.n())
    throw ValidationError("ball: theta and theta_dot must have one entry per moving mass");
}

// f(t, x, u) on a packed state; the frame is built from q / |q|.
void packed_rhs(const BallParams& params, double t, const Eigen::VectorXd& x, const double* u, Eigen::VectorXd& dx) {
  const BallLayout l{params.n()};
  const Quat q(x[l.q()], x[l.q() + 1], x[l.q() + 2], x[l.q() + 3]);
  const double nq = norm(q);
  if (!(nq > 0.0) || !std::isfinite(nq)) throw DomainError("ball: attitude quaternion is zero or non-finite");
  const Vec3 omega{x[l.omega()], x[l.omega() + 1], x[l.omega() + 2]};
  const FrameVars f = frame_from_quat(params, t, q, omega);

  dx.resize(static_cast<Eigen::Index>(l.size()));
  for (std::size_t i = 0; i < l.n; ++i) {
    dx[l.theta() + i] = x[l.theta_dot() + i];
    dx[l.theta_dot() + i] = u[i];
  }
  const Quat qd = quat_kinematics(q, omega);
  for (std::size_t i = 0; i < 4; ++i) dx[l.q() + i] = qd[i];
  const Vec3 od = kappa(params, t, x.data() + l.theta(), x.data() + l.theta_dot(), u, q, omega, f);
  for (std::size_t i = 0; i < 3; ++i) dx[l.omega() + i] = od[i];
  const Vec3 zd = cross(f.omega_spatial, params.radius * Vec3::unit_z());
  dx[l.z()] = zd.x;
  dx[l.z() + 1] = zd.y;
}

}  // namespace

bool ExternalForce::is_zero() const {
  for (const auto* c : {&fx, &fy, &fz})
    for (const auto& p : c->points())
      if (p.value != 0.0) return false;
  return true;
}

double BallParams::total_mass() const {
  double m = 0.0;
  for (double mi : masses) m += mi;
  return m;
}

void BallParams::validate() const {
  if (masses.empty()) throw ValidationError("ball: masses must contain at least m_0");
  for (std::size_t i = 0; i < masses.size(); ++i)
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
      throw ValidationError("ball: masses[" + std::to_string(i) + "] must be positive and finite");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("ball: radius must be positive");
  if (!(inertia.x > 0.0 && inertia.y > 0.0 && inertia.z > 0.0) || !is_finite(inertia))
    throw ValidationError("ball: inertia entries must be positive");
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) throw ValidationError("ball: gravity must be non-negative");
  if (rails.size() != masses.size()) throw ValidationError("ball: need exactly one rail per mass");
  if (!std::holds_alternative<StaticPoint>(rails[0])) throw ValidationError("ball: rails[0] must be a static point");
  if (accel.size() != n()) throw ValidationError("ball: need exactly one acceleration profile per moving mass");
}

Eigen::VectorXd BallState::pack() const {
  const BallLayout l{theta.size()};
  Eigen::VectorXd x(l.size());
  for (std::size_t i = 0; i < l.n; ++i) {
    x[l.theta() + i] = theta[i];
    x[l.theta_dot() + i] = theta_dot[i];
  }
  for (std::size_t i = 0; i < 4; ++i) x[l.q() + i] = q[i];
  for (std::size_t i = 0; i < 3; ++i) x[l.omega() + i] = omega[i];
  x[l.z()] = z[0];
  x[l.z() + 1] = z[1];
  return x;
}

BallState BallState::unpack(const Eigen::VectorXd& x, std::size_t n) {
  const BallLayout l{n};
  if (static_cast<std::size_t>(x.size()) != l.size()) throw ValidationError("ball: packed state has wrong size");
  BallState s;
  s.theta.assign(x.data() + l.theta(), x.data() + l.theta() + n);
  s.theta_dot.assign(x.data() + l.theta_dot(), x.data() + l.theta_dot() + n);
  s.q = Quat(x[l.q()], x[l.q() + 1], x[l.q() + 2], x[l.q() + 3]);
  s.omega = {x[l.omega()], x[l.omega() + 1], x[l.omega() + 2]};
  s.z = {x[l.z()], x[l.z() + 1]};
  return s;
}

FrameVars frame_vars(const BallParams& params, double t, const BallState& state) {
  const double nq = norm(state.q);
  if (!(std::abs(nq - 1.0) <= kFrameTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "frame_vars: |q| = " << nq << " is not unit within " << kFrameTolerance;
    throw ValidationError(msg.str());
  }
  return frame_from_quat(params, t, state.q, state.omega);
}

std::vector<double> prescribed_u(const BallParams& params, double t) {
  std::vector<double> u(params.accel.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = accel_eval(params.accel[i], t);
  return u;
}

Vec3 omega_dot(const BallParams& params, double t, const BallState& state, std::span<const double> u) {
  check_state(params, state);
  check_u(params, u);
  const FrameVars f = frame_vars(params, t, state);
  return kappa(params, t, state.theta.data(), state.theta_dot.data(), u.data(), state.q, state.omega, f);
}

Eigen::VectorXd rhs_ode(const BallParams& params, double t, const BallState& state, std::span<const double> u) {
  check_state(params, state);
  check_u(params, u);
  frame_vars(params, t, state);  // validates |q|
  Eigen::VectorXd dx;
  packed_rhs(params, t, state.pack(), u.data(), dx);
  return dx;
}

Eigen::VectorXd dae_residual(const BallParams& params, double t, const BallState& state,
                             const Eigen::VectorXd& state_dot, std::span<const double> u) {
  check_state(params, state);
  check_u(params, u);
  const BallLayout l{params.n()};
  if (static_cast<std::size_t>(state_dot.size()) != l.size())
    throw ValidationError("dae_residual: state_dot has wrong size");
  // The frame uses q / |q| off the constraint manifold; the algebraic row
  // measures the gap.
  const FrameVars f = frame_from_quat(params, t, state.q, state.omega);

  Eigen::VectorXd res(l.size());
  for (std::size_t i = 0; i < l.n; ++i) {
    res[l.theta() + i] = state_dot[l.theta() + i] - state.theta_dot[i];
    res[l.theta_dot() + i] = state_dot[l.theta_dot() + i] - u[i];
  }
  res[l.q()] = squared_norm(state.q) - 1.0;
  const Quat qd = quat_kinematics(state.q, state.omega);
  for (std::size_t i = 1; i < 4; ++i) res[l.q() + i] = state_dot[l.q() + i] - qd[i];
  const Vec3 od = kappa(params, t, state.theta.data(), state.theta_dot.data(), u.data(), state.q, state.omega, f);
  for (std::size_t i = 0; i < 3; ++i) res[l.omega() + i] = state_dot[l.omega() + i] - od[i];
  const Vec3 zd = cross(f.omega_spatial, params.radius * Vec3::unit_z());
  res[l.z()] = state_dot[l.z()] - zd.x;
  res[l.z() + 1] = state_dot[l.z() + 1] - zd.y;
  return res;
}

Energy energy(const BallParams& params, double t, const BallState& state) {
  check_state(params, state);
  const FrameVars f = frame_vars(params, t, state);
  const Vec3& om = state.omega;
  Energy e;
  e.kinetic = 0.5 * dot(om, hadamard(params.inertia, om));
  for (std::size_t i = 0; i <= params.n(); ++i) {
    const double th = i == 0 ? 0.0 : state.theta[i - 1];
    const double thd = i == 0 ? 0.0 : state.theta_dot[i - 1];
    const RailPoint p = rail_eval(params.rails[i], th);
    const Vec3 s = params.radius * f.gamma + p.pos;
    const Vec3 y = cross(om, s) + thd * p.d1;
    e.kinetic += 0.5 * params.masses[i] * squared_norm(y);
    e.potential += params.gravity * params.masses[i] * dot(p.pos, f.gamma);
  }
  return e;
}

MassPositions mass_positions(const BallParams& params, const BallState& state) {
  check_state(params, state);
  const Mat3 lambda = versor_to_rotation(Versor::normalized(state.q));
  MassPositions out;
  const double total = params.total_mass();
  for (std::size_t i = 0; i <= params.n(); ++i) {
    const Vec3 chi = rail_eval(params.rails[i], i == 0 ? 0.0 : state.theta[i - 1]).pos;
    out.body_gc.push_back(chi);
    out.spatial_gc.push_back(lambda * chi);
    out.system_cm_body_gc += (params.masses[i] / total) * chi;
  }
  out.system_cm_spatial_gc = lambda * out.system_cm_body_gc;
  return out;
}

void ball_rhs(const BallParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  thread_local std::vector<double> u;
  u.resize(params.n());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = accel_eval(params.accel[i], t);
  packed_rhs(params, t, x, u.data(), dx);
}

Eigen::MatrixXd jacobian_fd(const BallParams& params, double t, const BallState& state,
                            std::span<const double> u, double rel_step) {
  check_state(params, state);
  check_u(params, u);
  const std::size_t n = params.n();
  const BallLayout l{n};
  const Eigen::VectorXd x0 = state.pack();
  Eigen::MatrixXd jac(l.size(), l.size());
  Eigen::VectorXd fp, fm;
  for (std::size_t j = 0; j < l.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x0[j]));
    Eigen::VectorXd xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    packed_rhs(params, t, xp, u.data(), fp);
    packed_rhs(params, t, xm, u.data(), fm);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

void normalize_versor_block(Eigen::VectorXd& x, std::size_t offset) {
  const double nq = x.segment<4>(offset).norm();
  if (nq > 0.0 && std::isfinite(nq)) x.segment<4>(offset) /= nq;
}

}  // namespace rollball
