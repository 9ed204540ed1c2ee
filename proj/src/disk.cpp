#include "rollball/disk.hpp"

#include <cmath>
#include <numbers>

#include "rollball/errors.hpp"

namespace rollball {

namespace {

constexpr double kPlanarTolerance = 1e-12;

struct PlanarPoint {
  double z1, z3;     // zeta
  double d1, d3;     // zeta'
  double dd1, dd3;   // zeta''
};

PlanarPoint planar_eval(const Rail& rail, double theta) {
  const RailPoint p = rail_eval(rail, theta);
  return {p.pos.x, p.pos.z, p.d1.x, p.d1.z, p.d2.x, p.d2.z};
}

void check_sizes(const DiskParams& params, const DiskState& s, std::span<const double> u) {
  if (s.theta.size() != params.n() || s.theta_dot.size() != params.n())
    throw ValidationError("disk: theta and theta_dot must have one entry per moving mass");
  if (u.size() != params.n()) throw ValidationError("disk: u must have one entry per moving mass");
}

double k_from_point(const DiskParams& params, const PlanarPoint& z, double thd, double thdd, double phi,
                    double phid) {
  const double r = params.radius;
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  return (params.gravity + r * phid * phid) * (z.z3 * s - z.z1 * c) +
         (r * c + z.z3) * (-2.0 * phid * thd * z.d3 + thd * thd * z.dd1 + thdd * z.d1) -
         (r * s + z.z1) * (2.0 * phid * thd * z.d1 + thd * thd * z.dd3 + thdd * z.d3);
}

double kappa_raw(const DiskParams& params, double t, const double* theta, const double* theta_dot, const double* u,
                 double phi, double phid) {
  const double r = params.radius;
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  double num = -r * params.force_x(t);
  double den = params.d2;
  for (std::size_t i = 0; i <= params.n(); ++i) {
    const double th = i == 0 ? 0.0 : theta[i - 1];
    const double thd = i == 0 ? 0.0 : theta_dot[i - 1];
    const double thdd = i == 0 ? 0.0 : u[i - 1];
    const PlanarPoint z = planar_eval(params.rails[i], th);
    const double m = params.masses[i];
    num += m * k_from_point(params, z, thd, thdd, phi, phid);
    const double a = r * s + z.z1;
    const double b = r * c + z.z3;
    den += m * (a * a + b * b);
  }
  return num / den;
}

}  // namespace

double DiskParams::total_mass() const {
  double m = 0.0;
  for (double mi : masses) m += mi;
  return m;
}

void DiskParams::validate() const {
  if (masses.empty()) throw ValidationError("disk: masses must contain at least m_0");
  for (std::size_t i = 0; i < masses.size(); ++i)
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
      throw ValidationError("disk: masses[" + std::to_string(i) + "] must be positive and finite");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("disk: radius must be positive");
  if (!(d2 > 0.0) || !std::isfinite(d2)) throw ValidationError("disk: d2 must be positive");
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) throw ValidationError("disk: gravity must be non-negative");
  if (rails.size() != masses.size()) throw ValidationError("disk: need exactly one rail per mass");
  if (!std::holds_alternative<StaticPoint>(rails[0])) throw ValidationError("disk: rails[0] must be a static point");
  if (accel.size() != n()) throw ValidationError("disk: need exactly one acceleration profile per moving mass");
  for (std::size_t i = 0; i < rails.size(); ++i) {
    // A circle lies in a plane, so three parameter values pin its plane.
    for (double th : {0.0, 2.0, 4.0}) {
      const RailPoint p = rail_eval(rails[i], th);
      if (std::abs(p.pos.y) > kPlanarTolerance || std::abs(p.d1.y) > kPlanarTolerance)
        throw ValidationError("disk: rails[" + std::to_string(i) + "] leaves the e1-e3 plane");
    }
  }
}

Eigen::VectorXd DiskState::pack() const {
  const std::size_t n = theta.size();
  Eigen::VectorXd x(2 * n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = theta[i];
    x[n + i] = theta_dot[i];
  }
  x[2 * n] = phi;
  x[2 * n + 1] = phi_dot;
  return x;
}

DiskState DiskState::unpack(const Eigen::VectorXd& x, std::size_t n) {
  if (static_cast<std::size_t>(x.size()) != 2 * n + 2) throw ValidationError("disk: packed state has wrong size");
  DiskState s;
  s.theta.assign(x.data(), x.data() + n);
  s.theta_dot.assign(x.data() + n, x.data() + 2 * n);
  s.phi = x[2 * n];
  s.phi_dot = x[2 * n + 1];
  return s;
}

double K_term(const DiskParams& params, std::size_t i, double theta, double theta_dot, double theta_ddot,
              double phi, double phi_dot) {
  if (i > params.n()) throw ValidationError("K_term: mass index out of range");
  if (i == 0) theta = theta_dot = theta_ddot = 0.0;
  return k_from_point(params, planar_eval(params.rails[i], theta), theta_dot, theta_ddot, phi, phi_dot);
}

double kappa_disk(const DiskParams& params, double t, const DiskState& state, std::span<const double> u) {
  check_sizes(params, state, u);
  return kappa_raw(params, t, state.theta.data(), state.theta_dot.data(), u.data(), state.phi, state.phi_dot);
}

double newton_oracle(const DiskParams& params, double t, const DiskState& state, double theta_ddot_1) {
  if (params.n() != 1) throw ValidationError("newton_oracle: requires exactly one moving mass");
  const auto* m0 = std::get_if<StaticPoint>(&params.rails[0]);
  if (m0 == nullptr || m0->chi != Vec3::zero()) throw ValidationError("newton_oracle: m_0's CM must be at the GC");
  const auto* c = std::get_if<CircleRail>(&params.rails[1]);
  if (c == nullptr || c->center_offset() != Vec3::zero() || c->basis() != Mat3::identity())
    throw ValidationError("newton_oracle: mass 1 must ride a circle r_1 (cos, 0, sin) about the GC");
  if (state.theta.size() != 1 || state.theta_dot.size() != 1)
    throw ValidationError("newton_oracle: state must have one moving mass");

  const double r = params.radius;
  const double r1 = c->radius();
  const double m1 = params.masses[1];
  const double a = state.phi + state.theta[0];
  const double w = state.phi_dot + state.theta_dot[0];
  const double num = r * params.force_x(t) +
                     m1 * r1 * (std::cos(a) * (r * w * w + params.gravity) + (r1 + r * std::sin(a)) * theta_ddot_1);
  const double den = params.d2 + (params.masses[0] + m1) * r * r + m1 * r1 * (r1 + 2.0 * r * std::sin(a));
  return -num / den;
}

Eigen::VectorXd rhs_disk(const DiskParams& params, double t, const DiskState& state, std::span<const double> u) {
  check_sizes(params, state, u);
  const std::size_t n = params.n();
  Eigen::VectorXd dx(2 * n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = state.theta_dot[i];
    dx[n + i] = u[i];
  }
  dx[2 * n] = state.phi_dot;
  dx[2 * n + 1] = kappa_disk(params, t, state, u);
  return dx;
}

void disk_rhs(const DiskParams& params, double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  const std::size_t n = params.n();
  thread_local std::vector<double> u;
  u.resize(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = accel_eval(params.accel[i], t);
  dx.resize(static_cast<Eigen::Index>(2 * n + 2));
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = x[n + i];
    dx[n + i] = u[i];
  }
  dx[2 * n] = x[2 * n + 1];
  dx[2 * n + 1] = kappa_raw(params, t, x.data(), x.data() + n, u.data(), x[2 * n], x[2 * n + 1]);
}

double gc_position(double z_a, double phi_a, double phi, double radius) { return z_a - radius * (phi - phi_a); }

Energy disk_energy(const DiskParams& params, const DiskState& state) {
  if (state.theta.size() != params.n() || state.theta_dot.size() != params.n())
    throw ValidationError("disk: theta and theta_dot must have one entry per moving mass");
  const double r = params.radius;
  const double sn = std::sin(state.phi);
  const double cs = std::cos(state.phi);
  const double w = state.phi_dot;
  Energy e;
  e.kinetic = 0.5 * params.d2 * w * w;
  for (std::size_t i = 0; i <= params.n(); ++i) {
    const double thd = i == 0 ? 0.0 : state.theta_dot[i - 1];
    const PlanarPoint z = planar_eval(params.rails[i], i == 0 ? 0.0 : state.theta[i - 1]);
    const double s1 = r * sn + z.z1;
    const double s3 = r * cs + z.z3;
    // Y = (-E2 phi_dot) x s + theta_dot zeta'
    const double y1 = -w * s3 + thd * z.d1;
    const double y3 = w * s1 + thd * z.d3;
    e.kinetic += 0.5 * params.masses[i] * (y1 * y1 + y3 * y3);
    e.potential += params.gravity * params.masses[i] * (z.z1 * sn + z.z3 * cs);
  }
  return e;
}

DiskMassPositions disk_mass_positions(const DiskParams& params, const DiskState& state) {
  if (state.theta.size() != params.n()) throw ValidationError("disk: theta must have one entry per moving mass");
  const double sn = std::sin(state.phi);
  const double cs = std::cos(state.phi);
  const double total = params.total_mass();
  DiskMassPositions out;
  for (std::size_t i = 0; i <= params.n(); ++i) {
    const PlanarPoint z = planar_eval(params.rails[i], i == 0 ? 0.0 : state.theta[i - 1]);
    out.body_gc.push_back({z.z1, z.z3});
    out.spatial_gc.push_back({cs * z.z1 - sn * z.z3, sn * z.z1 + cs * z.z3});
    const double w = params.masses[i] / total;
    out.system_cm_body_gc[0] += w * z.z1;
    out.system_cm_body_gc[1] += w * z.z3;
  }
  const auto& cm = out.system_cm_body_gc;
  out.system_cm_spatial_gc = {cs * cm[0] - sn * cm[1], sn * cm[0] + cs * cm[1]};
  return out;
}

BallParams embed_disk_params(const DiskParams& params, double d1, double d3) {
  BallParams b;
  b.masses = params.masses;
  b.radius = params.radius;
  b.inertia = {d1, params.d2, d3};
  b.gravity = params.gravity;
  b.rails = params.rails;
  b.accel = params.accel;
  b.force.fx = params.force_x;
  return b;
}

BallState embed_disk_state(const DiskParams& params, const DiskState& state, double z_a, double phi_a) {
  BallState b;
  b.theta = state.theta;
  b.theta_dot = state.theta_dot;
  b.q = Quat(std::cos(0.5 * state.phi), 0.0, -std::sin(0.5 * state.phi), 0.0);
  b.omega = {0.0, -state.phi_dot, 0.0};
  b.z = {gc_position(z_a, phi_a, state.phi, params.radius), 0.0};
  return b;
}

double disk_angle_from_versor(const Quat& q) {
  return std::remainder(2.0 * std::atan2(-q.v.y, q.w), 2.0 * std::numbers::pi);
}

}  // namespace rollball
