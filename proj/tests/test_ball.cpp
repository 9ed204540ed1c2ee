#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "rollball/ball.hpp"
#include "rollball/disk.hpp"
#include "rollball/errors.hpp"

namespace rollball {
namespace {

using fixtures::kPi;

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

BallParams chaplygin(double chi_z) {
  BallParams p;
  p.masses = {1.0};
  p.inertia = {0.9, 1.0, 1.1};
  p.rails = {StaticPoint{{0, 0, chi_z}}};
  return p;
}

BallState random_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2, 2);
  BallState s;
  for (std::size_t i = 0; i < n; ++i) {
    s.theta.push_back(u(rng));
    s.theta_dot.push_back(u(rng));
  }
  s.q = Versor::normalized(Quat(u(rng), u(rng), u(rng), u(rng))).quat();
  s.omega = {u(rng), u(rng), u(rng)};
  s.z = {u(rng), u(rng)};
  return s;
}

// ---- Extended-precision term-by-term assembly of Omega_dot --------------

using LVec = std::array<long double, 3>;

LVec lcross(const LVec& a, const LVec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
LVec ladd(const LVec& a, const LVec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
LVec lscale(long double s, const LVec& a) { return {s * a[0], s * a[1], s * a[2]}; }

// Frisvad frame for unit n, returned as columns [n, b2, -b1].
std::array<LVec, 3> lbasis(const LVec& n) {
  const long double sign = std::copysign(1.0L, n[2]);
  const long double a = -1.0L / (sign + n[2]);
  const long double b = n[0] * n[1] * a;
  const LVec b1{1.0L + sign * n[0] * n[0] * a, sign * b, -sign * n[0]};
  const LVec b2{b, sign + n[1] * n[1] * a, -n[1]};
  return {n, b2, lscale(-1.0L, b1)};
}

LVec lspherical(long double az, long double el) {
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

// Identity attitude, Gamma = e3, F_e = 0.
LVec oracle_omega_dot(const std::vector<long double>& m, const LVec& inertia, long double r, long double g,
                      const LVec& chi0, const std::vector<std::pair<long double, LVec>>& circles,
                      const std::vector<long double>& th, const std::vector<long double>& thd,
                      const std::vector<long double>& u, const LVec& om) {
  const LVec gamma{0, 0, 1};
  long double a[3][3] = {{-inertia[0], 0, 0}, {0, -inertia[1], 0}, {0, 0, -inertia[2]}};
  LVec b = lcross(om, {inertia[0] * om[0], inertia[1] * om[1], inertia[2] * om[2]});
  for (std::size_t i = 0; i < m.size(); ++i) {
    LVec z = chi0, z1{0, 0, 0}, z2{0, 0, 0};
    long double td = 0, tdd = 0;
    if (i > 0) {
      const auto& [rho, dir] = circles[i - 1];
      const auto bcols = lbasis(dir);
      const long double c = std::cos(th[i - 1]), s = std::sin(th[i - 1]);
      for (int k = 0; k < 3; ++k) {
        z[k] = rho * (bcols[0][k] * c + bcols[2][k] * s);
        z1[k] = rho * (-bcols[0][k] * s + bcols[2][k] * c);
        z2[k] = -z[k];
      }
      td = thd[i - 1];
      tdd = u[i - 1];
    }
    const LVec s = ladd(lscale(r, gamma), z);
    const long double ss = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) a[p][q] += m[i] * (s[p] * s[q] - (p == q ? ss : 0.0L));
    LVec acc = lscale(g, gamma);
    acc = ladd(acc, lcross(om, ladd(lcross(om, z), lscale(2 * td, z1))));
    acc = ladd(acc, lscale(td * td, z2));
    acc = ladd(acc, lscale(tdd, z1));
    b = ladd(b, lscale(m[i], lcross(s, acc)));
  }
  // Cramer's rule.
  auto det = [](const long double x[3][3]) {
    return x[0][0] * (x[1][1] * x[2][2] - x[1][2] * x[2][1]) - x[0][1] * (x[1][0] * x[2][2] - x[1][2] * x[2][0]) +
           x[0][2] * (x[1][0] * x[2][1] - x[1][1] * x[2][0]);
  };
  const long double d = det(a);
  LVec out;
  for (int k = 0; k < 3; ++k) {
    long double ak[3][3];
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) ak[p][q] = q == k ? b[p] : a[p][q];
    out[k] = det(ak) / d;
  }
  return out;
}

// ---- frame_vars ----------------------------------------------------------

TEST(FrameVars, IdentityVersor) {
  BallParams p = fixtures::three_rail_ball();
  p.force = ExternalForce::constant({0.3, -0.2, 0.1});
  const BallState s = fixtures::three_rail_ball_state();
  const FrameVars f = frame_vars(p, 0.0, s);
  EXPECT_EQ(f.lambda, Mat3::identity());
  EXPECT_EQ(f.gamma, Vec3::unit_z());
  expect_vec_near(f.gamma_tilde, {0.3, -0.2, 0.1}, 1e-15);
}

TEST(FrameVars, ZeroForceGivesZeroGammaTilde) {
  const FrameVars f = frame_vars(fixtures::three_rail_ball(), 3.0, fixtures::three_rail_ball_state());
  EXPECT_EQ(f.gamma_tilde, Vec3::zero());
}

TEST(FrameVars, DiskEmbeddingGamma) {
  const DiskParams d = fixtures::four_mass_disk();
  DiskState ds = fixtures::four_mass_disk_state();
  for (double phi : {0.3, -1.2, 2.9}) {
    ds.phi = phi;
    const FrameVars f = frame_vars(embed_disk_params(d), 0.0, embed_disk_state(d, ds));
    expect_vec_near(f.gamma, {std::sin(phi), 0.0, std::cos(phi)}, 1e-15);
  }
}

TEST(FrameVars, RejectsNonUnitVersor) {
  BallState s = fixtures::three_rail_ball_state();
  s.q = Quat(1.01, 0, 0, 0);
  EXPECT_THROW(frame_vars(fixtures::three_rail_ball(), 0.0, s), ValidationError);
}

// ---- omega_dot -----------------------------------------------------------

TEST(OmegaDot, RestingChaplyginBallWithCmBelow) {
  const BallParams p = chaplygin(-0.1);
  BallState s;
  EXPECT_EQ(omega_dot(p, 0.0, s, {}), Vec3::zero());
}

TEST(OmegaDot, ThreeRailBallMatchesExtendedPrecisionOracle) {
  const BallParams p = fixtures::three_rail_ball();
  const BallState s = fixtures::three_rail_ball_state();
  const std::vector<double> u{1, 1, 1};
  const Vec3 od = omega_dot(p, 0.0, s, u);

  const long double pi = 3.141592653589793238462643383279502884L;
  const std::vector<std::pair<long double, LVec>> circles{
      {0.95L, lspherical(0, 0)}, {0.9L, lspherical(pi / 2, 0)}, {0.85L, lspherical(pi / 4, pi / 4)}};
  const LVec ref = oracle_omega_dot({1, 1, 1, 1}, {0.9L, 1.0L, 1.1L}, 1.0L, 1.0L, {0, 0, -0.05L}, circles,
                                    {0, 2.0369L, 0.7044L}, {0, 0, 0}, {1, 1, 1}, {0, 0, 0});
  EXPECT_GT(norm(od), 1e-3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(od[static_cast<std::size_t>(k)], static_cast<double>(ref[k]), 1e-14);
}

TEST(OmegaDot, RandomStatesMatchExtendedPrecisionOracle) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(5);
  const long double pi = 3.141592653589793238462643383279502884L;
  const std::vector<std::pair<long double, LVec>> circles{
      {0.95L, lspherical(0, 0)}, {0.9L, lspherical(pi / 2, 0)}, {0.85L, lspherical(pi / 4, pi / 4)}};
  for (int k = 0; k < 200; ++k) {
    BallState s = random_state(rng, 3);
    s.q = Quat::identity();
    const std::vector<double> u{0.7, -0.4, 1.3};
    const Vec3 od = omega_dot(p, 0.0, s, u);
    std::vector<long double> th(s.theta.begin(), s.theta.end()), thd(s.theta_dot.begin(), s.theta_dot.end());
    const LVec ref = oracle_omega_dot({1, 1, 1, 1}, {0.9L, 1.0L, 1.1L}, 1.0L, 1.0L, {0, 0, -0.05L}, circles, th,
                                      thd, {0.7L, -0.4L, 1.3L}, {s.omega.x, s.omega.y, s.omega.z});
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(od[static_cast<std::size_t>(c)], static_cast<double>(ref[c]), 1e-12 * (1 + std::abs(ref[c])));
  }
}

TEST(OmegaDot, DiskEmbeddingAtStart) {
  const DiskParams d = fixtures::four_mass_disk();
  const BallParams b = embed_disk_params(d);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 100; ++k) {
    DiskState ds;
    for (int i = 0; i < 4; ++i) {
      ds.theta.push_back(u(rng));
      ds.theta_dot.push_back(u(rng));
    }
    ds.phi = u(rng);
    ds.phi_dot = u(rng);
    const std::vector<double> acc{u(rng), u(rng), u(rng), u(rng)};
    const Vec3 od = omega_dot(b, 0.0, embed_disk_state(d, ds), acc);
    const double phi_ddot = kappa_disk(d, 0.0, ds, acc);
    EXPECT_NEAR(od.x, 0.0, 1e-12);
    EXPECT_NEAR(od.y, -phi_ddot, 1e-12 * (1 + std::abs(phi_ddot)));
    EXPECT_NEAR(od.z, 0.0, 1e-12);
  }
}

TEST(OmegaDot, FrozenMassesMatchLumpedStaticStructure) {
  // A static structure of the same total mass and CM, with the frozen masses
  // folded into a full inertia tensor about that CM.
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    BallState s = random_state(rng, 3);
    std::fill(s.theta_dot.begin(), s.theta_dot.end(), 0.0);
    const std::vector<double> u{0, 0, 0};
    const Vec3 od = omega_dot(p, 0.0, s, u);

    const MassPositions mp = mass_positions(p, s);
    const double mt = p.total_mass();
    const Eigen::Vector3d cm(mp.system_cm_body_gc.x, mp.system_cm_body_gc.y, mp.system_cm_body_gc.z);
    Eigen::Matrix3d inertia = Eigen::Vector3d(p.inertia.x, p.inertia.y, p.inertia.z).asDiagonal();
    for (std::size_t i = 0; i <= p.n(); ++i) {
      const Vec3& c = mp.body_gc[i];
      const Eigen::Vector3d d = Eigen::Vector3d(c.x, c.y, c.z) - cm;
      inertia += p.masses[i] * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
    }
    const Eigen::Matrix3d lam = Eigen::Quaterniond(s.q.w, s.q.v.x, s.q.v.y, s.q.v.z).toRotationMatrix();
    const Eigen::Vector3d gamma = lam.transpose() * Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d om(s.omega.x, s.omega.y, s.omega.z);
    const Eigen::Vector3d s0 = gamma + cm;  // r = 1
    Eigen::Matrix3d s0hat;
    s0hat << 0, -s0.z(), s0.y(), s0.z(), 0, -s0.x(), -s0.y(), s0.x(), 0;
    const Eigen::Matrix3d a = mt * s0hat * s0hat - inertia;
    const Eigen::Vector3d rhs = om.cross(inertia * om) + mt * s0.cross(gamma + om.cross(om.cross(cm)));
    const Eigen::Vector3d ref = a.lu().solve(rhs);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(od[static_cast<std::size_t>(c)], ref[c], 1e-12 * (1 + std::abs(ref[c])));
  }
}

TEST(OmegaDot, MatrixIsNegativeDefiniteOnRandomStates) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k) {
    const BallState s = random_state(rng, 3);
    const FrameVars f = frame_vars(p, 0.0, s);
    Mat3 a = -1.0 * Mat3::diag(p.inertia);
    for (std::size_t i = 0; i <= p.n(); ++i) {
      const Vec3 chi = rail_eval(p.rails[i], i == 0 ? 0.0 : s.theta[i - 1]).pos;
      a += p.masses[i] * hat_sq(f.gamma + chi);
    }
    const Eigen::Matrix3d e = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(&a(0, 0));
    EXPECT_LT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(e).eigenvalues().maxCoeff(), 0.0);
  }
}

TEST(OmegaDot, RejectsWrongControlLength) {
  const std::vector<double> u{1, 1};
  EXPECT_THROW(omega_dot(fixtures::three_rail_ball(), 0.0, fixtures::three_rail_ball_state(), u), ValidationError);
}

// ---- rhs_ode -------------------------------------------------------------

TEST(RhsOde, EquilibriumIsStationary) {
  const BallParams p = chaplygin(-0.2);
  const Eigen::VectorXd dx = rhs_ode(p, 0.0, BallState{}, {});
  EXPECT_EQ(dx.size(), 9);
  EXPECT_EQ(dx.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(RhsOde, SpinAboutVerticalDoesNotTranslate) {
  const BallParams p = chaplygin(-0.2);
  BallState s;
  s.omega = {0, 0, 1.7};
  const Eigen::VectorXd dx = rhs_ode(p, 0.0, s, {});
  EXPECT_EQ(dx[7], 0.0);
  EXPECT_EQ(dx[8], 0.0);
}

TEST(RhsOde, ThreeRailBallStartsWithoutTranslation) {
  const BallParams p = fixtures::three_rail_ball();
  const std::vector<double> u = prescribed_u(p, 0.0);
  const Eigen::VectorXd dx = rhs_ode(p, 0.0, fixtures::three_rail_ball_state(), u);
  EXPECT_EQ(dx[13], 0.0);
  EXPECT_EQ(dx[14], 0.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(dx[i], 0.0);
    EXPECT_EQ(dx[3 + i], 1.0);
  }
}

TEST(RhsOde, RollingVelocityIsOmegaCrossRadius) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const BallState s = random_state(rng, 3);
    const std::vector<double> u{0.1, 0.2, 0.3};
    const Eigen::VectorXd dx = rhs_ode(p, 0.0, s, u);
    const Vec3 w = versor_to_rotation(Versor(s.q)) * s.omega;
    EXPECT_NEAR(dx[13], w.y, 1e-14);
    EXPECT_NEAR(dx[14], -w.x, 1e-14);
  }
}

// ---- dae_residual --------------------------------------------------------

TEST(DaeResidual, OdeSolutionSatisfiesDae) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const BallState s = random_state(rng, 3);
    const std::vector<double> u{0.5, -1.0, 0.25};
    const Eigen::VectorXd res = dae_residual(p, 0.0, s, rhs_ode(p, 0.0, s, u), u);
    EXPECT_LE(res.lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(DaeResidual, AlgebraicRowMeasuresNormGap) {
  const BallParams p = fixtures::three_rail_ball();
  BallState s = fixtures::three_rail_ball_state();
  s.q = Quat(std::sqrt(1.01), 0, 0, 0);
  const std::vector<double> u{0, 0, 0};
  const Eigen::VectorXd res = dae_residual(p, 0.0, s, Eigen::VectorXd::Zero(15), u);
  EXPECT_NEAR(res[6], 0.01, 1e-15);
}

// ---- energy --------------------------------------------------------------

TEST(Energy, RestHasNoKineticEnergy) {
  EXPECT_EQ(energy(fixtures::three_rail_ball(), 0.0, fixtures::three_rail_ball_state()).kinetic, 0.0);
}

TEST(Energy, ThreeRailPotentialIsSumOfHeights) {
  const BallParams p = fixtures::three_rail_ball();
  const BallState s = fixtures::three_rail_ball_state();
  // Rail 1 starts on +E1 and rail 2 lies in the E1-E2 plane, so both sit at
  // height 0. Rail 3's plane has axes with E3 components sqrt(1/2) and 1/2.
  const double h1 = 0.0;
  const double h2 = 0.0;
  const double h3 = 0.85 * (std::sqrt(0.5) * std::cos(0.7044) + 0.5 * std::sin(0.7044));
  const double expected = -0.05 + h1 + h2 + h3;
  EXPECT_NEAR(energy(p, 0.0, s).potential, expected, 1e-15);
}

TEST(Energy, KineticEnergyMatchesVelocityOracle) {
  // T from the rolling velocity of each mass: v_i = omega x (x_i - contact)
  // plus rail motion, all in the spatial frame.
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(10);
  for (int k = 0; k < 50; ++k) {
    const BallState s = random_state(rng, 3);
    const Mat3 lam = versor_to_rotation(Versor(s.q));
    const Vec3 w = lam * s.omega;
    double t = 0.5 * dot(s.omega, hadamard(p.inertia, s.omega));
    for (std::size_t i = 0; i <= 3; ++i) {
      const RailPoint rp = rail_eval(p.rails[i], i == 0 ? 0.0 : s.theta[i - 1]);
      const Vec3 lever = lam * rp.pos + Vec3::unit_z();  // from the contact point, r = 1
      const Vec3 v = cross(w, lever) + (i == 0 ? 0.0 : s.theta_dot[i - 1]) * (lam * rp.d1);
      t += 0.5 * p.masses[i] * squared_norm(v);
    }
    EXPECT_NEAR(energy(p, 0.0, s).kinetic, t, 1e-12 * t);
  }
}

// ---- mass_positions ------------------------------------------------------

TEST(MassPositions, ThreeRailCmIsAboveCenter) {
  const MassPositions mp = mass_positions(fixtures::three_rail_ball(), fixtures::three_rail_ball_state());
  const Vec3 cm = mp.system_cm_body_gc;
  EXPECT_GT(cm.z, 0.1);
  // theta_a is given to four digits, so the CM is on the axis to ~1e-5.
  EXPECT_LT(std::hypot(cm.x, cm.y), 2e-5);
}

TEST(MassPositions, IdentityVersorLeavesPositionsUnchanged) {
  const MassPositions mp = mass_positions(fixtures::three_rail_ball(), fixtures::three_rail_ball_state());
  for (std::size_t i = 0; i < mp.body_gc.size(); ++i) EXPECT_EQ(mp.spatial_gc[i], mp.body_gc[i]);
  EXPECT_EQ(mp.system_cm_spatial_gc, mp.system_cm_body_gc);
}

TEST(MassPositions, DiskStartHasCmStraightBelow) {
  const DiskParams d = fixtures::four_mass_disk();
  const MassPositions mp = mass_positions(embed_disk_params(d), embed_disk_state(d, fixtures::four_mass_disk_state()));
  const double expected = -(0.9 + 19.0 / 30.0 + 11.0 / 30.0 + 0.1) / 5.0;
  expect_vec_near(mp.system_cm_body_gc, {0, 0, expected}, 1e-15);
}

// ---- jacobian_fd ---------------------------------------------------------

TEST(JacobianFd, KinematicBlocks) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(13);
  const BallState s = random_state(rng, 3);
  const std::vector<double> u{1, 0, -1};
  const Eigen::MatrixXd j = jacobian_fd(p, 0.0, s, u);
  ASSERT_EQ(j.rows(), 15);
  EXPECT_LE((j.block(0, 3, 3, 3) - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LE(j.block(0, 0, 3, 3).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_EQ(j.block(3, 0, 3, 15).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(JacobianFd, StepHalvingConsistency) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(14);
  for (int k = 0; k < 10; ++k) {
    const BallState s = random_state(rng, 3);
    const std::vector<double> u{0.3, 0.3, -0.3};
    const Eigen::MatrixXd fine = jacobian_fd(p, 0.0, s, u);
    const Eigen::MatrixXd coarse = jacobian_fd(p, 0.0, s, u, 1e-5);
    EXPECT_LE((fine - coarse).lpNorm<Eigen::Infinity>(), 1e-4 * std::max(1.0, fine.lpNorm<Eigen::Infinity>()));
  }
}

TEST(JacobianFd, PredictsSmallPerturbations) {
  const BallParams p = fixtures::three_rail_ball();
  std::mt19937_64 rng(15);
  const BallState s = random_state(rng, 3);
  const std::vector<double> u = prescribed_u(p, 0.0);
  const Eigen::MatrixXd j = jacobian_fd(p, 0.0, s, u);
  Eigen::VectorXd dxv = Eigen::VectorXd::Random(15) * 1e-6;
  const Eigen::VectorXd x = s.pack();
  Eigen::VectorXd f0, f1;
  ball_rhs(p, 0.0, x, f0);
  ball_rhs(p, 0.0, x + dxv, f1);
  const Eigen::VectorXd lin = j * dxv;
  EXPECT_LE((f1 - f0 - lin).tail(12).lpNorm<Eigen::Infinity>(), 1e-10);
}

// ---- params --------------------------------------------------------------

TEST(BallParams, Validation) {
  BallParams p = fixtures::three_rail_ball();
  EXPECT_NO_THROW(p.validate());
  BallParams bad = p;
  bad.masses[2] = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.rails[0] = CircleRail(0.1, Vec3::zero(), {});
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.accel.pop_back();
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.inertia.y = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.radius = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(BallState, PackRoundTrip) {
  std::mt19937_64 rng(16);
  const BallState s = random_state(rng, 3);
  const BallState t = BallState::unpack(s.pack(), 3);
  EXPECT_EQ(t.theta, s.theta);
  EXPECT_EQ(t.theta_dot, s.theta_dot);
  EXPECT_EQ(t.q, s.q);
  EXPECT_EQ(t.omega, s.omega);
  EXPECT_EQ(t.z, s.z);
  EXPECT_THROW(BallState::unpack(Eigen::VectorXd::Zero(14), 3), ValidationError);
}

}  // namespace
}  // namespace rollball
