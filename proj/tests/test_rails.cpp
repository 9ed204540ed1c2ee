#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "rollball/errors.hpp"
#include "rollball/rails.hpp"

namespace rollball {
namespace {

constexpr double kPi = std::numbers::pi;

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

TEST(RailEval, StaticPointHasNoDerivatives) {
  const Rail rail = StaticPoint{{0, 0, -0.05}};
  for (double th : {0.0, 1.0, -7.0}) {
    const RailPoint p = rail_eval(rail, th);
    EXPECT_EQ(p.pos, Vec3(0, 0, -0.05));
    EXPECT_EQ(p.d1, Vec3::zero());
    EXPECT_EQ(p.d2, Vec3::zero());
  }
}

TEST(RailEval, PlanarCircleAtBottom) {
  const Rail rail = CircleRail(0.9, Vec3::zero(), {0, 0, 1});
  const RailPoint p = rail_eval(rail, -kPi / 2);
  expect_vec_near(p.pos, {0, 0, -0.9}, 1e-15);
  expect_vec_near(p.d1, {0.9, 0, 0}, 1e-15);
  expect_vec_near(p.d2, {0, 0, 0.9}, 1e-15);
}

TEST(RailEval, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  const double h = 1e-4;
  for (int k = 0; k < 200; ++k) {
    const Rail rail = CircleRail(0.2 + std::abs(u(rng)), {u(rng), u(rng), u(rng)}, {u(rng), u(rng), 1});
    const double th = u(rng);
    const RailPoint p = rail_eval(rail, th);
    const RailPoint hi = rail_eval(rail, th + h), lo = rail_eval(rail, th - h);
    expect_vec_near((hi.pos - lo.pos) / (2 * h), p.d1, 1e-6);
    expect_vec_near((hi.d1 - lo.d1) / (2 * h), p.d2, 1e-6);
  }
}

TEST(RailEval, CircleStaysOnRadius) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  const CircleRail c(0.85, {0.1, -0.2, 0.05}, {kPi / 4, kPi / 4, 1});
  for (int k = 0; k < 1000; ++k) EXPECT_NEAR(norm(rail_eval(c, u(rng)).pos - c.center_offset()), 0.85, 1e-12);
}

TEST(CircleRail, RejectsNonPositiveRadius) {
  EXPECT_THROW(CircleRail(0.0, Vec3::zero(), {}), ValidationError);
  EXPECT_THROW(CircleRail(-1.0, Vec3::zero(), {}), ValidationError);
}

void expect_rotation(const Mat3& b) {
  const Mat3 g = b.transposed() * b;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(g(r, c), r == c ? 1.0 : 0.0, 1e-12);
  EXPECT_NEAR(determinant(b), 1.0, 1e-12);
}

TEST(BasisFromNormal, AxisInputs) {
  expect_rotation(basis_from_normal({0, 0, 1}));
  expect_rotation(basis_from_normal({0, 0, -1}));
  const Mat3 bx = basis_from_normal({1, 0, 0});
  expect_rotation(bx);
  EXPECT_EQ(bx, Mat3::identity());
}

TEST(BasisFromNormal, RandomUnitInputs) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 10000; ++k) {
    Vec3 v{n(rng), n(rng), n(rng)};
    v = v / norm(v);
    const Mat3 b = basis_from_normal(v);
    expect_rotation(b);
    EXPECT_EQ(b.col(0), v);
    EXPECT_EQ(b, basis_from_normal(v));
  }
}

TEST(BasisFromNormal, RejectsNonUnit) {
  EXPECT_THROW(basis_from_normal({0, 0, 1.1}), ValidationError);
  EXPECT_THROW(basis_from_normal(Vec3::zero()), ValidationError);
}

TEST(SphericalToCartesian, Examples) {
  expect_vec_near(spherical_to_cartesian(0, 0, 1), {1, 0, 0}, 1e-16);
  expect_vec_near(spherical_to_cartesian(kPi / 2, 0, 1), {0, 1, 0}, 1e-16);
  expect_vec_near(spherical_to_cartesian(kPi / 4, kPi / 4, 1), {0.5, 0.5, std::sqrt(2.0) / 2}, 1e-15);
}

TEST(AccelEval, ShortPulse) {
  const AccelProfile odd = AccelProfile::short_pulse(-1.0);
  const AccelProfile even = AccelProfile::short_pulse(1.0);
  EXPECT_DOUBLE_EQ(accel_eval(odd, 0.05), -1.0);
  EXPECT_NEAR(accel_eval(even, 0.15), 0.5, 1e-15);
  EXPECT_NEAR(accel_eval(odd, 0.15), -0.5, 1e-15);
  EXPECT_EQ(accel_eval(even, 10.0), 0.0);
  EXPECT_EQ(accel_eval(even, -1.0), 1.0);
  EXPECT_EQ(accel_eval(even, 25.0), 0.0);
}

TEST(AccelEval, ContinuousAtBreakpoints) {
  const AccelProfile p = AccelProfile::short_pulse();
  for (const auto& bp : p.table.points()) {
    EXPECT_NEAR(accel_eval(p, bp.t + 1e-8), accel_eval(p, bp.t), 1e-6);
    EXPECT_NEAR(accel_eval(p, bp.t - 1e-8), accel_eval(p, bp.t), 1e-6);
  }
}

TEST(PiecewiseLinear, RejectsBadTables) {
  EXPECT_THROW(PiecewiseLinear(std::vector<Breakpoint>{}), ValidationError);
  EXPECT_THROW(PiecewiseLinear({{0, 1}, {0, 2}}), ValidationError);
  EXPECT_THROW(PiecewiseLinear({{1, 1}, {0, 2}}), ValidationError);
}

TEST(PiecewiseLinear, KinkTimes) {
  EXPECT_EQ(kink_times(AccelProfile::short_pulse().table), (std::vector<double>{0.1, 0.2}));
}

}  // namespace
}  // namespace rollball
