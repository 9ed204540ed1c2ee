// Parameter sets shared by the test suites, built directly in code so the
// bundled scenario files can be checked against them.
#pragma once

#include <numbers>

#include "rollball/ball.hpp"
#include "rollball/disk.hpp"

namespace rollball::fixtures {

inline constexpr double kPi = std::numbers::pi;

// Four unit masses, mass i on a circle of radius r_i about the GC.
inline DiskParams four_mass_disk() {
  DiskParams d;
  d.masses = {1, 1, 1, 1, 1};
  d.rails = {StaticPoint{}};
  const double radii[4] = {0.9, 19.0 / 30.0, 11.0 / 30.0, 0.1};
  for (int i = 0; i < 4; ++i) {
    d.rails.push_back(CircleRail(radii[i], Vec3::zero(), {0, 0, 1}));
    d.accel.push_back(AccelProfile::short_pulse(i % 2 == 0 ? -1.0 : 1.0));  // (-1)^i, i = 1..4
  }
  return d;
}

inline DiskState four_mass_disk_state() {
  DiskState s;
  s.theta.assign(4, -kPi / 2);
  s.theta_dot.assign(4, 0.0);
  return s;
}

inline DiskParams single_mass_disk() {
  DiskParams d;
  d.masses = {1, 1};
  d.rails = {StaticPoint{}, CircleRail(0.9, Vec3::zero(), {0, 0, 1})};
  d.accel = {AccelProfile::short_pulse()};
  return d;
}

inline BallParams three_rail_ball() {
  BallParams p;
  p.masses = {1, 1, 1, 1};
  p.inertia = {0.9, 1.0, 1.1};
  p.rails = {StaticPoint{{0, 0, -0.05}}};
  const double radii[3] = {0.95, 0.9, 0.85};
  const Spherical dirs[3] = {{0, 0, 1}, {kPi / 2, 0, 1}, {kPi / 4, kPi / 4, 1}};
  for (int i = 0; i < 3; ++i) {
    p.rails.push_back(CircleRail(radii[i], Vec3::zero(), dirs[i]));
    p.accel.push_back(AccelProfile::short_pulse());
  }
  return p;
}

inline BallState three_rail_ball_state() {
  BallState s;
  s.theta = {0.0, 2.0369, 0.7044};
  s.theta_dot = {0.0, 0.0, 0.0};
  return s;
}

}  // namespace rollball::fixtures
