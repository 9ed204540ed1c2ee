#include "rollball/so3.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "rollball/errors.hpp"

namespace rollball {

double determinant(const Mat3& m) { return dot(m.row(0), cross(m.row(1), m.row(2))); }

double max_abs_entry(const Mat3& m) {
  double out = 0.0;
  for (double v : m.a) out = std::max(out, std::abs(v));
  return out;
}

Mat3 hat(const Vec3& v) {
  return Mat3::from_rows({0.0, -v.z, v.y}, {v.z, 0.0, -v.x}, {-v.y, v.x, 0.0});
}

Vec3 vee(const Mat3& m) {
  constexpr double kSkewTolerance = 1e-12;
  const double asym = std::max({std::abs(m(0, 0)), std::abs(m(1, 1)), std::abs(m(2, 2)),
                                std::abs(m(0, 1) + m(1, 0)), std::abs(m(0, 2) + m(2, 0)),
                                std::abs(m(1, 2) + m(2, 1))});
  if (asym > kSkewTolerance) {
    std::ostringstream msg;
    msg << "vee: matrix is not antisymmetric (deviation " << asym << ")";
    throw ValidationError(msg.str());
  }
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
}

Mat3 hat_sq(const Vec3& v) {
  const double xy = v.x * v.y;
  const double xz = v.x * v.z;
  const double yz = v.y * v.z;
  return Mat3::from_rows({-(v.y * v.y + v.z * v.z), xy, xz},
                         {xy, -(v.x * v.x + v.z * v.z), yz},
                         {xz, yz, -(v.x * v.x + v.y * v.y)});
}

std::array<double, 3> symmetric_eigenvalues(const Mat3& m) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  std::array<double, 3> eig{};
  if (p1 == 0.0) {
    eig = {m(0, 0), m(1, 1), m(2, 2)};
    std::sort(eig.begin(), eig.end());
    return eig;
  }
  const double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
  const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                    (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Mat3 b = m - q * Mat3::identity();
  b *= 1.0 / p;
  const double r = std::clamp(determinant(b) / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double largest = q + 2.0 * p * std::cos(phi);
  const double smallest = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  eig = {smallest, 3.0 * q - largest - smallest, largest};
  std::sort(eig.begin(), eig.end());
  return eig;
}

Cholesky3::Cholesky3(const Mat3& m) {
  const double scale = std::max(max_abs_entry(m), 1e-300);
  for (std::size_t j = 0; j < 3; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > 1e-15 * scale)) throw DomainError("Cholesky3: matrix is not positive definite");
    l_(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < 3; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / l_(j, j);
    }
  }
}

Vec3 Cholesky3::solve(const Vec3& b) const {
  Vec3 y;
  for (std::size_t i = 0; i < 3; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
    y[i] = s / l_(i, i);
  }
  Vec3 x;
  for (std::size_t ii = 3; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < 3; ++k) s -= l_(k, ii) * x[k];
    x[ii] = s / l_(ii, ii);
  }
  return x;
}

Quat quat_inv(const Quat& q) {
  const double n2 = squared_norm(q);
  if (n2 == 0.0 || !std::isfinite(n2)) throw DomainError("quat_inv: zero quaternion has no inverse");
  return (1.0 / n2) * quat_conj(q);
}

Versor::Versor(const Quat& q) : q_(q) {
  const double n = norm(q);
  if (!(std::abs(n - 1.0) <= kTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "versor: |q| = " << n << " is not unit within " << kTolerance;
    throw ValidationError(msg.str());
  }
}

Versor Versor::normalized(const Quat& q) {
  const double n = norm(q);
  if (n == 0.0 || !std::isfinite(n)) throw DomainError("versor: cannot normalize a zero quaternion");
  return Versor((1.0 / n) * q, Unchecked{});
}

Versor Versor::from_axis_angle(const Vec3& axis, double angle) {
  const double n = norm(axis);
  if (n == 0.0) throw DomainError("versor: zero rotation axis");
  return Versor(Quat(std::cos(0.5 * angle), (std::sin(0.5 * angle) / n) * axis), Unchecked{});
}

Mat3 versor_to_rotation(const Versor& versor) {
  const Quat& q = versor.quat();
  const double q0 = q.w, q1 = q.v.x, q2 = q.v.y, q3 = q.v.z;
  return Mat3::from_rows(
      {1.0 - 2.0 * (q2 * q2 + q3 * q3), 2.0 * (q1 * q2 - q0 * q3), 2.0 * (q1 * q3 + q0 * q2)},
      {2.0 * (q1 * q2 + q0 * q3), 1.0 - 2.0 * (q1 * q1 + q3 * q3), 2.0 * (q2 * q3 - q0 * q1)},
      {2.0 * (q1 * q3 - q0 * q2), 2.0 * (q2 * q3 + q0 * q1), 1.0 - 2.0 * (q1 * q1 + q2 * q2)});
}

Vec3 rotate(const Versor& q, const Vec3& y) {
  // q^-1 = q* for unit q
  return flat(quat_mul(quat_mul(q.quat(), sharp(y)), quat_conj(q.quat())));
}

}  // namespace rollball
