// Fixed-size linear algebra on R^3, so(3) and the quaternions.
//
// Everything here is a value type. Matrices are indexed m(row, col).
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rollball {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  static constexpr Vec3 zero() { return {}; }
  static constexpr Vec3 unit_x() { return {1.0, 0.0, 0.0}; }
  static constexpr Vec3 unit_y() { return {0.0, 1.0, 0.0}; }
  static constexpr Vec3 unit_z() { return {0.0, 0.0, 1.0}; }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Componentwise product, used for diagonal inertia tensors stored as Vec3.
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

struct Mat3 {
  std::array<double, 9> a{};  // row-major

  constexpr double& operator()(std::size_t r, std::size_t c) { return a[3 * r + c]; }
  constexpr double operator()(std::size_t r, std::size_t c) const { return a[3 * r + c]; }

  static constexpr Mat3 zero() { return {}; }
  static constexpr Mat3 identity() { return diag({1.0, 1.0, 1.0}); }
  static constexpr Mat3 diag(const Vec3& d) {
    Mat3 m;
    m(0, 0) = d.x;
    m(1, 1) = d.y;
    m(2, 2) = d.z;
    return m;
  }
  static constexpr Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    Mat3 m;
    for (std::size_t c = 0; c < 3; ++c) {
      m(0, c) = r0[c];
      m(1, c) = r1[c];
      m(2, c) = r2[c];
    }
    return m;
  }
  static constexpr Mat3 from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return from_rows(c0, c1, c2).transposed();
  }

  constexpr Vec3 row(std::size_t r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }
  constexpr Vec3 col(std::size_t c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

  constexpr Mat3 transposed() const {
    Mat3 t;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  constexpr Mat3& operator+=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) a[i] += o.a[i];
    return *this;
  }
  constexpr Mat3& operator-=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) a[i] -= o.a[i];
    return *this;
  }
  constexpr Mat3& operator*=(double s) {
    for (auto& v : a) v *= s;
    return *this;
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
constexpr Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
constexpr Mat3 operator*(double s, Mat3 a) { return a *= s; }
constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {dot(m.row(0), v), dot(m.row(1), v), dot(m.row(2), v)};
}
constexpr Mat3 operator*(const Mat3& l, const Mat3& r) {
  Mat3 out;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += l(i, k) * r(k, j);
      out(i, j) = s;
    }
  return out;
}

double determinant(const Mat3& m);
double max_abs_entry(const Mat3& m);

/// Skew-symmetric matrix with hat(v) * w == cross(v, w).
Mat3 hat(const Vec3& v);

/// Inverse of hat. Accepts matrices antisymmetric to 1e-12 (absolute) and
/// extracts from the antisymmetric part; anything else is a ValidationError.
Vec3 vee(const Mat3& m);

/// hat(v) * hat(v) = v v^T - |v|^2 I, written out entrywise.
Mat3 hat_sq(const Vec3& v);

/// Eigenvalues of a symmetric matrix in ascending order (closed form).
/// Accuracy drops to about sqrt(eps) * |m| near a repeated eigenvalue.
std::array<double, 3> symmetric_eigenvalues(const Mat3& m);

/// Cholesky factorization of a symmetric positive definite 3x3 matrix.
class Cholesky3 {
 public:
  /// Throws DomainError when `m` is not numerically positive definite.
  explicit Cholesky3(const Mat3& m);
  Vec3 solve(const Vec3& b) const;
  const Mat3& lower() const { return l_; }

 private:
  Mat3 l_;
};

// ---------------------------------------------------------------------------
// Quaternions, stored as (scalar, vector) = (q0, q1, q2, q3).

struct Quat {
  double w = 1.0;
  Vec3 v{};

  constexpr Quat() = default;
  constexpr Quat(double w_, const Vec3& v_) : w(w_), v(v_) {}
  constexpr Quat(double q0, double q1, double q2, double q3) : w(q0), v(q1, q2, q3) {}

  static constexpr Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static constexpr Quat zero() { return {0.0, 0.0, 0.0, 0.0}; }

  constexpr double operator[](std::size_t i) const { return i == 0 ? w : v[i - 1]; }
  constexpr double& operator[](std::size_t i) { return i == 0 ? w : v[i - 1]; }

  friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

constexpr Quat operator+(const Quat& p, const Quat& q) { return {p.w + q.w, p.v + q.v}; }
constexpr Quat operator-(const Quat& p, const Quat& q) { return {p.w - q.w, p.v - q.v}; }
constexpr Quat operator-(const Quat& q) { return {-q.w, -q.v}; }
constexpr Quat operator*(double s, const Quat& q) { return {s * q.w, s * q.v}; }

/// Hamilton product (p0 q0 - p.q, p0 q + q0 p + p x q).
constexpr Quat quat_mul(const Quat& p, const Quat& q) {
  return {p.w * q.w - dot(p.v, q.v), p.w * q.v + q.w * p.v + cross(p.v, q.v)};
}
constexpr Quat operator*(const Quat& p, const Quat& q) { return quat_mul(p, q); }

constexpr double quat_dot(const Quat& p, const Quat& q) { return p.w * q.w + dot(p.v, q.v); }
constexpr double squared_norm(const Quat& q) { return quat_dot(q, q); }
inline double norm(const Quat& q) { return std::sqrt(squared_norm(q)); }

constexpr Quat quat_conj(const Quat& q) { return {q.w, -q.v}; }

/// q* / |q|^2. Throws DomainError for the zero quaternion.
Quat quat_inv(const Quat& q);

constexpr Quat sharp(const Vec3& v) { return {0.0, v}; }
constexpr Vec3 flat(const Quat& q) { return q.v; }

/// Unit quaternion. The invariant | |q| - 1 | <= kVersorTolerance is checked on
/// construction from an arbitrary quaternion.
class Versor {
 public:
  static constexpr double kTolerance = 1e-9;

  constexpr Versor() = default;
  /// Throws ValidationError when |q| differs from 1 by more than kTolerance.
  explicit Versor(const Quat& q);

  /// Rescales `q` to unit length (DomainError for q == 0).
  static Versor normalized(const Quat& q);
  /// Unit quaternion rotating by `angle` about the unit vector `axis`.
  static Versor from_axis_angle(const Vec3& axis, double angle);

  constexpr const Quat& quat() const { return q_; }
  constexpr double operator[](std::size_t i) const { return q_[i]; }
  constexpr Versor inverse() const { return Versor(quat_conj(q_), Unchecked{}); }

 private:
  struct Unchecked {};
  constexpr Versor(const Quat& q, Unchecked) : q_(q) {}
  Quat q_ = Quat::identity();
};

/// Rotation matrix of a versor (Euler-Rodrigues parameterization).
Mat3 versor_to_rotation(const Versor& q);

/// [q Y# q^-1]_flat. Equal to versor_to_rotation(q) * y.
Vec3 rotate(const Versor& q, const Vec3& y);

/// q_dot = 1/2 q Omega#, body angular velocity `omega_body`.
constexpr Quat quat_kinematics(const Quat& q, const Vec3& omega_body) {
  return 0.5 * quat_mul(q, sharp(omega_body));
}

}  // namespace rollball
