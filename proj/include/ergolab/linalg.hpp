#pragma once

// Small fixed-size linear algebra for the 2x2 derivative cocycle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ergolab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  double norm_inf() const { return std::max(std::abs(x), std::abs(y)); }
  double angle() const { return std::atan2(y, x); }
  Vec2 normalized() const {
    const double n = norm();
    return {x / n, y / n};
  }
};

inline constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Unit vector spanning the line at `angle` (radians).
inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Reduce a line angle into [0, pi).
inline double wrap_line_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double r = std::fmod(a, pi);
  if (r < 0.0) r += pi;
  if (r >= pi) r = 0.0;
  return r;
}

/// Signed difference a - b between line angles, in [-pi/2, pi/2).
inline double line_angle_delta(double a, double b) {
  constexpr double pi = std::numbers::pi;
  double d = std::fmod(a - b, pi);
  if (d < -pi / 2) d += pi;
  if (d >= pi / 2) d -= pi;
  return d;
}

/// Row-major real 2x2 matrix [[a, b], [c, d]].
struct RealMat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static constexpr RealMat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static RealMat2 rotation(double angle) {
    const double cs = std::cos(angle), sn = std::sin(angle);
    return {cs, -sn, sn, cs};
  }
  static constexpr RealMat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }

  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }
  constexpr RealMat2 transpose() const { return {a, c, b, d}; }
  constexpr RealMat2 inverse() const {
    const double dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
  /// Inverse-transpose; its operator norm is 1 / smallest singular value.
  constexpr RealMat2 inverse_transpose() const {
    const double dt = det();
    return {d / dt, -c / dt, -b / dt, a / dt};
  }
  constexpr Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  constexpr RealMat2 operator*(const RealMat2& m) const {
    return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
  }
  constexpr RealMat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  constexpr RealMat2 operator+(const RealMat2& m) const { return {a + m.a, b + m.b, c + m.c, d + m.d}; }
  constexpr bool operator==(const RealMat2&) const = default;

  double max_abs_entry() const {
    return std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
  }
};

/// Closed-form singular value decomposition M = Rot(phi) diag(s_max, s_min) Rot(theta).
/// Angles are those of the singular lines, not of a particular sign choice.
struct Svd2 {
  double s_max = 0.0;
  double s_min = 0.0;            // non-negative
  double right_max_angle = 0.0;  // input direction of maximal stretch
  double right_min_angle = 0.0;  // input direction of minimal stretch
  double left_max_angle = 0.0;   // output direction of maximal stretch
  double left_min_angle = 0.0;
};

inline Svd2 svd(const RealMat2& m) {
  const double e = (m.a + m.d) / 2, f = (m.a - m.d) / 2;
  const double g = (m.c + m.b) / 2, h = (m.c - m.b) / 2;
  const double q = std::hypot(e, h), r = std::hypot(f, g);
  const double a1 = std::atan2(g, f), a2 = std::atan2(h, e);
  const double theta = (a2 - a1) / 2, phi = (a2 + a1) / 2;
  Svd2 out;
  out.s_max = q + r;
  out.s_min = std::abs(q - r);
  out.right_max_angle = wrap_line_angle(-theta);
  out.right_min_angle = wrap_line_angle(-theta + std::numbers::pi / 2);
  out.left_max_angle = wrap_line_angle(phi);
  out.left_min_angle = wrap_line_angle(phi + std::numbers::pi / 2);
  return out;
}

/// Largest singular value.
inline double opnorm(const RealMat2& m) {
  const double e = (m.a + m.d) / 2, f = (m.a - m.d) / 2;
  const double g = (m.c + m.b) / 2, h = (m.c - m.b) / 2;
  return std::hypot(e, h) + std::hypot(f, g);
}

/// Integer matrix (element of GL(2,Z) when |det| = 1).
struct IntMat2 {
  std::int64_t a = 1, b = 0, c = 0, d = 1;

  static constexpr IntMat2 identity() { return {1, 0, 0, 1}; }
  constexpr std::int64_t det() const { return a * d - b * c; }
  constexpr std::int64_t trace() const { return a + d; }
  constexpr IntMat2 operator*(const IntMat2& m) const {
    return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
  }
  constexpr bool operator==(const IntMat2&) const = default;

  /// Exact inverse; requires |det| = 1.
  constexpr IntMat2 unimodular_inverse() const {
    const std::int64_t dt = det();
    return {d * dt, -b * dt, -c * dt, a * dt};
  }
  constexpr RealMat2 to_real() const {
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(c),
            static_cast<double>(d)};
  }
};

/// A product exp(log_scale) * mat with opnorm(mat) kept at 1 after every step.
struct ScaledMat2 {
  RealMat2 mat = RealMat2::identity();
  double log_scale = 0.0;

  static constexpr ScaledMat2 identity() { return {}; }

  /// step * this, renormalised.
  ScaledMat2 then(const RealMat2& step) const {
    ScaledMat2 out;
    const RealMat2 raw = step * mat;
    const double n = opnorm(raw);
    out.mat = raw * (1.0 / n);
    out.log_scale = log_scale + std::log(n);
    return out;
  }
  /// this * other, renormalised (other applied first).
  ScaledMat2 after(const ScaledMat2& first) const {
    ScaledMat2 out;
    const RealMat2 raw = mat * first.mat;
    const double n = opnorm(raw);
    out.mat = raw * (1.0 / n);
    out.log_scale = log_scale + first.log_scale + std::log(n);
    return out;
  }
  double log_opnorm() const { return log_scale + std::log(opnorm(mat)); }
  /// Only meaningful when log_scale is moderate.
  RealMat2 unscaled() const { return mat * std::exp(log_scale); }
};

}  // namespace ergolab
