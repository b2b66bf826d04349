#pragma once

#include <cmath>
#include <cstdint>

#include "ergolab/linalg.hpp"

namespace ergolab {

/// Reduce a real number into [0, 1). Idempotent.
inline double wrap01(double v) {
  double r = v - std::floor(v);
  // v - floor(v) rounds up to 1.0 for tiny negative v.
  if (r >= 1.0) r = 0.0;
  return r;
}

/// Signed circle displacement a - b, in [-1/2, 1/2).
inline double circle_delta(double a, double b) {
  double d = a - b;
  d -= std::floor(d + 0.5);
  return d;
}

/// A point of the flat torus R^2 / Z^2, both coordinates in [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;
  TorusPoint(double x, double y) : x_(wrap01(x)), y_(wrap01(y)) {}
  explicit TorusPoint(const Vec2& v) : TorusPoint(v.x, v.y) {}

  double x() const { return x_; }
  double y() const { return y_; }
  Vec2 lift() const { return {x_, y_}; }

  bool operator==(const TorusPoint&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

/// Shortest lifted displacement p - q.
inline Vec2 torus_delta(const TorusPoint& p, const TorusPoint& q) {
  return {circle_delta(p.x(), q.x()), circle_delta(p.y(), q.y())};
}

/// Flat max-metric: the larger of the two circle distances.
inline double torus_distance(const TorusPoint& p, const TorusPoint& q) {
  return torus_delta(p, q).norm_inf();
}

/// Exact rational torus point (num_x / den, num_y / den), numerators in [0, den).
struct RationalPoint {
  std::int64_t num_x = 0;
  std::int64_t num_y = 0;
  std::int64_t den = 1;

  TorusPoint to_point() const {
    return {static_cast<double>(num_x) / static_cast<double>(den),
            static_cast<double>(num_y) / static_cast<double>(den)};
  }
  bool operator==(const RationalPoint&) const = default;
};

/// Reduce numerators mod den.
RationalPoint normalized(RationalPoint p);

/// Integer matrices act exactly on rational points.
RationalPoint apply_exact(const IntMat2& m, const RationalPoint& p);

}  // namespace ergolab
