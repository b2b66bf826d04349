#pragma once

// Torus diffeomorphisms: an integer linear part plus an optional periodic perturbation.

#include <variant>
#include <vector>

#include "ergolab/linalg.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

/// amp * sin(2 pi k t + phase)
struct SineTerm {
  int k = 1;
  double amp = 0.0;
  double phase = 0.0;
  bool operator==(const SineTerm&) const = default;
};

/// Finite sine series psi(t) = sum_j amp_j sin(2 pi k_j t + phase_j), 1-periodic.
struct SineSeries {
  std::vector<SineTerm> terms;

  double value(double t) const;
  double derivative(double t) const;
  /// sup |psi'| <= 2 pi sum |amp| |k|
  double c1_bound() const;
  /// sup |psi''| <= 4 pi^2 sum |amp| k^2
  double c2_bound() const;
  bool operator==(const SineSeries&) const = default;
};

/// Area-preserving shear pair: after the linear part, (x,y) -> (x + eps psi1(y), y)
/// then (x,y) -> (x, y + eps psi2(x)).
struct ShearPair {
  SineSeries psi1;
  SineSeries psi2;
  bool operator==(const ShearPair&) const = default;
};

/// coeff * sin(2 pi (kx x + ky y) + phase)
struct TrigTerm {
  int kx = 0;
  int ky = 0;
  Vec2 coeff;
  double phase = 0.0;
  bool operator==(const TrigTerm&) const = default;
};

/// Additive periodic vector field: f(p) = L p + eps sum_j c_j sin(2 pi k_j . p + phase_j).
struct TrigField {
  std::vector<TrigTerm> terms;
  bool operator==(const TrigField&) const = default;
};

using Perturbation = std::variant<std::monostate, ShearPair, TrigField>;

/// One torus diffeomorphism. Construction validates |det L| = 1, eps >= 0 and the
/// invertibility margin eps * 2 pi sum |c_j||k_j| < 1 / opnorm(L^-1).
class MapSpec {
 public:
  static MapSpec linear(const IntMat2& m);
  static MapSpec shear_pair(const IntMat2& m, ShearPair shears, double epsilon);
  static MapSpec trig(const IntMat2& m, TrigField field, double epsilon);

  const IntMat2& linear_part() const { return linear_; }
  const Perturbation& perturbation() const { return perturbation_; }
  double epsilon() const { return epsilon_; }
  /// |det Df| == 1 everywhere.
  bool conservative() const { return conservative_; }
  /// No perturbation, or zero amplitude.
  bool is_linear() const;
  /// True when this spec stands for the inverse of the described map.
  bool inverted() const { return inverted_; }
  /// The inverse diffeomorphism (same data, direction flipped).
  MapSpec inverse() const;

  /// Lipschitz constant of the perturbation per unit epsilon (the margin quantity).
  double perturbation_c1() const;
  /// Bound on second derivatives of the perturbation per unit epsilon.
  double perturbation_c2() const;

  bool operator==(const MapSpec&) const = default;

 private:
  MapSpec() = default;
  void validate();

  IntMat2 linear_;
  Perturbation perturbation_;
  double epsilon_ = 0.0;
  bool conservative_ = true;
  bool inverted_ = false;
};

/// f(p) reduced mod 1.
TorusPoint apply_map(const MapSpec& spec, const TorusPoint& p);
/// f on the universal cover (no reduction).
Vec2 apply_lifted(const MapSpec& spec, const Vec2& p);
/// f^{-1}(q) reduced mod 1. Throws NonConvergence when Newton fails in 50 steps.
TorusPoint inverse_map(const MapSpec& spec, const TorusPoint& q);
/// f^{-1} on the universal cover.
Vec2 inverse_lifted(const MapSpec& spec, const Vec2& q);
/// Analytic Jacobian D_p f.
RealMat2 derivative(const MapSpec& spec, const TorusPoint& p);
RealMat2 derivative_lifted(const MapSpec& spec, const Vec2& p);

}  // namespace ergolab
