#include "ergolab/map_spec.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kNewtonMaxIter = 50;

struct TrigEval {
  Vec2 value;
  RealMat2 jacobian{0.0, 0.0, 0.0, 0.0};
};

TrigEval eval_trig(const TrigField& field, const Vec2& p) {
  TrigEval out;
  for (const auto& t : field.terms) {
    const double arg = kTwoPi * (t.kx * p.x + t.ky * p.y) + t.phase;
    const double s = std::sin(arg), c = std::cos(arg);
    out.value = out.value + t.coeff * s;
    const double gx = kTwoPi * t.kx * c, gy = kTwoPi * t.ky * c;
    out.jacobian = out.jacobian + RealMat2{t.coeff.x * gx, t.coeff.x * gy, t.coeff.y * gx, t.coeff.y * gy};
  }
  return out;
}

Vec2 forward_base(const MapSpec& s, const Vec2& p) {
  const Vec2 q = s.linear_part().to_real() * p;
  const double eps = s.epsilon();
  if (const auto* sh = std::get_if<ShearPair>(&s.perturbation())) {
    Vec2 r = q;
    r.x += eps * sh->psi1.value(r.y);
    r.y += eps * sh->psi2.value(r.x);
    return r;
  }
  if (const auto* tf = std::get_if<TrigField>(&s.perturbation())) {
    return q + eval_trig(*tf, p).value * eps;
  }
  return q;
}

RealMat2 derivative_base(const MapSpec& s, const Vec2& p) {
  const RealMat2 a = s.linear_part().to_real();
  const double eps = s.epsilon();
  if (const auto* sh = std::get_if<ShearPair>(&s.perturbation())) {
    const Vec2 q = a * p;
    const RealMat2 s1{1.0, eps * sh->psi1.derivative(q.y), 0.0, 1.0};
    const double x1 = q.x + eps * sh->psi1.value(q.y);
    const RealMat2 s2{1.0, 0.0, eps * sh->psi2.derivative(x1), 1.0};
    return s2 * (s1 * a);
  }
  if (const auto* tf = std::get_if<TrigField>(&s.perturbation())) {
    return a + eval_trig(*tf, p).jacobian * eps;
  }
  return a;
}

Vec2 inverse_base(const MapSpec& s, const Vec2& q) {
  const RealMat2 ainv = s.linear_part().unimodular_inverse().to_real();
  const double eps = s.epsilon();
  if (const auto* sh = std::get_if<ShearPair>(&s.perturbation())) {
    Vec2 r = q;
    r.y -= eps * sh->psi2.value(r.x);
    r.x -= eps * sh->psi1.value(r.y);
    return ainv * r;
  }
  if (const auto* tf = std::get_if<TrigField>(&s.perturbation())) {
    if (eps == 0.0) return ainv * q;
    Vec2 p = ainv * q;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      const TrigEval te = eval_trig(*tf, p);
      const Vec2 resid = s.linear_part().to_real() * p + te.value * eps - q;
      if (resid.norm_inf() <= 1e-15 * (1.0 + q.norm_inf())) return p;
      const RealMat2 jac = s.linear_part().to_real() + te.jacobian * eps;
      const Vec2 step = jac.inverse() * resid;
      p = p - step;
      if (step.norm_inf() <= 1e-16 * (1.0 + p.norm_inf())) return p;
    }
    throw NonConvergence("inverse_map: Newton iteration did not converge in 50 steps");
  }
  return ainv * q;
}

}  // namespace

double SineSeries::value(double t) const {
  double v = 0.0;
  for (const auto& term : terms) v += term.amp * std::sin(kTwoPi * term.k * t + term.phase);
  return v;
}

double SineSeries::derivative(double t) const {
  double v = 0.0;
  for (const auto& term : terms) v += term.amp * kTwoPi * term.k * std::cos(kTwoPi * term.k * t + term.phase);
  return v;
}

double SineSeries::c1_bound() const {
  double v = 0.0;
  for (const auto& term : terms) v += std::abs(term.amp) * std::abs(term.k);
  return kTwoPi * v;
}

double SineSeries::c2_bound() const {
  double v = 0.0;
  for (const auto& term : terms) v += std::abs(term.amp) * term.k * term.k;
  return kTwoPi * kTwoPi * v;
}

MapSpec MapSpec::linear(const IntMat2& m) {
  MapSpec s;
  s.linear_ = m;
  s.validate();
  return s;
}

MapSpec MapSpec::shear_pair(const IntMat2& m, ShearPair shears, double epsilon) {
  MapSpec s;
  s.linear_ = m;
  s.perturbation_ = std::move(shears);
  s.epsilon_ = epsilon;
  s.validate();
  return s;
}

MapSpec MapSpec::trig(const IntMat2& m, TrigField field, double epsilon) {
  MapSpec s;
  s.linear_ = m;
  s.perturbation_ = std::move(field);
  s.epsilon_ = epsilon;
  s.validate();
  return s;
}

void MapSpec::validate() {
  const auto dt = linear_.det();
  if (dt != 1 && dt != -1) {
    throw InvalidArgument("MapSpec: linear part must have |det| = 1, got det = " + std::to_string(dt));
  }
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
    throw InvalidArgument("MapSpec: epsilon must be finite and >= 0");
  }
  const double margin = 1.0 / opnorm(linear_.unimodular_inverse().to_real());
  if (!(epsilon_ * perturbation_c1() < margin)) {
    throw InvalidArgument("MapSpec: invertibility margin violated (eps * C1 = " +
                          std::to_string(epsilon_ * perturbation_c1()) + " >= " + std::to_string(margin) + ")");
  }
  // Shears have unit Jacobian; an additive trig field does not in general.
  conservative_ = is_linear() || std::holds_alternative<ShearPair>(perturbation_);
}

bool MapSpec::is_linear() const {
  return std::holds_alternative<std::monostate>(perturbation_) || epsilon_ == 0.0;
}

MapSpec MapSpec::inverse() const {
  MapSpec s = *this;
  s.inverted_ = !inverted_;
  return s;
}

double MapSpec::perturbation_c1() const {
  if (const auto* sh = std::get_if<ShearPair>(&perturbation_)) return sh->psi1.c1_bound() + sh->psi2.c1_bound();
  if (const auto* tf = std::get_if<TrigField>(&perturbation_)) {
    double v = 0.0;
    for (const auto& t : tf->terms) v += t.coeff.norm() * std::hypot(double(t.kx), double(t.ky));
    return kTwoPi * v;
  }
  return 0.0;
}

double MapSpec::perturbation_c2() const {
  const double na = opnorm(linear_.to_real());
  if (const auto* sh = std::get_if<ShearPair>(&perturbation_)) {
    // Variation of S2'(q1) S1'(q) A in p, per unit epsilon, for epsilon <= 1.
    const double g1 = 1.0 + epsilon_ * sh->psi1.c1_bound();
    const double g2 = 1.0 + epsilon_ * sh->psi2.c1_bound();
    return na * na * (sh->psi2.c2_bound() * g1 * g1 + g2 * sh->psi1.c2_bound());
  }
  if (const auto* tf = std::get_if<TrigField>(&perturbation_)) {
    double v = 0.0;
    for (const auto& t : tf->terms) v += t.coeff.norm() * (double(t.kx) * t.kx + double(t.ky) * t.ky);
    return kTwoPi * kTwoPi * v;
  }
  return 0.0;
}

Vec2 apply_lifted(const MapSpec& spec, const Vec2& p) {
  return spec.inverted() ? inverse_base(spec, p) : forward_base(spec, p);
}

Vec2 inverse_lifted(const MapSpec& spec, const Vec2& q) {
  return spec.inverted() ? forward_base(spec, q) : inverse_base(spec, q);
}

TorusPoint apply_map(const MapSpec& spec, const TorusPoint& p) { return TorusPoint(apply_lifted(spec, p.lift())); }

TorusPoint inverse_map(const MapSpec& spec, const TorusPoint& q) {
  return TorusPoint(inverse_lifted(spec, q.lift()));
}

RealMat2 derivative_lifted(const MapSpec& spec, const Vec2& p) {
  if (!spec.inverted()) return derivative_base(spec, p);
  return derivative_base(spec, inverse_base(spec, p)).inverse();
}

RealMat2 derivative(const MapSpec& spec, const TorusPoint& p) { return derivative_lifted(spec, p.lift()); }

}  // namespace ergolab
