// Acceptance run: one PASS/FAIL line per criterion, at the stated sizes and tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "ergolab/cones.hpp"
#include "ergolab/lyapunov.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/stationary.hpp"
#include "ergolab/unstable.hpp"
#include "fixtures.hpp"

using namespace ergolab;
using fixtures::kA;
using fixtures::kB;

namespace {

const TorusPoint kX0(0.1234, 0.5678);
const double kLogGoldenSq = std::log((3.0 + std::sqrt(5.0)) / 2.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Family single(const IntMat2& m) { return {MapSpec::linear(m)}; }

Outcome exponent_oracle() {
  const auto est = top_exponent(single(kA), DrivingMeasure::dirac(0), kX0, 10000, 1);
  const double err = std::abs(est.lambda_u - kLogGoldenSq);
  return {err <= 1e-6, "|lambda_u - log golden^2| = " + num(err)};
}

Outcome determinant_identity() {
  bool ok = true;
  double worst_id = 0.0, worst_back = 0.0;
  for (const Family& fam : {fixtures::linear_ab(), fixtures::shear_ab(0.02)}) {
    const auto nu = DrivingMeasure::uniform(2);
    const auto est = top_exponent(fam, nu, kX0, 100000, 1);
    const auto back = backward_exponent(fam, nu, kX0, 100000, 1);
    const double id = std::abs(est.lambda_u + est.lambda_s - est.mean_log_det);
    const double dev = std::abs(back.minus_lambda_s + est.lambda_s);
    const double tol = 3.0 * std::hypot(est.stderr_u, back.stderr);
    ok = ok && id <= 1e-9 && dev <= tol;
    worst_id = std::max(worst_id, id);
    worst_back = std::max(worst_back, tol > 0.0 ? dev / tol : dev);
  }
  return {ok, "identity residual " + num(worst_id) + ", backward deviation / 3 stderr " + num(worst_back)};
}

Outcome zero_exponent() {
  const Family fam{MapSpec::linear(kA), MapSpec::linear(kA.unimodular_inverse())};
  const auto est = top_exponent(fam, DrivingMeasure::uniform(2), kX0, 1000000, 1);
  return {std::abs(est.lambda_u) <= 1e-2, "|lambda_u| = " + num(std::abs(est.lambda_u))};
}

Outcome cone_certificate() {
  const auto mats = linear_parts(fixtures::linear_ab());
  const auto cert = search_cone_certificate(mats);
  if (!cert) return {false, "no certificate for {A, B}"};
  const auto coarse = check_joint_cone(mats, cert->cone_u, cert->cone_s, 10000);
  const auto fine = check_joint_cone(mats, cert->cone_u, cert->cone_s, 100000);
  const bool stable = coarse.ok() && fine.ok() && coarse.certificate->kappa > 1.0 && fine.certificate->kappa > 1.0;
  const auto inv = linear_parts({MapSpec::linear(kA), MapSpec::linear(kA.unimodular_inverse())});
  const bool refused = !search_cone_certificate(inv).has_value();
  const auto h = eigen_analysis(kA);
  const auto report = check_joint_cone(inv, ProjectiveCone(h.angle_u, 0.1), ProjectiveCone(h.angle_s, 0.1), 10000);
  const bool reported = !report.ok() && report.failure && !report.failure->message.empty();
  return {stable && refused && reported,
          "kappa " + (coarse.ok() ? num(coarse.certificate->kappa) : std::string("-")) + " / refined " +
              (fine.ok() ? num(fine.certificate->kappa) : std::string("-")) + "; {A, A^-1}: " +
              (reported ? report.failure->message : std::string("no failure report"))};
}

Outcome stiffness() {
  const Family fam = fixtures::linear_ab();
  const auto mu = sample_stationary(fam, DrivingMeasure::uniform(2), kX0, 1000, 1000000, 1);
  const double fmax = fourier_spectrum(mu.samples, 5).max();
  double inv = 0.0;
  for (const auto& f : fam) inv = std::max(inv, invariance_distance(mu, f, 5));
  return {fmax < 0.02 && inv < 0.03, "max Fourier " + num(fmax) + ", max invariance distance " + num(inv)};
}

EmpiricalMeasure torsion_measure() {
  return sample_stationary(fixtures::linear_ab(), DrivingMeasure::uniform(2), RationalPoint{1, 2, 5}, 1000, 100000, 1);
}

Outcome atomic_branch() {
  const auto rep = atom_detect(torsion_measure(), 1e-3, 1e-3);
  bool torsion = true;
  for (const auto& c : rep.clusters) {
    const double x = c.center.x() * 5.0, y = c.center.y() * 5.0;
    torsion = torsion && std::abs(x - std::round(x)) < 1e-9 && std::abs(y - std::round(y)) < 1e-9;
  }
  const bool ok = !rep.clusters.empty() && rep.clusters.size() <= 24 && rep.residual_mass < 1e-12 && torsion;
  return {ok, std::to_string(rep.clusters.size()) + " clusters, residual mass " + num(rep.residual_mass)};
}

double slice_dimension(const Family& fam, const EmpiricalMeasure& mu, const Word& word, std::size_t burn,
                       double radius, std::size_t* count) {
  const auto curve = unstable_curve(fam, past_window(word, burn, 30), mu.samples.front(), radius, 30);
  const auto chart = affine_parameter(curve, 30);
  const auto slice = conditional_slice(mu, curve, chart, 1e-3);
  *count = slice.count();
  return dimension_estimate(slice.coords).dim;
}

Outcome srb_evidence() {
  const Family fam = fixtures::shear_ab(0.02);
  const auto nu = DrivingMeasure::uniform(2);
  const auto mu = sample_stationary(fam, nu, kX0, 1000, 1000000, 2024);
  std::size_t n_srb = 0, n_atomic = 0;
  const double d = slice_dimension(fam, mu, sample_word(nu, 1000, 2024), 1000, 0.2, &n_srb);
  const auto atomic = torsion_measure();
  const double da =
      slice_dimension(fixtures::linear_ab(), atomic, sample_word(nu, 1000, 1), 1000, 0.2, &n_atomic);
  return {d >= 0.9 && d <= 1.1 && da < 0.1, "dim_u " + num(d) + " from " + std::to_string(n_srb) +
                                                " slice points; atomic dim " + num(da) + " from " +
                                                std::to_string(n_atomic)};
}

Outcome intertwining() {
  const auto rep = intertwining_check(fixtures::shear_ab(0.05), sample_word(DrivingMeasure::uniform(2), 31, 3),
                                      TorusPoint(0.3, 0.7), 0.05, 30, 30);
  return {rep.max_residual < 1e-4 && rep.compared == 512,
          "max residual " + num(rep.max_residual) + " over " + std::to_string(rep.compared) + " points"};
}

Outcome stopping_times_bounds() {
  const Family fam = fixtures::linear_ab();
  const auto nu = DrivingMeasure::uniform(2);
  const auto est = top_exponent(fam, nu, kX0, 100000, 1);
  const double eps0 = default_epsilon0(est);
  const std::size_t W = 500, steps = 600;
  bool ok = true;
  double worst = -INFINITY;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Word w = sample_word(nu, steps + 2 * W + 400, seed);
    const OrbitFrame frame(fam, w, W + 150, kX0, -std::ptrdiff_t(W), std::ptrdiff_t(steps + W));
    const auto table = stopping_times(lyapunov_norm_data(frame, est, W, eps0, steps), 1e-3, 0.1, 0, 200);
    const auto rep = check_slope_bounds(table, est.lambda_u, est.lambda_s, eps0);
    ok = ok && rep.pass && rep.pairs == 201 * 200 / 2;
    worst = std::max(worst, rep.worst_excess);
  }
  // Single map: tau(m) = floor((log(eps/delta) - m log|mu_s|) / log|mu_u|).
  const Family cat = single(kA);
  const auto cat_est = top_exponent(cat, DrivingMeasure::dirac(0), kX0, 100000, 1);
  const double cat_eps0 = default_epsilon0(cat_est);
  const Word cw = constant_word(0, steps + 2 * W + 400);
  const OrbitFrame cf(cat, cw, W + 150, kX0, -std::ptrdiff_t(W), std::ptrdiff_t(steps + W));
  const auto ct = stopping_times(lyapunov_norm_data(cf, cat_est, W, cat_eps0, steps), 1e-3, 0.1, 0, 200);
  const double ls = std::log((3.0 - std::sqrt(5.0)) / 2.0);
  std::ptrdiff_t closed = 0;
  for (std::size_t i = 0; i < ct.m.size(); ++i) {
    const auto expect =
        std::ptrdiff_t(std::floor((std::log(0.1 / 1e-3) - double(ct.m[i]) * ls) / kLogGoldenSq));
    closed = std::max(closed, std::abs(expect - ct.tau[i]));
  }
  return {ok && closed <= 1,
          "worst slope excess " + num(worst) + " over 3 seeds; single-map max |tau - closed form| = " +
              std::to_string(closed)};
}

Outcome mixed_cocycle() {
  const RealMat2 f = RealMat2::diag(2.0, 0.5);
  const RealMat2 g{0.0, 0.5, 2.0, 0.0};
  double worst = 0.0;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto r = mixed_projective_exponent(f, g, t, 100000, 1);
    worst = std::max(worst, std::abs(r.closed_form - r.simulated));
  }
  return {worst < 2e-3, "max |closed form - simulated| = " + num(worst)};
}

Outcome nonrandomness() {
  const auto nu = DrivingMeasure::uniform(2);
  const double powers = nonrandomness_score({MapSpec::linear(kA), MapSpec::linear(kA * kA)}, nu, kX0, 50, 40, 1);
  double lowest = INFINITY;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    lowest = std::min(lowest, nonrandomness_score(fixtures::linear_ab(), nu, kX0, 50, 40, seed));
  }
  return {powers < 1e-6 && lowest > 0.05, "{A, A^2} " + num(powers) + ", {A, B} min over 3 seeds " + num(lowest)};
}

Outcome dimension_oracles() {
  const CounterRng rng(3);
  std::vector<double> uniform, cantor;
  for (std::size_t i = 0; i < 10000; ++i) uniform.push_back(rng.uniform(i));
  // Depth-12 middle-thirds Cantor points with independent ternary digits in {0, 2}.
  const CounterRng digits(9);
  for (std::size_t i = 0; i < 10000; ++i) {
    double v = 0.0, scale = 1.0;
    for (std::uint64_t d = 0; d < 12; ++d) {
      scale /= 3.0;
      if (digits.bits(i * 12 + d) & 1u) v += 2.0 * scale;
    }
    cantor.push_back(v);
  }
  const double du = dimension_estimate(uniform).dim;
  const double dc = dimension_estimate(cantor).dim;
  const double dp = dimension_estimate(std::vector<double>(500, 0.25)).dim;
  const double target = std::log(2.0) / std::log(3.0);
  return {std::abs(du - 1.0) <= 0.05 && std::abs(dc - target) <= 0.05 && dp == 0.0,
          "uniform " + num(du) + ", Cantor " + num(dc) + ", point mass " + num(dp)};
}

Outcome truncated_norms() {
  const Family fam = fixtures::linear_ab();
  const auto nu = DrivingMeasure::uniform(2);
  const auto est = top_exponent(fam, nu, kX0, 100000, 1);
  const double eps0 = default_epsilon0(est);
  const std::size_t W = 50;
  const std::ptrdiff_t half = W / 2;
  RngStream rng(31);
  bool homogeneous = true, bounded = true;
  int passes = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Word w = sample_word(nu, 400, derive_seed(12, t));
    const TorusPoint x(rng.uniform(), rng.uniform());
    const OrbitFrame frame(fam, w, 200, x, -std::ptrdiff_t(W) - half, std::ptrdiff_t(W) + half);
    const bool unstable = t % 2 == 0;
    const NormParams p{unstable ? Sigma::Unstable : Sigma::Stable, unstable ? est.lambda_u : est.lambda_s, W, eps0,
                       t % 3 != 0};
    const Vec2 v = (unstable ? frame.e_u(0) : frame.e_s(0)) * (0.1 + 10.0 * rng.uniform());
    const Vec2 c = frame.decompose(0, v);
    const double val = truncated_norm(frame, 0, c, p);
    bounded = bounded && val >= v.norm();
    homogeneous = homogeneous && truncated_norm(frame, 0, c * 2.0, p) == 2.0 * val &&
                  truncated_norm(frame, 0, c * 0.125, p) == 0.125 * val;
    const std::ptrdiff_t n = std::ptrdiff_t(rng.uniform() * double(2 * half + 1)) - half;
    if (norm_growth_check(frame, v, p, n).pass) ++passes;
  }
  return {homogeneous && bounded && passes == 100,
          std::string("homogeneity ") + (homogeneous ? "exact" : "violated") + ", lower bound " +
              (bounded ? "holds" : "violated") + ", growth check " + std::to_string(passes) + "/100"};
}

}  // namespace

int main() {
  criterion(1, "exponent oracle", exponent_oracle);
  criterion(2, "determinant identity and backward cross-check", determinant_identity);
  criterion(3, "zero exponent for {A, A^-1}", zero_exponent);
  criterion(4, "joint cone certificate", cone_certificate);
  criterion(5, "stiffness of {L_A, L_B}", stiffness);
  criterion(6, "atomic branch at (1/5, 2/5)", atomic_branch);
  criterion(7, "unstable dimension of the shear family", srb_evidence);
  criterion(8, "affine parameter intertwining", intertwining);
  criterion(9, "stopping-time slope bounds", stopping_times_bounds);
  criterion(10, "mixed projective cocycle", mixed_cocycle);
  criterion(11, "non-randomness dichotomy", nonrandomness);
  criterion(12, "dimension estimator oracles", dimension_oracles);
  criterion(13, "truncated norm properties", truncated_norms);
  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
