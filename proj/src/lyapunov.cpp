#include "ergolab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ergolab/cones.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

struct ProjectiveRun {
  double mean_log = 0.0;
  double stderr = 0.0;
  double mean_log_det = 0.0;
};

ProjectiveRun run_projective(const Family& family, const Word& word, const TorusPoint& x0, std::size_t n,
                             const ExponentOptions& opts, bool inverse_transpose) {
  if (n < 1000) throw InvalidArgument("top_exponent: n must be at least 1000");
  if (opts.batches == 0 || opts.batches > n) throw InvalidArgument("top_exponent: bad batch count");
  const double sn = opts.start.norm();
  if (!(sn > 0.0) || !std::isfinite(sn)) throw InvalidArgument("top_exponent: start vector must be non-zero");
  Vec2 u = opts.start * (1.0 / sn);
  TorusPoint x = x0;
  std::vector<double> batch(opts.batches, 0.0);
  double sum_det = 0.0;
  const std::size_t total = opts.burn_in + n;
  for (std::size_t k = 0; k < total; ++k) {
    const MapSpec& f = family[word[k]];
    RealMat2 m = derivative(f, x);
    const double log_det = std::log(std::abs(m.det()));
    if (inverse_transpose) m = m.inverse_transpose();
    const Vec2 w = m * u;
    const double nrm = w.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw Degenerate("top_exponent: non-finite growth at step " + std::to_string(k));
    u = w * (1.0 / nrm);
    if (k >= opts.burn_in) {
      const std::size_t j = k - opts.burn_in;
      batch[j * opts.batches / n] += std::log(nrm);
      sum_det += log_det;
    }
    x = apply_map(f, x);
  }
  ProjectiveRun out;
  double total_log = 0.0;
  std::vector<double> means(opts.batches);
  for (std::size_t b = 0; b < opts.batches; ++b) {
    const std::size_t begin = (b * n + opts.batches - 1) / opts.batches;
    const std::size_t end = ((b + 1) * n + opts.batches - 1) / opts.batches;
    total_log += batch[b];
    means[b] = batch[b] / static_cast<double>(end - begin);
  }
  out.mean_log = total_log / static_cast<double>(n);
  out.mean_log_det = sum_det / static_cast<double>(n);
  if (opts.batches > 1) {
    double var = 0.0;
    for (double mb : means) var += (mb - out.mean_log) * (mb - out.mean_log);
    var /= static_cast<double>(opts.batches - 1);
    out.stderr = std::sqrt(var / static_cast<double>(opts.batches));
  }
  return out;
}

struct CommonBasis {
  Vec2 e1, e2;
  std::vector<double> log1, log2;  // per map id
  std::vector<bool> flip1, flip2;  // negative eigenvalue
};

std::optional<CommonBasis> commuting_basis(const Family& family, bool inverse_transpose) {
  std::vector<IntMat2> mats;
  for (const auto& f : family) {
    if (!f.is_linear()) return std::nullopt;
    IntMat2 m = f.inverted() ? f.linear_part().unimodular_inverse() : f.linear_part();
    if (inverse_transpose) {
      const IntMat2 inv = m.unimodular_inverse();
      m = {inv.a, inv.c, inv.b, inv.d};
    }
    mats.push_back(m);
  }
  for (std::size_t i = 0; i < mats.size(); ++i) {
    for (std::size_t j = i + 1; j < mats.size(); ++j) {
      if (!(mats[i] * mats[j] == mats[j] * mats[i])) return std::nullopt;
    }
  }
  std::optional<HyperbolicityReport> hyp;
  for (const auto& m : mats) {
    const auto rep = eigen_analysis(m);
    if (rep.is_hyperbolic) {
      hyp = rep;
      break;
    }
  }
  if (!hyp) return std::nullopt;
  CommonBasis b;
  b.e1 = unit_vector(hyp->angle_u);
  b.e2 = unit_vector(hyp->angle_s);
  for (const auto& m : mats) {
    const RealMat2 r = m.to_real();
    const Vec2 i1 = r * b.e1, i2 = r * b.e2;
    b.log1.push_back(std::log(i1.norm()));
    b.log2.push_back(std::log(i2.norm()));
    b.flip1.push_back(dot(i1, b.e1) < 0.0);
    b.flip2.push_back(dot(i2, b.e2) < 0.0);
  }
  return b;
}

ProjectiveRun run_common_basis(const CommonBasis& basis, const Word& word, std::size_t n,
                               const ExponentOptions& opts) {
  const Vec2 u = opts.start * (1.0 / opts.start.norm());
  const double det = cross(basis.e1, basis.e2);
  const double a = cross(u, basis.e2) / det, b = cross(basis.e1, u) / det;
  const double ninf = -std::numeric_limits<double>::infinity();
  double l1 = a != 0.0 ? std::log(std::abs(a)) : ninf, l2 = b != 0.0 ? std::log(std::abs(b)) : ninf;
  bool neg1 = a < 0.0, neg2 = b < 0.0;
  const auto log_norm = [&] {
    const double m = std::max(l1, l2);
    const double r1 = neg1 ? -std::exp(l1 - m) : std::exp(l1 - m);
    const double r2 = neg2 ? -std::exp(l2 - m) : std::exp(l2 - m);
    return m + std::log((basis.e1 * r1 + basis.e2 * r2).norm());
  };
  std::vector<double> marks;  // log |P_k u| at the batch boundaries
  std::size_t next_batch = 0;
  const std::size_t total = opts.burn_in + n;
  for (std::size_t k = 0; k <= total; ++k) {
    if (k >= opts.burn_in) {
      const std::size_t j = k - opts.burn_in;
      while (next_batch <= opts.batches && (next_batch * n + opts.batches - 1) / opts.batches == j) {
        marks.push_back(log_norm());
        ++next_batch;
      }
    }
    if (k == total) break;
    const std::size_t id = word[k];
    l1 += basis.log1[id];
    l2 += basis.log2[id];
    neg1 = neg1 != basis.flip1[id];
    neg2 = neg2 != basis.flip2[id];
  }
  ProjectiveRun out;
  out.mean_log = (marks.back() - marks.front()) / static_cast<double>(n);
  if (!std::isfinite(out.mean_log)) throw Degenerate("top_exponent: non-finite growth");
  if (opts.batches > 1) {
    double var = 0.0;
    for (std::size_t bi = 0; bi < opts.batches; ++bi) {
      const std::size_t begin = (bi * n + opts.batches - 1) / opts.batches;
      const std::size_t end = ((bi + 1) * n + opts.batches - 1) / opts.batches;
      const double mb = (marks[bi + 1] - marks[bi]) / static_cast<double>(end - begin);
      var += (mb - out.mean_log) * (mb - out.mean_log);
    }
    var /= static_cast<double>(opts.batches - 1);
    out.stderr = std::sqrt(var / static_cast<double>(opts.batches));
  }
  // Integer linear parts have |det| = 1.
  out.mean_log_det = 0.0;
  return out;
}

ProjectiveRun run_exponent(const Family& family, const Word& word, const TorusPoint& x0, std::size_t n,
                           const ExponentOptions& opts, bool inverse_transpose) {
  if (const auto basis = commuting_basis(family, inverse_transpose)) {
    if (n < 1000) throw InvalidArgument("top_exponent: n must be at least 1000");
    if (opts.batches == 0 || opts.batches > n) throw InvalidArgument("top_exponent: bad batch count");
    const double sn = opts.start.norm();
    if (!(sn > 0.0) || !std::isfinite(sn)) throw InvalidArgument("top_exponent: start vector must be non-zero");
    return run_common_basis(*basis, word, n, opts);
  }
  return run_projective(family, word, x0, n, opts, inverse_transpose);
}

Word exponent_word(const Family& family, const DrivingMeasure& nu, std::size_t n, std::uint64_t seed,
                   const ExponentOptions& opts) {
  nu.check_family(family);
  return sample_word(nu, opts.burn_in + n, seed);
}

/// Scaled product of derivatives along the orbit starting at x, steps [begin, end) of word.
struct Accumulated {
  ScaledMat2 product;
  double log_det = 0.0;
};

double log_singular_ratio(const Accumulated& acc) {
  // log(s_max / s_min) = 2 log s_max - log |det|
  return 2.0 * acc.product.log_opnorm() - acc.log_det;
}

}  // namespace

LyapunovEstimate top_exponent(const Family& family, const DrivingMeasure& nu, const TorusPoint& x0, std::size_t n,
                              std::uint64_t seed, const ExponentOptions& opts) {
  const Word w = exponent_word(family, nu, n, seed, opts);
  const ProjectiveRun run = run_exponent(family, w, x0, n, opts, false);
  LyapunovEstimate est;
  est.lambda_u = run.mean_log;
  est.mean_log_det = run.mean_log_det;
  est.lambda_s = run.mean_log_det - run.mean_log;
  est.stderr_u = run.stderr;
  est.n_steps = n;
  return est;
}

BackwardCheck backward_exponent(const Family& family, const DrivingMeasure& nu, const TorusPoint& x0, std::size_t n,
                                std::uint64_t seed, const ExponentOptions& opts) {
  const Word w = exponent_word(family, nu, n, seed, opts);
  const ProjectiveRun run = run_exponent(family, w, x0, n, opts, true);
  return {run.mean_log, run.stderr};
}

LyapunovEstimate merge_estimates(const std::vector<LyapunovEstimate>& runs) {
  LyapunovEstimate out;
  if (runs.empty()) return out;
  double total = 0.0;
  for (const auto& r : runs) total += static_cast<double>(r.n_steps);
  double var = 0.0;
  for (const auto& r : runs) {
    const double w = static_cast<double>(r.n_steps) / total;
    out.lambda_u += w * r.lambda_u;
    out.mean_log_det += w * r.mean_log_det;
    var += w * w * r.stderr_u * r.stderr_u;
    out.n_steps += r.n_steps;
  }
  out.lambda_s = out.mean_log_det - out.lambda_u;
  out.stderr_u = std::sqrt(var);
  return out;
}

double default_epsilon0(const LyapunovEstimate& est) {
  return std::min({1.0, est.lambda_u / 200.0, -est.lambda_s / 200.0}) / 2.0;
}

DirectionEstimate stable_direction(const Family& family, const Word& word, const TorusPoint& x, std::size_t N,
                                   std::size_t offset) {
  if (offset > word.size() || N > word.size() - offset) throw OutOfRange("stable_direction: word shorter than horizon");
  Accumulated acc;
  double early_angle = 0.0;
  bool have_early = false;
  TorusPoint p = x;
  for (std::size_t k = 0; k < N; ++k) {
    if (N >= 10 && k == N - 10) {
      early_angle = svd(acc.product.mat).right_min_angle;
      have_early = true;
    }
    const MapSpec& f = family[word[offset + k]];
    const RealMat2 m = derivative(f, p);
    acc.product = acc.product.then(m);
    acc.log_det += std::log(std::abs(m.det()));
    p = apply_map(f, p);
  }
  DirectionEstimate out;
  out.horizon = N;
  out.angle = svd(acc.product.mat).right_min_angle;
  out.convergence_gap = have_early && N > 10 ? std::abs(line_angle_delta(out.angle, early_angle))
                                             : std::numbers::pi / 2;
  out.singular_ratio = std::exp(log_singular_ratio(acc));
  out.unreliable = !(out.singular_ratio >= kMinSingularRatio) || out.convergence_gap > kMaxConvergenceGap;
  return out;
}

DirectionEstimate unstable_direction(const Family& family, const Word& word, const TorusPoint& x, std::size_t N) {
  if (N > word.size()) throw OutOfRange("unstable_direction: word shorter than horizon");
  std::vector<TorusPoint> past(N + 1);
  past[N] = x;
  for (std::size_t k = N; k-- > 0;) past[k] = inverse_map(family[word[k]], past[k + 1]);
  // Full product over word[0, N) and the shorter one over word[10, N).
  Accumulated full, recent;
  for (std::size_t k = 0; k < N; ++k) {
    const RealMat2 m = derivative(family[word[k]], past[k]);
    full.product = full.product.then(m);
    full.log_det += std::log(std::abs(m.det()));
    if (k >= 10) recent.product = recent.product.then(m);
  }
  DirectionEstimate out;
  out.horizon = N;
  out.angle = svd(full.product.mat).left_max_angle;
  out.convergence_gap = N > 10 ? std::abs(line_angle_delta(out.angle, svd(recent.product.mat).left_max_angle))
                               : std::numbers::pi / 2;
  out.singular_ratio = std::exp(log_singular_ratio(full));
  out.unreliable = !(out.singular_ratio >= kMinSingularRatio) || out.convergence_gap > kMaxConvergenceGap;
  return out;
}

double circular_line_variance(const std::vector<double>& angles) {
  if (angles.empty()) throw InvalidArgument("circular_line_variance: no angles");
  std::vector<double> terms;
  terms.reserve(angles.size() * angles.size());
  for (double a : angles) {
    for (double b : angles) terms.push_back(1.0 - std::cos(2.0 * (a - b)));
  }
  std::sort(terms.begin(), terms.end());
  const double k = static_cast<double>(angles.size());
  const double v = std::accumulate(terms.begin(), terms.end(), 0.0) / (k * k);
  return 1.0 - std::sqrt(std::max(0.0, 1.0 - v));
}

double nonrandomness_score(const Family& family, const DrivingMeasure& nu, const TorusPoint& x,
                           const std::vector<std::uint64_t>& seeds, std::size_t N) {
  if (seeds.size() < 2) throw InvalidArgument("nonrandomness_score: need at least 2 words");
  nu.check_family(family);
  std::vector<double> angles;
  std::size_t unreliable = 0;
  for (std::uint64_t s : seeds) {
    const Word w = sample_word(nu, N, s);
    const DirectionEstimate d = stable_direction(family, w, x, N);
    if (d.unreliable) {
      ++unreliable;
    } else {
      angles.push_back(d.angle);
    }
  }
  if (2 * unreliable > seeds.size()) {
    throw UnreliableDirection("nonrandomness_score: " + std::to_string(unreliable) + " of " +
                              std::to_string(seeds.size()) + " stable directions unreliable");
  }
  return circular_line_variance(angles);
}

double nonrandomness_score(const Family& family, const DrivingMeasure& nu, const TorusPoint& x, std::size_t k_words,
                           std::size_t N, std::uint64_t seed) {
  std::vector<std::uint64_t> seeds(k_words);
  for (std::size_t j = 0; j < k_words; ++j) seeds[j] = derive_seed(seed, j);
  return nonrandomness_score(family, nu, x, seeds, N);
}

// ---------------------------------------------------------------------------------------------
// Orbit frames and Lyapunov norms

OrbitFrame::OrbitFrame(const Family& family, const Word& word, std::size_t origin, const TorusPoint& x,
                       std::ptrdiff_t lo, std::ptrdiff_t hi, std::size_t settle)
    : lo_(lo), hi_(hi) {
  if (lo > 0 || hi < 0) throw InvalidArgument("OrbitFrame: need lo <= 0 <= hi");
  const auto s = static_cast<std::ptrdiff_t>(settle);
  const auto o = static_cast<std::ptrdiff_t>(origin);
  if (o + lo - s < 0 || o + hi + s > static_cast<std::ptrdiff_t>(word.size())) {
    throw OutOfRange("OrbitFrame: word does not cover the requested times plus settle length");
  }
  const std::ptrdiff_t t0 = lo - s, t1 = hi + s;
  const auto count = static_cast<std::size_t>(t1 - t0 + 1);
  const auto map_at = [&](std::ptrdiff_t t) -> const MapSpec& { return family[word[static_cast<std::size_t>(o + t)]]; };

  // Pulled back for t < 0 and pushed forward for t > 0: a pseudo-orbit with rounding-size
  // defects at every step, hence shadowed by a true orbit through a point next to x.
  std::vector<TorusPoint> pts(count);
  const auto zero_idx = static_cast<std::size_t>(-t0);
  pts[zero_idx] = x;
  for (std::size_t i = zero_idx; i-- > 0;) pts[i] = inverse_map(map_at(t0 + static_cast<std::ptrdiff_t>(i)), pts[i + 1]);
  for (std::size_t i = zero_idx; i + 1 < count; ++i) pts[i + 1] = apply_map(map_at(t0 + static_cast<std::ptrdiff_t>(i)), pts[i]);
  std::vector<RealMat2> mats(count - 1);
  for (std::size_t i = 0; i + 1 < count; ++i) mats[i] = derivative(map_at(t0 + static_cast<std::ptrdiff_t>(i)), pts[i]);

  std::vector<Vec2> eu(count), es(count);
  std::vector<double> gu(count - 1), gs(count - 1);
  eu[0] = unit_vector(1.0);
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const Vec2 w = mats[i] * eu[i];
    const double nrm = w.norm();
    gu[i] = std::log(nrm);
    eu[i + 1] = w * (1.0 / nrm);
  }
  es[count - 1] = unit_vector(2.0);
  for (std::size_t i = count - 1; i-- > 0;) {
    const Vec2 w = mats[i].inverse() * es[i + 1];
    const double nrm = w.norm();
    gs[i] = -std::log(nrm);
    es[i] = w * (1.0 / nrm);
  }

  const auto n_keep = static_cast<std::size_t>(hi - lo + 1);
  const auto first = static_cast<std::size_t>(s);
  points_.assign(pts.begin() + first, pts.begin() + first + n_keep);
  eu_.assign(eu.begin() + first, eu.begin() + first + n_keep);
  es_.assign(es.begin() + first, es.begin() + first + n_keep);
  cum_u_.assign(n_keep, 0.0);
  cum_s_.assign(n_keep, 0.0);
  const std::size_t zero = index(0);
  for (std::size_t i = zero; i + 1 < n_keep; ++i) {
    cum_u_[i + 1] = cum_u_[i] + gu[first + i];
    cum_s_[i + 1] = cum_s_[i] + gs[first + i];
  }
  for (std::size_t i = zero; i-- > 0;) {
    cum_u_[i] = cum_u_[i + 1] - gu[first + i];
    cum_s_[i] = cum_s_[i + 1] - gs[first + i];
  }
}

std::size_t OrbitFrame::index(std::ptrdiff_t k) const {
  if (k < lo_ || k > hi_) {
    throw OutOfRange("OrbitFrame: time " + std::to_string(k) + " outside [" + std::to_string(lo_) + ", " +
                     std::to_string(hi_) + "]");
  }
  return static_cast<std::size_t>(k - lo_);
}

double OrbitFrame::log_growth(Sigma s, std::ptrdiff_t k) const {
  return s == Sigma::Unstable ? cum_u_[index(k)] : cum_s_[index(k)];
}

Vec2 OrbitFrame::decompose(std::ptrdiff_t k, const Vec2& v) const {
  const Vec2 u = e_u(k), s = e_s(k);
  const double det = cross(u, s);
  return {cross(v, s) / det, cross(u, v) / det};
}

double OrbitFrame::log_norm(std::ptrdiff_t k, const Vec2& c, std::ptrdiff_t n) const {
  const std::size_t i0 = index(k), i1 = index(k + n);
  if (c.x == 0.0 && c.y == 0.0) return -std::numeric_limits<double>::infinity();
  const double la = c.x != 0.0 ? std::log(std::abs(c.x)) + cum_u_[i1] - cum_u_[i0]
                               : -std::numeric_limits<double>::infinity();
  const double lb = c.y != 0.0 ? std::log(std::abs(c.y)) + cum_s_[i1] - cum_s_[i0]
                               : -std::numeric_limits<double>::infinity();
  const double m = std::max(la, lb);
  const double ra = std::copysign(std::exp(la - m), c.x);
  const double rb = std::copysign(std::exp(lb - m), c.y);
  return m + std::log((eu_[i1] * ra + es_[i1] * rb).norm());
}

namespace {

double logsumexp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Twice the log norm terms 2(log|Df^{c+j} w| - lambda j - eps0 |j|) for j in the window
/// around time offset `center` (relative to k).
std::vector<double> window_terms(const OrbitFrame& f, std::ptrdiff_t k, const Vec2& c, const NormParams& p,
                                 std::ptrdiff_t center) {
  const auto w = static_cast<std::ptrdiff_t>(p.window);
  const std::ptrdiff_t jmax = p.two_sided ? w : 0;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(w + jmax + 1));
  for (std::ptrdiff_t j = -w; j <= jmax; ++j) {
    const double aj = static_cast<double>(j);
    out.push_back(2.0 * (f.log_norm(k, c, center + j) - p.lambda * aj - p.epsilon0 * std::abs(aj)));
  }
  return out;
}

double log_window_norm(const OrbitFrame& f, std::ptrdiff_t k, const Vec2& c, const NormParams& p,
                       std::ptrdiff_t center) {
  return 0.5 * logsumexp(window_terms(f, k, c, p, center));
}

}  // namespace

Vec2 project(const Vec2& coeffs, Sigma sigma) {
  return sigma == Sigma::Unstable ? Vec2{coeffs.x, 0.0} : Vec2{0.0, coeffs.y};
}

double log_truncated_norm(const OrbitFrame& frame, std::ptrdiff_t k, const Vec2& coeffs, const NormParams& p) {
  return log_window_norm(frame, k, coeffs, p, 0);
}

double truncated_norm(const OrbitFrame& frame, std::ptrdiff_t k, const Vec2& coeffs, const NormParams& p) {
  // Normalising by |w| keeps every logarithm near zero, so the result is |w| F(w / |w|)
  // and scaling w by 2^j is reproduced bit for bit.
  const double mag = (frame.e_u(k) * coeffs.x + frame.e_s(k) * coeffs.y).norm();
  if (mag == 0.0) return 0.0;
  return mag * std::exp(log_truncated_norm(frame, k, coeffs * (1.0 / mag), p));
}

double truncated_norm(const Family& family, const Word& word, std::size_t origin, const TorusPoint& x, const Vec2& v,
                      const LyapunovEstimate& est, const NormParams& p) {
  const auto w = static_cast<std::ptrdiff_t>(p.window);
  const OrbitFrame frame(family, word, origin, x, -w, p.two_sided ? w : 0);
  NormParams q = p;
  q.lambda = p.sigma == Sigma::Unstable ? est.lambda_u : est.lambda_s;
  return truncated_norm(frame, 0, project(frame.decompose(0, v), p.sigma), q);
}

GrowthCheck norm_growth_check(const OrbitFrame& frame, const Vec2& v, const NormParams& p, std::ptrdiff_t n) {
  const Vec2 c = project(frame.decompose(0, v), p.sigma);
  const auto w = static_cast<std::ptrdiff_t>(p.window);
  const std::ptrdiff_t up = p.two_sided ? w : 0;
  const double an = static_cast<double>(n);
  const double lv = log_window_norm(frame, 0, c, p, 0);
  const double lval = log_window_norm(frame, 0, c, p, n);

  // Terms of each window indexed by absolute time i, weighted relative to either centre.
  const auto term = [&](std::ptrdiff_t i, std::ptrdiff_t centre) {
    const double d = static_cast<double>(i - centre);
    return 2.0 * (frame.log_norm(0, c, i) - p.lambda * d - p.epsilon0 * std::abs(d));
  };
  std::vector<double> only_n, only_0;
  for (std::ptrdiff_t i = n - w; i <= n + up; ++i) {
    if (i < -w || i > up) only_n.push_back(term(i, 0));
  }
  for (std::ptrdiff_t i = -w; i <= up; ++i) {
    if (i < n - w || i > n + up) only_0.push_back(term(i, n));
  }
  const double t_up = only_n.empty() ? 0.0 : std::exp(logsumexp(only_n) - 2.0 * lv);
  const double t_low = only_0.empty() ? 0.0 : std::exp(logsumexp(only_0) - 2.0 * lval);

  GrowthCheck out;
  out.tail = std::max(t_up, t_low);
  const double log_slack = 2.0 * p.epsilon0 + std::log1p(out.tail);
  const double llow = an * p.lambda - std::abs(an) * p.epsilon0 + lv;
  const double lupp = an * p.lambda + std::abs(an) * p.epsilon0 + lv;
  out.lower = std::exp(llow);
  out.value = std::exp(lval);
  out.upper = p.two_sided ? std::exp(lupp) : std::numeric_limits<double>::infinity();
  const double m_low = lval - (llow - log_slack);
  const double m_up = p.two_sided ? (lupp + log_slack) - lval : std::numeric_limits<double>::infinity();
  out.margin = std::min(m_low, m_up);
  out.pass = out.margin >= 0.0;
  return out;
}

NormLogData lyapunov_norm_data(const OrbitFrame& frame, const LyapunovEstimate& est, std::size_t window,
                               double epsilon0, std::size_t steps) {
  NormParams pu{Sigma::Unstable, est.lambda_u, window, epsilon0, true};
  NormParams ps{Sigma::Stable, est.lambda_s, window, epsilon0, true};
  NormLogData out;
  double prev_u = log_window_norm(frame, 0, {1.0, 0.0}, pu, 0);
  double prev_s = log_window_norm(frame, 0, {0.0, 1.0}, ps, 0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const double cu = log_window_norm(frame, 0, {1.0, 0.0}, pu, kk);
    const double cs = log_window_norm(frame, 0, {0.0, 1.0}, ps, kk);
    out.log_u.push_back(cu - prev_u);
    out.log_s.push_back(cs - prev_s);
    prev_u = cu;
    prev_s = cs;
  }
  return out;
}

StoppingTimeTable stopping_times(const NormLogData& data, double delta, double epsilon, std::size_t m_lo,
                                 std::size_t m_hi) {
  if (!(delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("stopping_times: delta and epsilon must lie in (0, 1)");
  }
  if (data.log_u.size() != data.log_s.size()) throw InvalidArgument("stopping_times: data length mismatch");
  if (m_lo > m_hi) throw InvalidArgument("stopping_times: empty m range");
  for (double u : data.log_u) {
    if (!(u > 0.0)) throw InvalidArgument("stopping_times: unstable log-norm increments must be positive");
  }
  std::vector<double> U(data.log_u.size() + 1, 0.0), S(data.log_s.size() + 1, 0.0);
  for (std::size_t k = 0; k < data.log_u.size(); ++k) {
    U[k + 1] = U[k] + data.log_u[k];
    S[k + 1] = S[k] + data.log_s[k];
  }
  const double gap = std::log(epsilon / delta);
  StoppingTimeTable out{delta, epsilon, {}, {}, {}};
  for (std::size_t m = m_lo; m <= m_hi; ++m) {
    if (m >= U.size()) throw OutOfRange("stopping_times: m = " + std::to_string(m) + " beyond the orbit data");
    const double thr = U[m] + gap - S[m];
    const auto it = std::upper_bound(U.begin(), U.end(), thr);
    if (it == U.begin() || it == U.end()) {
      throw OutOfRange("stopping_times: L(" + std::to_string(m) + ") outside the orbit data");
    }
    const auto j = static_cast<std::ptrdiff_t>(it - U.begin()) - 1;
    out.m.push_back(m);
    out.L.push_back(j);
    out.tau.push_back(j - static_cast<std::ptrdiff_t>(m));
  }
  return out;
}

SlopeReport check_slope_bounds(const StoppingTimeTable& table, double lambda_u, double lambda_s, double epsilon0) {
  SlopeReport rep;
  rep.slope_lo = (-lambda_s - 3.0 * epsilon0) / (lambda_u + epsilon0);
  rep.slope_hi = (-lambda_s + 3.0 * epsilon0) / (lambda_u - epsilon0);
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.m.size(); ++i) {
    for (std::size_t j = i + 1; j < table.m.size(); ++j) {
      const double l = static_cast<double>(table.m[j]) - static_cast<double>(table.m[i]);
      const double d = static_cast<double>(table.tau[j] - table.tau[i]);
      const double excess = std::max(rep.slope_lo * l - 1.0 - d, d - rep.slope_hi * l - 1.0);
      rep.worst_excess = std::max(rep.worst_excess, excess);
      ++rep.pairs;
    }
  }
  rep.pass = rep.pairs == 0 || rep.worst_excess <= 0.0;
  if (rep.pairs == 0) rep.worst_excess = 0.0;
  return rep;
}

MixedExponent mixed_projective_exponent(const RealMat2& f, const RealMat2& g, double t, std::size_t steps,
                                        std::uint64_t seed) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("mixed_projective_exponent: t must lie in [0, 1]");
  const HyperbolicityReport ef = eigen_analysis(f);
  if (!ef.is_hyperbolic) throw PreconditionFail("mixed_projective_exponent: f is not hyperbolic");
  const Vec2 lines[2] = {unit_vector(ef.angle_u), unit_vector(ef.angle_s)};
  // Image line index of each eigenline under g.
  int perm[2];
  for (int i = 0; i < 2; ++i) {
    const double a = (g * lines[i]).angle();
    if (std::abs(line_angle_delta(a, ef.angle_u)) <= 1e-10) {
      perm[i] = 0;
    } else if (std::abs(line_angle_delta(a, ef.angle_s)) <= 1e-10) {
      perm[i] = 1;
    } else {
      throw PreconditionFail("mixed_projective_exponent: g does not preserve the eigenline pair of f");
    }
  }
  const double gu = std::log((g * lines[0]).norm()), gs = std::log((g * lines[1]).norm());
  const double fu = std::log((f * lines[0]).norm()), fs = std::log((f * lines[1]).norm());
  MixedExponent out;
  out.closed_form = (1.0 - t) * 0.5 * (fu + fs) + 0.5 * t * (gu + gs);

  // Both chains share the word; their average is the eta-average over the line pair.
  const CounterRng rng(seed);
  int state[2] = {0, 1};
  double sum = 0.0;
  const double glog[2] = {gu, gs}, flog[2] = {fu, fs};
  for (std::size_t k = 0; k < steps; ++k) {
    const bool use_g = rng.uniform(k) < t;
    for (int& s : state) {
      sum += use_g ? glog[s] : flog[s];
      if (use_g) s = perm[s];
    }
  }
  out.simulated = steps == 0 ? 0.0 : sum / (2.0 * static_cast<double>(steps));
  return out;
}

std::vector<ContinuityRow> exponent_continuity_scan(const MapSpec& f, const MapSpec& g,
                                                    const std::vector<double>& t_grid, std::size_t n,
                                                    std::uint64_t seed, const TorusPoint& x0) {
  const Family family{f, g};
  const auto lin = linear_parts(family);
  std::optional<std::pair<Vec2, Vec2>> shared;
  if (f.is_linear() && g.is_linear()) {
    const auto ef = eigen_analysis(lin[0]);
    if (ef.is_hyperbolic) {
      const Vec2 u = unit_vector(ef.angle_u), s = unit_vector(ef.angle_s);
      if (std::abs(line_angle_delta((lin[1] * u).angle(), ef.angle_u)) <= 1e-10 &&
          std::abs(line_angle_delta((lin[1] * s).angle(), ef.angle_s)) <= 1e-10) {
        shared = std::pair{u, s};
      }
    }
  }
  std::vector<ContinuityRow> rows;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("exponent_continuity_scan: t must lie in (0, 1]");
    const DrivingMeasure nu = t == 1.0 ? DrivingMeasure::dirac(0) : DrivingMeasure({{0, t}, {1, 1.0 - t}});
    ContinuityRow row;
    row.t = t;
    row.estimate = top_exponent(family, nu, x0, n, derive_seed(seed, i));
    if (shared) {
      const auto chi_on = [&](const Vec2& v) {
        return t * std::log((lin[0] * v).norm()) + (1.0 - t) * std::log((lin[1] * v).norm());
      };
      row.chi = std::max(chi_on(shared->first), chi_on(shared->second));
      row.residual = std::abs(row.estimate.lambda_u - *row.chi);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ergolab
