#pragma once

// Lyapunov exponents, Oseledec directions, truncated Lyapunov norms and stopping times.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ergolab/cocycle.hpp"
#include "ergolab/linalg.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

struct LyapunovEstimate {
  double lambda_u = 0.0;
  double lambda_s = 0.0;  // mean_log_det - lambda_u
  double stderr_u = 0.0;  // from batch means
  std::size_t n_steps = 0;
  double mean_log_det = 0.0;
};

struct ExponentOptions {
  std::size_t burn_in = 1000;
  std::size_t batches = 20;
  Vec2 start = unit_vector(1.0);  // only its direction matters
};

/// Projective iteration along a nu-random word of length burn_in + n.
/// Throws Degenerate on non-finite growth, InvalidArgument when n < 1000.
///
/// When every map is linear and the linear parts commute with a hyperbolic member, the start
/// vector is tracked in the shared eigenbasis with log-scale coefficients instead. Plain
/// renormalised iteration loses the contracting component to rounding whenever the walk
/// backtracks (e.g. nu = (delta_A + delta_{A^-1}) / 2), which biases the estimate upward.
LyapunovEstimate top_exponent(const Family& family, const DrivingMeasure& nu, const TorusPoint& x0, std::size_t n,
                              std::uint64_t seed, const ExponentOptions& opts = {});

/// Same word and orbit as top_exponent, iterating the inverse-transpose cocycle, whose top
/// exponent is -lambda_s. Returns (estimate of -lambda_s, its batch stderr).
struct BackwardCheck {
  double minus_lambda_s = 0.0;
  double stderr = 0.0;
};
BackwardCheck backward_exponent(const Family& family, const DrivingMeasure& nu, const TorusPoint& x0, std::size_t n,
                                std::uint64_t seed, const ExponentOptions& opts = {});

/// Step-weighted mean of the exponents; stderr pooled from per-run standard errors.
LyapunovEstimate merge_estimates(const std::vector<LyapunovEstimate>& runs);

/// min{1, lambda_u / 200, -lambda_s / 200} / 2.
double default_epsilon0(const LyapunovEstimate& est);

struct DirectionEstimate {
  double angle = 0.0;  // line angle in [0, pi)
  std::size_t horizon = 0;
  double convergence_gap = 0.0;  // |angle(N) - angle(N - 10)|
  double singular_ratio = 0.0;
  bool unreliable = false;
};

/// Thresholds for flagging a direction as unreliable.
inline constexpr double kMinSingularRatio = 2.0;
inline constexpr double kMaxConvergenceGap = 1e-3;

/// Most contracted input direction of D_x f^N along word[offset, offset + N).
DirectionEstimate stable_direction(const Family& family, const Word& word, const TorusPoint& x, std::size_t N,
                                   std::size_t offset = 0);

/// Unstable line at x, where word[0, N) are the N maps leading up to x: x is pulled back N
/// steps and the most expanded output direction of the N-step cocycle is returned.
DirectionEstimate unstable_direction(const Family& family, const Word& word, const TorusPoint& x, std::size_t N);

/// 1 - |mean of exp(2 i theta_j)| over the stable directions of k_words independent words
/// (seeds derive_seed(seed, j)). Throws UnreliableDirection when more than half are flagged.
double nonrandomness_score(const Family& family, const DrivingMeasure& nu, const TorusPoint& x, std::size_t k_words,
                           std::size_t N, std::uint64_t seed);
/// Variant with an explicit seed per word.
double nonrandomness_score(const Family& family, const DrivingMeasure& nu, const TorusPoint& x,
                           const std::vector<std::uint64_t>& seeds, std::size_t N);
/// The score of a set of line angles; exactly invariant under permutations.
double circular_line_variance(const std::vector<double>& angles);

enum class Sigma { Unstable, Stable };

/// An orbit segment over times [lo, hi] with its unstable and stable line fields. Time 0 is
/// the point passed in, earlier times are pulled back with inverse_map and later ones pushed
/// forward; the map from time k to k + 1 is family[word[origin + k]]. The
/// unstable field is pushed forward from time lo - settle and the stable field pulled back
/// from time hi + settle, so the word must cover [origin + lo - settle, origin + hi + settle).
class OrbitFrame {
 public:
  OrbitFrame(const Family& family, const Word& word, std::size_t origin, const TorusPoint& x, std::ptrdiff_t lo,
             std::ptrdiff_t hi, std::size_t settle = 100);

  std::ptrdiff_t lo() const { return lo_; }
  std::ptrdiff_t hi() const { return hi_; }
  TorusPoint point(std::ptrdiff_t k) const { return points_[index(k)]; }
  /// Unit vectors spanning E^u and E^s at time k, signs carried along the orbit.
  Vec2 e_u(std::ptrdiff_t k) const { return eu_[index(k)]; }
  Vec2 e_s(std::ptrdiff_t k) const { return es_[index(k)]; }
  /// log |Df^k restricted to E^sigma| from time 0 to time k (negative k: backward).
  double log_growth(Sigma s, std::ptrdiff_t k) const;

  /// Coefficients (a, b) with v = a e_u(k) + b e_s(k).
  Vec2 decompose(std::ptrdiff_t k, const Vec2& v) const;
  /// log |Df^n w| for w = a e_u(k) + b e_s(k) at time k; requires k + n in range.
  double log_norm(std::ptrdiff_t k, const Vec2& coeffs, std::ptrdiff_t n) const;

 private:
  std::size_t index(std::ptrdiff_t k) const;

  std::ptrdiff_t lo_, hi_;
  std::vector<TorusPoint> points_;
  std::vector<Vec2> eu_, es_;
  std::vector<double> cum_u_, cum_s_;  // cumulative log growth from time 0
};

struct NormParams {
  Sigma sigma = Sigma::Unstable;
  double lambda = 0.0;  // exponent of the bundle the norm is adapted to
  std::size_t window = 50;
  double epsilon0 = 0.0;
  bool two_sided = true;
};

/// (sum_n |Df^n w|^2 e^{-2 lambda n - 2 eps0 |n|})^{1/2} over n in [-W, W] (two-sided) or
/// [-W, 0] (one-sided), for w = a e_u(k) + b e_s(k) at time k.
double truncated_norm(const OrbitFrame& frame, std::ptrdiff_t k, const Vec2& coeffs, const NormParams& p);
double log_truncated_norm(const OrbitFrame& frame, std::ptrdiff_t k, const Vec2& coeffs, const NormParams& p);

/// Coefficients of the E^sigma component only.
Vec2 project(const Vec2& coeffs, Sigma sigma);

/// Convenience form: builds the frame around word[origin] with x at time 0. The norm is
/// defined on E^sigma, so v is first projected onto E^sigma along the other line.
double truncated_norm(const Family& family, const Word& word, std::size_t origin, const TorusPoint& x, const Vec2& v,
                      const LyapunovEstimate& est, const NormParams& p);

struct GrowthCheck {
  bool pass = false;
  double margin = 0.0;  // log slack left on the tighter side
  double lower = 0.0;   // e^{n lambda - |n| eps0} |v|'
  double value = 0.0;   // |Df^n v|' at time n
  double upper = 0.0;   // e^{n lambda + |n| eps0} |v|' (infinite for one-sided norms)
  double tail = 0.0;    // relative mass outside the overlap of the two windows
};

/// Checks lower / s <= |Df^n v|' <= upper * s with s = e^{2 eps0} (1 + tail), for the
/// E^sigma component of v. One-sided norms only have the lower bound.
GrowthCheck norm_growth_check(const OrbitFrame& frame, const Vec2& v, const NormParams& p, std::ptrdiff_t n);

/// Per-step log ratios of Lyapunov norms along E^u and E^s, k = 0 .. steps - 1.
struct NormLogData {
  std::vector<double> log_u;
  std::vector<double> log_s;
};

/// Two-sided truncated Lyapunov norm data for steps [0, steps) along the frame's orbit.
/// The frame must cover [-W, steps + W].
NormLogData lyapunov_norm_data(const OrbitFrame& frame, const LyapunovEstimate& est, std::size_t window,
                               double epsilon0, std::size_t steps);

struct StoppingTimeTable {
  double delta = 0.0;
  double epsilon = 0.0;
  std::vector<std::size_t> m;
  std::vector<std::ptrdiff_t> tau;
  std::vector<std::ptrdiff_t> L;
};

/// tau(m) = max{l : S[m] + U[m + l] - U[m] + log delta <= log epsilon} with U, S the
/// cumulative sums of the data; L = m + tau. Throws OutOfRange when m or m + tau reaches
/// the end of the data.
StoppingTimeTable stopping_times(const NormLogData& data, double delta, double epsilon, std::size_t m_lo,
                                 std::size_t m_hi);

struct SlopeReport {
  bool pass = false;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double worst_excess = 0.0;  // largest violation of [lo l - 1, hi l + 1], <= 0 when passing
  std::size_t pairs = 0;
};

/// Every pair m < m' of the table: tau(m') - tau(m) within [lo, hi] * (m' - m) +- 1.
SlopeReport check_slope_bounds(const StoppingTimeTable& table, double lambda_u, double lambda_s, double epsilon0);

struct MixedExponent {
  double closed_form = 0.0;
  double simulated = 0.0;
};

/// nu = t delta_g + (1 - t) delta_f acting on the eigenline pair of f. Throws
/// PreconditionFail when g does not permute {E^u_f, E^s_f} (tolerance 1e-10), or when f
/// is not hyperbolic.
MixedExponent mixed_projective_exponent(const RealMat2& f, const RealMat2& g, double t, std::size_t steps = 100000,
                                        std::uint64_t seed = 1);

struct ContinuityRow {
  double t = 0.0;
  LyapunovEstimate estimate;
  std::optional<double> chi;       // exact exponent when f and g share their eigenlines
  std::optional<double> residual;  // |lambda_u - chi|
};

/// top_exponent for nu_t = t delta_f + (1 - t) delta_g on each t in (0, 1].
std::vector<ContinuityRow> exponent_continuity_scan(const MapSpec& f, const MapSpec& g,
                                                    const std::vector<double>& t_grid, std::size_t n,
                                                    std::uint64_t seed, const TorusPoint& x0 = {0.1234, 0.5678});

}  // namespace ergolab
