#pragma once

// Empirical stationary measures, stationarity and invariance tests, atoms, and the
// trichotomy verdict.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ergolab/cocycle.hpp"
#include "ergolab/lyapunov.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

/// Samples of a single random orbit plus a G x G histogram (cell (i, j) holds
/// floor(G x) = i, floor(G y) = j, stored at i * G + j).
struct EmpiricalMeasure {
  std::vector<TorusPoint> samples;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  std::size_t grid = 16;
  std::vector<std::size_t> histogram;

  static EmpiricalMeasure from_samples(std::vector<TorusPoint> samples, std::size_t grid = 16,
                                       std::size_t burn_in = 0, std::uint64_t seed = 0);
  std::size_t size() const { return samples.size(); }
};

std::size_t grid_cell(const TorusPoint& p, std::size_t grid);
std::vector<std::size_t> histogram(const std::vector<TorusPoint>& pts, std::size_t grid);

/// Concatenate shards (samples in argument order, histograms added). Grids must agree.
EmpiricalMeasure merge(const std::vector<EmpiricalMeasure>& shards);

using StartPoint = std::variant<TorusPoint, RationalPoint>;

/// x_{k+1} = f_{w_k}(x_k), keeping x_k for burn_in <= k < burn_in + n. A rational start
/// under an all-linear family is iterated exactly. Throws InvalidArgument when n < 1000.
EmpiricalMeasure sample_stationary(const Family& family, const DrivingMeasure& nu, const StartPoint& x0,
                                   std::size_t burn_in, std::size_t n, std::uint64_t seed, std::size_t grid = 16);

/// Many-orbit mode: n_orbits orbits from uniform random starts, each with its own burn-in.
EmpiricalMeasure sample_stationary_orbits(const Family& family, const DrivingMeasure& nu, std::size_t n_orbits,
                                          std::size_t burn_in, std::size_t n_per_orbit, std::uint64_t seed,
                                          std::size_t grid = 16);

struct StationarityResidual {
  double max_cell = 0.0;  // max_A |mu(A) - sum_i p_i mu(f_i^-1 A)|
  double total = 0.0;     // the same differences summed over all cells (L1)
};

/// Grid-cell comparison of mu against its nu-average push-forward.
StationarityResidual stationarity_residual(const EmpiricalMeasure& mu, const Family& family,
                                           const DrivingMeasure& nu, std::size_t grid = 16);

struct FourierSpectrum {
  int cutoff = 5;
  std::size_t sample_count = 0;
  /// One frequency per +-k pair: kx > 0, or kx = 0 and ky > 0.
  std::vector<std::pair<int, int>> frequencies;
  std::vector<double> magnitudes;

  double max() const;
  /// Every magnitude below factor / sqrt(sample_count).
  bool flat(double factor = 4.0) const;
};

std::vector<std::pair<int, int>> canonical_frequencies(int cutoff);

/// |1/N sum_j exp(2 pi i k . x_j)| for 0 < |k|_inf <= cutoff.
FourierSpectrum fourier_spectrum(const std::vector<TorusPoint>& pts, int cutoff = 5);
/// Complex coefficients in canonical order.
std::vector<std::array<double, 2>> fourier_coefficients(const std::vector<TorusPoint>& pts, int cutoff = 5);

struct AtomCluster {
  TorusPoint center;
  double mass = 0.0;
  double radius = 0.0;
};

struct AtomReport {
  std::vector<AtomCluster> clusters;
  double residual_mass = 1.0;  // 1 - (sum of cluster masses, in cluster order)
};

/// Greedy: take the sample whose closed radius-ball (max metric) holds the most remaining
/// samples, record it, remove the ball, repeat until the best ball has mass < mass_threshold.
AtomReport atom_detect(const EmpiricalMeasure& mu, double radius, double mass_threshold);

/// max over 0 < |k|_inf <= cutoff of |coeff_k(mu) - coeff_k(f_* mu)|.
double invariance_distance(const EmpiricalMeasure& mu, const MapSpec& spec, int cutoff = 5);

enum class Verdict { Atomic, SRBLike, NonRandomStableField, Inconclusive };
std::string verdict_name(Verdict v);

struct Evidence {
  std::optional<LyapunovEstimate> exponents;
  std::optional<AtomReport> atoms;
  std::optional<FourierSpectrum> spectrum;
  std::optional<double> nonrandomness;
  std::optional<double> dim_u;
};

struct ClassifyThresholds {
  double atomic_residual = 0.01;
  double fourier_factor = 4.0;
  double dim_tolerance = 0.1;
  double nonrandom = 1e-3;
  double exponent_sigmas = 3.0;  // exponents must clear this many standard errors
};

struct TrichotomyVerdict {
  Verdict tag = Verdict::Inconclusive;
  Evidence evidence;
  bool hyperbolic = false;
  bool fourier_flat = false;
  std::string reason;
};

/// Decision tree, in order:
///   atoms with residual < atomic_residual -> Atomic, unless the spectrum is also flat;
///   nonrandomness < nonrandom -> NonRandomStableField;
///   hyperbolic exponents and |dim_u - 1| <= dim_tolerance -> SRBLike;
///   otherwise Inconclusive.
TrichotomyVerdict classify(const Evidence& evidence, const ClassifyThresholds& th = {});

}  // namespace ergolab
