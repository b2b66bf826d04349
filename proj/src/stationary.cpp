#include "ergolab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "ergolab/errors.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinSamples = 1000;

using Complex = std::complex<double>;

bool all_identical(const std::vector<TorusPoint>& pts) {
  return std::all_of(pts.begin(), pts.end(), [&](const TorusPoint& p) { return p == pts.front(); });
}

std::vector<Complex> coefficient_sums(const std::vector<TorusPoint>& pts, int cutoff) {
  const auto freqs = canonical_frequencies(cutoff);
  std::vector<Complex> sums(freqs.size());
  std::vector<Complex> px(cutoff + 1), py(2 * cutoff + 1);
  for (const auto& p : pts) {
    const Complex ex = std::polar(1.0, kTwoPi * p.x());
    const Complex ey = std::polar(1.0, kTwoPi * p.y());
    px[0] = 1.0;
    for (int j = 1; j <= cutoff; ++j) px[j] = px[j - 1] * ex;
    py[cutoff] = 1.0;
    for (int j = 1; j <= cutoff; ++j) {
      py[cutoff + j] = py[cutoff + j - 1] * ey;
      py[cutoff - j] = std::conj(py[cutoff + j]);
    }
    for (std::size_t f = 0; f < freqs.size(); ++f) sums[f] += px[freqs[f].first] * py[cutoff + freqs[f].second];
  }
  return sums;
}

void check_nonempty(const EmpiricalMeasure& mu, const char* who) {
  if (mu.samples.empty()) throw InvalidArgument(std::string(who) + ": empty measure");
}

// Uniform grid of cell size >= radius over the torus, for ball counting.
class BallIndex {
 public:
  BallIndex(const std::vector<TorusPoint>& pts, double radius) : pts_(pts), radius_(radius) {
    cells_ = std::min<std::size_t>(4096, std::size_t(std::floor(1.0 / radius)));
    if (cells_ < 3) cells_ = 1;
    for (std::size_t i = 0; i < pts.size(); ++i) buckets_[key(cell(pts[i].x()), cell(pts[i].y()))].push_back(i);
  }

  template <class Fn>
  void for_each_near(const TorusPoint& c, Fn&& fn) const {
    const long n = long(cells_);
    const long cx = long(cell(c.x())), cy = long(cell(c.y()));
    const long reach = n > 1 ? 1 : 0;
    for (long dx = -reach; dx <= reach; ++dx) {
      for (long dy = -reach; dy <= reach; ++dy) {
        const auto it = buckets_.find(key(std::size_t((cx + dx + n) % n), std::size_t((cy + dy + n) % n)));
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          if (torus_distance(pts_[i], c) <= radius_) fn(i);
        }
      }
    }
  }

 private:
  std::size_t cell(double v) const { return std::min(cells_ - 1, std::size_t(v * double(cells_))); }
  std::uint64_t key(std::size_t i, std::size_t j) const { return std::uint64_t(i) * cells_ + j; }

  const std::vector<TorusPoint>& pts_;
  double radius_;
  std::size_t cells_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace

std::size_t grid_cell(const TorusPoint& p, std::size_t grid) {
  const auto g = [grid](double v) { return std::min(grid - 1, std::size_t(v * double(grid))); };
  return g(p.x()) * grid + g(p.y());
}

std::vector<std::size_t> histogram(const std::vector<TorusPoint>& pts, std::size_t grid) {
  if (grid == 0) throw InvalidArgument("histogram: grid must be positive");
  std::vector<std::size_t> h(grid * grid, 0);
  for (const auto& p : pts) ++h[grid_cell(p, grid)];
  return h;
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<TorusPoint> samples, std::size_t grid,
                                                std::size_t burn_in, std::uint64_t seed) {
  EmpiricalMeasure mu;
  mu.histogram = ergolab::histogram(samples, grid);
  mu.samples = std::move(samples);
  mu.burn_in = burn_in;
  mu.seed = seed;
  mu.grid = grid;
  return mu;
}

EmpiricalMeasure merge(const std::vector<EmpiricalMeasure>& shards) {
  if (shards.empty()) throw InvalidArgument("merge: no shards");
  EmpiricalMeasure out = shards.front();
  for (std::size_t s = 1; s < shards.size(); ++s) {
    if (shards[s].grid != out.grid) throw InvalidArgument("merge: histogram grids differ");
    out.samples.insert(out.samples.end(), shards[s].samples.begin(), shards[s].samples.end());
    for (std::size_t c = 0; c < out.histogram.size(); ++c) out.histogram[c] += shards[s].histogram[c];
  }
  return out;
}

EmpiricalMeasure sample_stationary(const Family& family, const DrivingMeasure& nu, const StartPoint& x0,
                                   std::size_t burn_in, std::size_t n, std::uint64_t seed, std::size_t grid) {
  if (n < kMinSamples) throw InvalidArgument("sample_stationary: n must be >= 1000");
  nu.check_family(family);
  const CounterRng rng(seed);
  const auto map_at = [&](std::size_t k) -> const MapSpec& { return family[nu.atoms()[nu.pick(rng.uniform(k))].map_id]; };

  std::vector<TorusPoint> samples;
  samples.reserve(n);
  const bool linear = std::all_of(family.begin(), family.end(), [](const MapSpec& s) { return s.is_linear(); });
  if (const auto* rp = std::get_if<RationalPoint>(&x0); rp && linear) {
    RationalPoint p = normalized(*rp);
    for (std::size_t k = 0; k < burn_in + n; ++k) {
      if (k >= burn_in) samples.push_back(p.to_point());
      const MapSpec& f = map_at(k);
      p = apply_exact(f.inverted() ? f.linear_part().unimodular_inverse() : f.linear_part(), p);
    }
  } else {
    TorusPoint p = std::holds_alternative<TorusPoint>(x0) ? std::get<TorusPoint>(x0)
                                                          : std::get<RationalPoint>(x0).to_point();
    for (std::size_t k = 0; k < burn_in + n; ++k) {
      if (k >= burn_in) samples.push_back(p);
      p = apply_map(map_at(k), p);
    }
  }
  return EmpiricalMeasure::from_samples(std::move(samples), grid, burn_in, seed);
}

EmpiricalMeasure sample_stationary_orbits(const Family& family, const DrivingMeasure& nu, std::size_t n_orbits,
                                          std::size_t burn_in, std::size_t n_per_orbit, std::uint64_t seed,
                                          std::size_t grid) {
  if (n_orbits == 0 || n_orbits * n_per_orbit < kMinSamples) {
    throw InvalidArgument("sample_stationary_orbits: need at least 1000 samples in total");
  }
  nu.check_family(family);
  std::vector<TorusPoint> samples;
  samples.reserve(n_orbits * n_per_orbit);
  for (std::size_t o = 0; o < n_orbits; ++o) {
    const CounterRng rng(derive_seed(seed, o));
    // Counters 0 and 1 pick the start; the word uses counters from 2 on.
    TorusPoint p(rng.uniform(0), rng.uniform(1));
    for (std::size_t k = 0; k < burn_in + n_per_orbit; ++k) {
      if (k >= burn_in) samples.push_back(p);
      p = apply_map(family[nu.atoms()[nu.pick(rng.uniform(k + 2))].map_id], p);
    }
  }
  return EmpiricalMeasure::from_samples(std::move(samples), grid, burn_in, seed);
}

StationarityResidual stationarity_residual(const EmpiricalMeasure& mu, const Family& family,
                                           const DrivingMeasure& nu, std::size_t grid) {
  check_nonempty(mu, "stationarity_residual");
  nu.check_family(family);
  const double n = double(mu.size());
  const auto here = histogram(mu.samples, grid);
  std::vector<double> pushed(grid * grid, 0.0);
  for (const auto& atom : nu.atoms()) {
    std::vector<std::size_t> h(grid * grid, 0);
    for (const auto& p : mu.samples) ++h[grid_cell(apply_map(family[atom.map_id], p), grid)];
    for (std::size_t c = 0; c < h.size(); ++c) pushed[c] += atom.probability * (double(h[c]) / n);
  }
  StationarityResidual r;
  for (std::size_t c = 0; c < here.size(); ++c) {
    const double d = std::abs(double(here[c]) / n - pushed[c]);
    r.max_cell = std::max(r.max_cell, d);
    r.total += d;
  }
  return r;
}

std::vector<std::pair<int, int>> canonical_frequencies(int cutoff) {
  if (cutoff < 1) throw InvalidArgument("canonical_frequencies: cutoff must be >= 1");
  std::vector<std::pair<int, int>> out;
  for (int ky = 1; ky <= cutoff; ++ky) out.emplace_back(0, ky);
  for (int kx = 1; kx <= cutoff; ++kx) {
    for (int ky = -cutoff; ky <= cutoff; ++ky) out.emplace_back(kx, ky);
  }
  return out;
}

std::vector<std::array<double, 2>> fourier_coefficients(const std::vector<TorusPoint>& pts, int cutoff) {
  if (pts.empty()) throw InvalidArgument("fourier_coefficients: no samples");
  const auto sums = coefficient_sums(pts, cutoff);
  const double n = double(pts.size());
  std::vector<std::array<double, 2>> out;
  out.reserve(sums.size());
  for (const auto& s : sums) out.push_back({s.real() / n, s.imag() / n});
  return out;
}

FourierSpectrum fourier_spectrum(const std::vector<TorusPoint>& pts, int cutoff) {
  FourierSpectrum spec;
  spec.cutoff = cutoff;
  spec.sample_count = pts.size();
  spec.frequencies = canonical_frequencies(cutoff);
  if (!pts.empty() && all_identical(pts)) {
    // |exp(i theta)| is 1; evaluating it in floating point need not be.
    spec.magnitudes.assign(spec.frequencies.size(), 1.0);
    return spec;
  }
  for (const auto& c : fourier_coefficients(pts, cutoff)) {
    spec.magnitudes.push_back(std::min(1.0, std::hypot(c[0], c[1])));
  }
  return spec;
}

double FourierSpectrum::max() const {
  double m = 0.0;
  for (double v : magnitudes) m = std::max(m, v);
  return m;
}

bool FourierSpectrum::flat(double factor) const {
  if (sample_count == 0) return false;
  return max() < factor / std::sqrt(double(sample_count));
}

AtomReport atom_detect(const EmpiricalMeasure& mu, double radius, double mass_threshold) {
  if (!(radius > 0.0)) throw InvalidArgument("atom_detect: radius must be > 0");
  AtomReport report;
  if (mu.samples.empty()) return report;
  const std::size_t n = mu.size();

  // Collapse duplicates; candidates are the distinct sample points.
  std::vector<TorusPoint> sorted = mu.samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const TorusPoint& a, const TorusPoint& b) { return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y(); });
  std::vector<TorusPoint> pts;
  std::vector<std::size_t> weight;
  for (const auto& p : sorted) {
    if (!pts.empty() && pts.back() == p) {
      ++weight.back();
    } else {
      pts.push_back(p);
      weight.push_back(1);
    }
  }

  const BallIndex index(pts, radius);
  std::vector<bool> removed(pts.size(), false);
  double assigned = 0.0;
  while (true) {
    std::size_t best = pts.size(), best_count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (removed[i]) continue;
      std::size_t count = 0;
      index.for_each_near(pts[i], [&](std::size_t j) {
        if (!removed[j]) count += weight[j];
      });
      if (count > best_count) {
        best_count = count;
        best = i;
      }
    }
    if (best == pts.size()) break;
    const double mass = double(best_count) / double(n);
    if (mass < mass_threshold) break;
    const TorusPoint center = pts[best];
    index.for_each_near(center, [&](std::size_t j) { removed[j] = true; });
    report.clusters.push_back({center, mass, radius});
    assigned += mass;
  }
  report.residual_mass = 1.0 - assigned;
  return report;
}

double invariance_distance(const EmpiricalMeasure& mu, const MapSpec& spec, int cutoff) {
  check_nonempty(mu, "invariance_distance");
  std::vector<TorusPoint> pushed;
  pushed.reserve(mu.size());
  for (const auto& p : mu.samples) pushed.push_back(apply_map(spec, p));
  const auto a = coefficient_sums(mu.samples, cutoff);
  const auto b = coefficient_sums(pushed, cutoff);
  const double n = double(mu.size());
  double worst = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) worst = std::max(worst, std::abs((a[f] - b[f]) / n));
  return worst;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Atomic:
      return "Atomic";
    case Verdict::SRBLike:
      return "SRBLike";
    case Verdict::NonRandomStableField:
      return "NonRandomStableField";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

TrichotomyVerdict classify(const Evidence& evidence, const ClassifyThresholds& th) {
  TrichotomyVerdict out;
  out.evidence = evidence;
  if (evidence.exponents) {
    const auto& e = *evidence.exponents;
    const double band = th.exponent_sigmas * e.stderr_u;
    out.hyperbolic = e.lambda_u > band && e.lambda_s < -band;
  }
  out.fourier_flat = evidence.spectrum && evidence.spectrum->flat(th.fourier_factor);

  std::ostringstream why;
  if (evidence.atoms && evidence.atoms->residual_mass < th.atomic_residual) {
    if (out.fourier_flat) {
      out.tag = Verdict::Inconclusive;
      out.reason = "atoms capture the mass but the spectrum is flat";
      return out;
    }
    out.tag = Verdict::Atomic;
    why << evidence.atoms->clusters.size() << " clusters, residual mass " << evidence.atoms->residual_mass;
    out.reason = why.str();
    return out;
  }
  if (evidence.nonrandomness && *evidence.nonrandomness < th.nonrandom) {
    out.tag = Verdict::NonRandomStableField;
    why << "nonrandomness score " << *evidence.nonrandomness;
    out.reason = why.str();
    return out;
  }
  if (!out.hyperbolic) {
    out.reason = "exponents missing or not separated from zero";
    return out;
  }
  if (!evidence.dim_u) {
    out.reason = "no unstable dimension estimate";
    return out;
  }
  if (std::abs(*evidence.dim_u - 1.0) <= th.dim_tolerance) {
    out.tag = Verdict::SRBLike;
    why << "dim_u " << *evidence.dim_u;
    out.reason = why.str();
    return out;
  }
  why << "dim_u " << *evidence.dim_u << " outside tolerance";
  out.reason = why.str();
  return out;
}

}  // namespace ergolab
