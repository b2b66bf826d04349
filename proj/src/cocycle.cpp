#include "ergolab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ergolab/errors.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

DrivingMeasure::DrivingMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidArgument("DrivingMeasure: no atoms");
  std::set<std::size_t> ids;
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.probability > 0.0)) throw InvalidArgument("DrivingMeasure: probabilities must be positive");
    if (!ids.insert(a.map_id).second) {
      throw InvalidArgument("DrivingMeasure: duplicate map id " + std::to_string(a.map_id));
    }
    total += a.probability;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("DrivingMeasure: probabilities sum to " + std::to_string(total));
  }
}

DrivingMeasure DrivingMeasure::uniform(std::size_t count) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < count; ++i) atoms.push_back({i, 1.0 / static_cast<double>(count)});
  return DrivingMeasure(std::move(atoms));
}

void DrivingMeasure::check_family(const Family& family) const {
  for (const auto& a : atoms_) {
    if (a.map_id >= family.size()) {
      throw InvalidArgument("DrivingMeasure: map id " + std::to_string(a.map_id) + " outside family of size " +
                            std::to_string(family.size()));
    }
  }
}

std::size_t DrivingMeasure::pick(double u) const {
  const double scaled = u * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), scaled);
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(idx, atoms_.size() - 1);
}

Word sample_word(const DrivingMeasure& nu, std::size_t length, std::uint64_t seed) {
  Word w;
  w.seed = seed;
  w.entries.resize(length);
  const CounterRng rng(seed);
  const auto& atoms = nu.atoms();
  for (std::size_t i = 0; i < length; ++i) {
    w.entries[i] = atoms.size() == 1 ? atoms[0].map_id : atoms[nu.pick(rng.uniform(i))].map_id;
  }
  return w;
}

Word constant_word(std::size_t map_id, std::size_t length) {
  Word w;
  w.entries.assign(length, map_id);
  return w;
}

namespace {

void check_span(const Word& word, std::size_t n, std::size_t offset) {
  if (offset > word.size() || n > word.size() - offset) {
    throw OutOfRange("word of length " + std::to_string(word.size()) + " cannot cover steps [" +
                     std::to_string(offset) + ", " + std::to_string(offset + n) + ")");
  }
}

}  // namespace

ScaledMat2 cocycle_derivative(const Family& family, const Word& word, const TorusPoint& p, std::size_t n,
                              std::size_t offset) {
  check_span(word, n, offset);
  ScaledMat2 acc;
  TorusPoint x = p;
  for (std::size_t k = 0; k < n; ++k) {
    const MapSpec& f = family[word[offset + k]];
    acc = acc.then(derivative(f, x));
    x = apply_map(f, x);
  }
  return acc;
}

std::vector<TorusPoint> orbit(const Family& family, const Word& word, const TorusPoint& p, std::size_t n,
                              std::size_t offset) {
  check_span(word, n, offset);
  std::vector<TorusPoint> out;
  out.reserve(n + 1);
  out.push_back(p);
  for (std::size_t k = 0; k < n; ++k) out.push_back(apply_map(family[word[offset + k]], out.back()));
  return out;
}

std::vector<Vec2> lifted_orbit(const Family& family, const Word& word, const Vec2& p, std::size_t n,
                               std::size_t offset) {
  check_span(word, n, offset);
  std::vector<Vec2> out;
  out.reserve(n + 1);
  out.push_back(p);
  for (std::size_t k = 0; k < n; ++k) out.push_back(apply_lifted(family[word[offset + k]], out.back()));
  return out;
}

std::vector<RealMat2> linear_parts(const Family& family) {
  std::vector<RealMat2> out;
  for (const auto& f : family) {
    const RealMat2 m = f.linear_part().to_real();
    out.push_back(f.inverted() ? m.inverse() : m);
  }
  return out;
}

}  // namespace ergolab
