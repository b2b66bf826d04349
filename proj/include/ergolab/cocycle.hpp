#pragma once

// Map families, driving measures, random words and the derivative cocycle.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ergolab/linalg.hpp"
#include "ergolab/map_spec.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

/// map_id is an index into a Family.
using Family = std::vector<MapSpec>;

struct Atom {
  std::size_t map_id = 0;
  double probability = 0.0;
};

/// Finitely supported probability on a family. Validates positivity, distinct ids and
/// total mass 1 within 1e-12.
class DrivingMeasure {
 public:
  explicit DrivingMeasure(std::vector<Atom> atoms);

  static DrivingMeasure dirac(std::size_t map_id) { return DrivingMeasure({{map_id, 1.0}}); }
  static DrivingMeasure uniform(std::size_t count);

  const std::vector<Atom>& atoms() const { return atoms_; }
  /// Throws InvalidArgument when an id is outside the family.
  void check_family(const Family& family) const;

  /// Index of the atom selected by u in [0, 1).
  std::size_t pick(double u) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

struct Word {
  std::vector<std::size_t> entries;
  std::uint64_t seed = 0;

  std::size_t size() const { return entries.size(); }
  std::size_t operator[](std::size_t i) const { return entries[i]; }
};

/// i.i.d. word; entry i is a pure function of (seed, i).
Word sample_word(const DrivingMeasure& nu, std::size_t length, std::uint64_t seed);

/// Constant word of a single map.
Word constant_word(std::size_t map_id, std::size_t length);

/// D_x f^n_w with f_k = family[word[offset + k]]. Throws OutOfRange if offset + n > |word|.
ScaledMat2 cocycle_derivative(const Family& family, const Word& word, const TorusPoint& p, std::size_t n,
                              std::size_t offset = 0);

/// x_0 = p, x_{k+1} = f_{word[offset + k]}(x_k), k < n. Returns n + 1 points.
std::vector<TorusPoint> orbit(const Family& family, const Word& word, const TorusPoint& p, std::size_t n,
                              std::size_t offset = 0);

/// Same orbit on the universal cover, without reduction.
std::vector<Vec2> lifted_orbit(const Family& family, const Word& word, const Vec2& p, std::size_t n,
                               std::size_t offset = 0);

/// Linear parts of the family as real matrices.
std::vector<RealMat2> linear_parts(const Family& family);

}  // namespace ergolab
