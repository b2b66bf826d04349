#include "ergolab/torus.hpp"

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

std::int64_t mod_positive(std::int64_t v, std::int64_t m) {
  const std::int64_t r = v % m;
  return r < 0 ? r + m : r;
}

std::int64_t mul_mod(std::int64_t a, std::int64_t b, std::int64_t m) {
  return static_cast<std::int64_t>((static_cast<__int128>(a) * b) % m);
}

}  // namespace

RationalPoint normalized(RationalPoint p) {
  if (p.den <= 0) throw InvalidArgument("RationalPoint: denominator must be positive");
  p.num_x = mod_positive(p.num_x, p.den);
  p.num_y = mod_positive(p.num_y, p.den);
  return p;
}

RationalPoint apply_exact(const IntMat2& m, const RationalPoint& p) {
  const RationalPoint q = normalized(p);
  const std::int64_t n = q.den;
  const std::int64_t a = mod_positive(m.a, n), b = mod_positive(m.b, n);
  const std::int64_t c = mod_positive(m.c, n), d = mod_positive(m.d, n);
  RationalPoint out;
  out.den = n;
  out.num_x = (mul_mod(a, q.num_x, n) + mul_mod(b, q.num_y, n)) % n;
  out.num_y = (mul_mod(c, q.num_x, n) + mul_mod(d, q.num_y, n)) % n;
  return out;
}

}  // namespace ergolab
