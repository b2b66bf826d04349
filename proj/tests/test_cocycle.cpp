#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ergolab/cocycle.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/rng.hpp"
#include "fixtures.hpp"

using namespace ergolab;
using fixtures::kA;
using fixtures::kB;

TEST_CASE("torus reduction is idempotent and lands in [0,1)") {
  for (double v : {-1e-18, -0.25, 0.0, 0.999999, 1.0, 3.5, -7.0}) {
    const double r = wrap01(v);
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
    CHECK(wrap01(r) == r);
  }
  const TorusPoint p(1.25, -0.5);
  CHECK(p.x() == 0.25);
  CHECK(p.y() == 0.5);
}

TEST_CASE("linear apply and inverse on the cat map") {
  const auto f = MapSpec::linear(kA);
  CHECK(apply_map(f, {0.5, 0.5}) == TorusPoint(0.5, 0.0));
  CHECK(apply_map(f, {0.0, 0.0}) == TorusPoint(0.0, 0.0));
  CHECK(inverse_map(f, {0.5, 0.0}) == TorusPoint(0.5, 0.5));
  const auto id = MapSpec::linear(IntMat2::identity());
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const TorusPoint q(rng.uniform(), rng.uniform());
    CHECK(inverse_map(id, q) == q);
  }
}

TEST_CASE("MapSpec validation") {
  CHECK_THROWS_AS(MapSpec::linear({2, 0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(MapSpec::shear_pair(kA, fixtures::test_shears(), -0.1), InvalidArgument);
  // eps * C1 = 0.5 * 2 pi * 0.25 exceeds 1/opnorm(A^-1) ~ 0.38.
  CHECK_THROWS_AS(MapSpec::shear_pair(kA, fixtures::test_shears(), 0.5), InvalidArgument);
  CHECK(MapSpec::shear_pair(kA, fixtures::test_shears(), 0.05).conservative());
  CHECK_FALSE(MapSpec::trig(kA, fixtures::test_trig(), 0.05).conservative());
  CHECK(MapSpec::trig(kA, fixtures::test_trig(), 0.0).is_linear());
}

TEST_CASE("trig with eps = 0 equals the linear map exactly") {
  const auto lin = MapSpec::linear(kA);
  const auto tr = MapSpec::trig(kA, fixtures::test_trig(), 0.0);
  RngStream rng(11);
  for (int i = 0; i < 1000; ++i) {
    const TorusPoint p(rng.uniform(), rng.uniform());
    CHECK(apply_map(tr, p) == apply_map(lin, p));
    CHECK(derivative(tr, p) == kA.to_real());
  }
}

TEST_CASE("perturbed round trips") {
  const auto sh = MapSpec::shear_pair(kA, fixtures::test_shears(), 0.05);
  const auto tr = MapSpec::trig(kB, fixtures::test_trig(), 0.05);
  RngStream rng(12);
  double worst_sh = 0.0, worst_tr = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const TorusPoint q(rng.uniform(), rng.uniform());
    worst_sh = std::max(worst_sh, torus_distance(apply_map(sh, inverse_map(sh, q)), q));
    worst_tr = std::max(worst_tr, torus_distance(apply_map(tr, inverse_map(tr, q)), q));
  }
  CHECK(worst_sh < 1e-10);
  CHECK(worst_tr < 1e-10);
}

TEST_CASE("inverted spec swaps apply and inverse") {
  const auto sh = MapSpec::shear_pair(kA, fixtures::test_shears(), 0.05);
  const auto inv = sh.inverse();
  CHECK(inv.inverted());
  CHECK(inv.inverse() == sh);
  RngStream rng(13);
  for (int i = 0; i < 100; ++i) {
    const TorusPoint p(rng.uniform(), rng.uniform());
    CHECK(torus_distance(apply_map(inv, apply_map(sh, p)), p) < 1e-12);
    const RealMat2 prod = derivative(inv, apply_map(sh, p)) * derivative(sh, p);
    CHECK((prod + RealMat2::identity() * -1.0).max_abs_entry() < 1e-12);
  }
}

TEST_CASE("shear derivative matches central differences and has unit determinant") {
  const auto sh = MapSpec::shear_pair(kA, fixtures::test_shears(), 0.05);
  const double h = 1e-6;
  RngStream rng(14);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{rng.uniform(), rng.uniform()};
    const RealMat2 d = derivative_lifted(sh, p);
    const Vec2 dx = (apply_lifted(sh, p + Vec2{h, 0}) - apply_lifted(sh, p - Vec2{h, 0})) * (0.5 / h);
    const Vec2 dy = (apply_lifted(sh, p + Vec2{0, h}) - apply_lifted(sh, p - Vec2{0, h})) * (0.5 / h);
    CHECK(std::abs(d.a - dx.x) < 1e-7);
    CHECK(std::abs(d.c - dx.y) < 1e-7);
    CHECK(std::abs(d.b - dy.x) < 1e-7);
    CHECK(std::abs(d.d - dy.y) < 1e-7);
    CHECK(std::abs(d.det() - 1.0) < 1e-12);
  }
}

TEST_CASE("rational points move exactly") {
  const RationalPoint p{1, 2, 5};
  CHECK(apply_exact(kA, p) == RationalPoint{4, 3, 5});
  CHECK(normalized({-1, 7, 5}) == RationalPoint{4, 2, 5});
}

TEST_CASE("driving measure validation") {
  CHECK_THROWS_AS(DrivingMeasure({{0, 0.5}, {1, 0.4}}), InvalidArgument);
  CHECK_THROWS_AS(DrivingMeasure({{0, 0.5}, {0, 0.5}}), InvalidArgument);
  CHECK_THROWS_AS(DrivingMeasure({{0, 1.0}, {1, 0.0}}), InvalidArgument);
  const Family fam = fixtures::linear_ab();
  CHECK_THROWS_AS(DrivingMeasure({{0, 0.5}, {2, 0.5}}).check_family(fam), InvalidArgument);
}

TEST_CASE("sample_word is deterministic with correct frequencies") {
  const auto dirac = sample_word(DrivingMeasure::dirac(1), 100, 5);
  for (auto e : dirac.entries) CHECK(e == 1);
  const auto nu = DrivingMeasure::uniform(2);
  const auto w1 = sample_word(nu, 1000000, 42);
  const auto w2 = sample_word(nu, 1000000, 42);
  CHECK(w1.entries == w2.entries);
  CHECK(w1.seed == 42);
  double ones = 0;
  for (auto e : w1.entries) ones += static_cast<double>(e);
  CHECK(std::abs(ones / 1e6 - 0.5) < 0.002);
  CHECK(sample_word(nu, 1000, 43).entries != std::vector<std::size_t>(w1.entries.begin(), w1.entries.begin() + 1000));
}

TEST_CASE("cocycle derivative") {
  const Family lin = fixtures::linear_ab();
  const auto w = sample_word(DrivingMeasure::uniform(2), 40, 7);
  const TorusPoint x(0.123, 0.456);

  const auto id = cocycle_derivative(lin, w, x, 0);
  CHECK(id.mat == RealMat2::identity());
  CHECK(id.log_scale == 0.0);

  RealMat2 direct = RealMat2::identity();
  for (std::size_t k = 0; k < 20; ++k) direct = lin[w[k]].linear_part().to_real() * direct;
  const RealMat2 rec = cocycle_derivative(lin, w, x, 20).unscaled();
  const double scale = direct.max_abs_entry();
  CHECK((rec + direct * -1.0).max_abs_entry() / scale < 1e-10);

  const Family sh = fixtures::shear_ab(0.05);
  const std::size_t a = 13, b = 17;
  const auto full = cocycle_derivative(sh, w, x, a + b);
  const auto first = cocycle_derivative(sh, w, x, a);
  const auto xa = orbit(sh, w, x, a).back();
  const auto second = cocycle_derivative(sh, w, xa, b, a);
  const auto composed = second.after(first);
  const RealMat2 diff = full.mat * std::exp(full.log_scale - composed.log_scale) + composed.mat * -1.0;
  CHECK(diff.max_abs_entry() < 1e-9);

  CHECK(std::abs(std::log(opnorm(full.unscaled())) - full.log_opnorm()) < 1e-12);
  CHECK(std::abs(opnorm(full.mat) - 1.0) < 1e-12);
  CHECK_THROWS_AS(cocycle_derivative(sh, w, x, 41), OutOfRange);
}

TEST_CASE("scaled composition survives very long words") {
  const Family fam{MapSpec::linear(kA)};
  const auto w = constant_word(0, 100000);
  const auto d = cocycle_derivative(fam, w, {0.3, 0.1}, 100000);
  CHECK(std::isfinite(d.log_scale));
  CHECK(std::abs(d.log_opnorm() / 1e5 - fixtures::kLogGoldenSq) < 1e-9);
}
