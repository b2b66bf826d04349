#include <cmath>
#include <variant>

#include "doctest.h"
#include "ergolab/config.hpp"
#include "fixtures.hpp"

using namespace ergolab;

namespace {

const char* kShear = R"(
; shear family
[experiment]
name = shear
seeds = 3, 4

[map:A]
linear = 2 1 1 1
perturbation = shear
epsilon = 0.02
psi1 = 1 0.15 0 | 2 0.03 0.7
psi2 = 1 0.1 0.3

[map:B]
linear = 1 1 1 2
perturbation = shear
epsilon = 0.02
psi1 = 1 0.15 0 | 2 0.03 0.7
psi2 = 1 0.1 0.3

[measure]
atoms = A 0.25, B 0.75

[exponents]
steps = 5000

[cones]
grid = 100
)";

}  // namespace

TEST_CASE("parsing builds the family, measure and seeds") {
  const auto cfg = ExperimentConfig::parse(kShear, "exponents");
  CHECK(cfg.name() == "shear");
  CHECK(cfg.seeds() == std::vector<std::uint64_t>{3, 4});
  REQUIRE(cfg.family().size() == 2);
  CHECK(cfg.family()[0] == MapSpec::shear_pair(fixtures::kA, fixtures::test_shears(), 0.02));
  CHECK(cfg.family()[1] == MapSpec::shear_pair(fixtures::kB, fixtures::test_shears(), 0.02));
  CHECK(cfg.map_names() == std::vector<std::string>{"A", "B"});
  REQUIRE(cfg.measure().atoms().size() == 2);
  CHECK(cfg.measure().atoms()[1].map_id == 1);
  CHECK(cfg.measure().atoms()[1].probability == 0.75);
  CHECK(cfg.get_size("exponents", "steps") == 5000);
  CHECK(cfg.get_size("exponents", "batches") == 20);
  CHECK(cfg.get_size("experiment", "burn_in") == 1000);
}

TEST_CASE("only the selected command section is resolved") {
  const auto cfg = ExperimentConfig::parse(kShear, "exponents");
  std::vector<std::string> names;
  for (const auto& s : cfg.sections()) names.push_back(s.name);
  CHECK(names == std::vector<std::string>{"experiment", "map:A", "map:B", "measure", "exponents"});
  CHECK_THROWS_AS(cfg.get("cones", "grid"), ConfigError);
  CHECK(ExperimentConfig::parse(kShear, "cones").get_size("cones", "grid") == 100);
}

TEST_CASE("hash depends on resolved content, not on layout") {
  const std::string a = "[experiment]\nseeds = 1\n[map:A]\nlinear = 2 1 1 1\n[exponents]\nsteps = 2000\n";
  const std::string b = "# comment\n[exponents]\nsteps=2000\n\n[map:A]\nlinear = 2 1 1 1\n[experiment]\nseeds = 1\nburn_in = 1000\n";
  const auto ca = ExperimentConfig::parse(a, "exponents"), cb = ExperimentConfig::parse(b, "exponents");
  CHECK(ca.canonical_text() == cb.canonical_text());
  CHECK(ca.hash() == cb.hash());
  CHECK(ca.hash().size() == 16);
  auto cc = ca;
  cc.override_seeds({9});
  CHECK(cc.hash() != ca.hash());
  CHECK(cc.get("experiment", "seeds") == "9");
  CHECK(ExperimentConfig::parse(a + "batches = 10\n", "exponents").hash() != ca.hash());
}

TEST_CASE("integers may be written in exponent form") {
  const auto cfg = ExperimentConfig::parse("[map:A]\nlinear = 2 1 1 1\n[trichotomy]\nsamples = 1e6\n", "trichotomy");
  CHECK(cfg.get_size("trichotomy", "samples") == 1000000);
  CHECK_THROWS_AS(ExperimentConfig::parse("[map:A]\nlinear = 2 1 1 1\n[trichotomy]\nsamples = 2.5\n", "trichotomy")
                      .get_size("trichotomy", "samples"),
                  ConfigError);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("default measure is uniform in file order") {
  const auto cfg = ExperimentConfig::parse("[map:X]\nlinear = 1 1 1 2\n[map:Y]\nlinear = 2 1 1 1\n", "exponents");
  REQUIRE(cfg.measure().atoms().size() == 2);
  CHECK(cfg.measure().atoms()[0].map_id == 0);
  CHECK(cfg.measure().atoms()[0].probability == 0.5);
  CHECK(cfg.family()[0].linear_part() == fixtures::kB);
}

TEST_CASE("start points") {
  const std::string maps = "[map:A]\nlinear = 2 1 1 1\n";
  const auto gen = ExperimentConfig::parse("[experiment]\nstart = 0.25 0.75\n" + maps, "trichotomy");
  REQUIRE(std::holds_alternative<TorusPoint>(gen.start()));
  CHECK(gen.start_point().x() == 0.25);
  const auto tor = ExperimentConfig::parse("[experiment]\nstart = 1/5 2/5\n" + maps, "trichotomy");
  const StartPoint ts = tor.start();
  const auto* r = std::get_if<RationalPoint>(&ts);
  REQUIRE(r != nullptr);
  CHECK(r->den == 5);
  CHECK(r->num_x == 1);
  CHECK(r->num_y == 2);
  const auto mixed = ExperimentConfig::parse("[experiment]\nstart = 1/2 2/3\n" + maps, "trichotomy");
  CHECK(std::get<RationalPoint>(mixed.start()).den == 6);
  CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nstart = 1/0 1\n" + maps, "trichotomy").start(), ConfigError);
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("1,2, 3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(parse_seed_list("18446744073709551615") == std::vector<std::uint64_t>{18446744073709551615ULL});
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,-2"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("18446744073709551616"), ConfigError);
}

TEST_CASE("malformed configs are rejected") {
  const std::string maps = "[map:A]\nlinear = 2 1 1 1\n";
  for (const std::string& bad : std::vector<std::string>{
           "[experiment]\nbogus = 1\n" + maps,
           "[nonsense]\n" + maps,
           "stray = 1\n" + maps,
           maps + "[exponents]\nsteps = ten\n",
           maps + "linear = 1 0 0 1\n",
           "[map:A]\nlinear = 2 1 1\n",
           "[map:A]\nlinear = 2 0 0 1\n",
           "[map:A]\n",
           "[map:A]\nlinear = 2 1 1 1\nperturbation = wobble\n",
           "[map:A]\nlinear = 2 1 1 1\nperturbation = shear\nepsilon = 5\npsi1 = 1 1 0\npsi2 = 1 1 0\n",
           maps + "[measure]\natoms = A 0.5\n",
           maps + "[measure]\natoms = Z 1\n",
           maps + "[experiment]\nseeds = x\n",
           maps + "[exponents]\nbackward = maybe\n",
           maps + "[exponents]\ntv_shifts = 0.1 x\n",
           "[experiment]\nseeds = 1\n",
       }) {
    CAPTURE(bad);
    CHECK_THROWS_AS(ExperimentConfig::parse(bad, "exponents"), ConfigError);
  }
  CHECK_THROWS_AS(ExperimentConfig::parse(maps, "bogus"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/ergolab.ini", "exponents"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(maps + "[trichotomy]\nexpect_verdict = Chaotic\n", "trichotomy"),
                  ConfigError);
}

TEST_CASE("mixed-cocycle needs no maps") {
  const auto cfg = ExperimentConfig::parse("[mixed-cocycle]\nt_grid = 0 0.5\n", "mixed-cocycle");
  CHECK(cfg.family().empty());
  CHECK_FALSE(cfg.has_measure());
  CHECK(cfg.get_doubles("mixed-cocycle", "t_grid") == std::vector<double>{0.0, 0.5});
}

TEST_CASE("epsilon override rebuilds every perturbed map") {
  const auto cfg = ExperimentConfig::parse(kShear, "cones");
  const auto fam = cfg.with_epsilon(0.05);
  REQUIRE(fam.size() == 2);
  CHECK(fam[0] == MapSpec::shear_pair(fixtures::kA, fixtures::test_shears(), 0.05));
  CHECK_THROWS_AS(cfg.with_epsilon(10.0), InvalidArgument);
}
