#include <doctest.h>

#include <cmath>
#include <random>

#include "pw/perturb.hpp"
#include "test_util.hpp"

using namespace pw;
using namespace testutil;

TEST_CASE("zero_set marks exactly the small-amplitude cells") {
  const Grid g = Grid::make(-20, 120, 4096);
  const WaveFunction psi = bump_state(g, 0, 1);
  const ZeroSetMask mask = zero_set(psi, 0.0);
  for (int j = 0; j < g.n; ++j) {
    const double x = g.x(j);
    if (x < -0.001 || x > 1.001)
      CHECK(mask.mask[j]);
    else if (x > 0.01 && x < 0.99)
      CHECK(!mask.mask[j]);
  }

  // strictly positive state: empty mask; zero state: full mask
  std::vector<cdouble> ones(g.n, cdouble{1, 0});
  CHECK(zero_set(WaveFunction(g, std::move(ones)), 0.0).count() == 0);
  CHECK(zero_set(WaveFunction::zero(g), 0.0).count() ==
        static_cast<std::size_t>(g.n));
  CHECK_THROWS_AS(zero_set(psi, -1.0), std::invalid_argument);
}

TEST_CASE("build_theta is unit-normalized and lives exactly on the mask") {
  const Grid g = Grid::make(-8, 8, 1024);
  const WaveFunction psi = bump_state(g, -1, 1);
  const ZeroSetMask mask = zero_set(psi, 0.0);
  PerturbationSpec spec;
  spec.envelope_center = 4.0;
  spec.envelope_width = 1.0;
  const WaveFunction theta = build_theta(mask, spec);
  CHECK(std::abs(norm2(theta) - 1.0) <= 1e-10);
  for (int j = 0; j < g.n; ++j)
    if (!mask.mask[j]) CHECK(theta.samples()[j] == cdouble{0, 0});
  // disjoint supports: pointwise product vanishes
  for (int j = 0; j < g.n; ++j)
    CHECK(theta.samples()[j] * psi.samples()[j] == cdouble{0, 0});

  ZeroSetMask empty;
  empty.grid = g;
  empty.mask.assign(g.n, 0);
  CHECK_THROWS_AS(build_theta(empty, spec), std::invalid_argument);
}

TEST_CASE("theta keeps the particle position inside its support") {
  const Grid g = Grid::make(-20, 120, 8192);
  const WaveFunction psi = bump_state(g, 0, 1);
  PerturbationSpec spec;
  spec.envelope_center = 2.0;
  spec.envelope_width = 5.0;
  const WaveFunction theta = build_theta(zero_set(psi, 0.0), spec);
  CHECK(std::abs(theta.value_at(2.0)) > 0.0);
}

TEST_CASE("perturb satisfies the three construction postconditions") {
  const Grid g = Grid::make(-8, 8, 1024);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(psi, spec);
  REQUIRE(!pert.already_full_support);

  const GradedDensityProfile prof(pert.state);
  // unit graded norm up to truncation and quadrature roundoff
  CHECK(hclose(prof.total(), HyperReal(1.0), 1e-10));
  // infinitesimal distance with leading exponent q
  const HyperReal d = l2_distance(GradedWaveFunction::pure(psi), pert.state);
  CHECK(d.classify() == HyperReal::Magnitude::infinitesimal);
  CHECK(d.leading_exponent() == Rat(1));
  // full support at every grid point
  const HyperReal zero(0.0);
  for (int j = 0; j < g.n; ++j) CHECK(prof.density_at_node(j) > zero);
}

TEST_CASE("higher grades push the distance to higher order") {
  const Grid g = Grid::make(-8, 8, 512);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  Rat prev(0);
  for (const Rat q : {Rat(1), Rat(3, 2), Rat(2)}) {
    spec.grade = q;
    const HyperReal d =
        l2_distance(GradedWaveFunction::pure(psi), perturb(psi, spec).state);
    CHECK(d.leading_exponent() == q);
    CHECK(d.leading_exponent() > prev);
    prev = d.leading_exponent();
  }
}

TEST_CASE("degenerate inputs are surfaced, not faked") {
  const Grid g = Grid::make(-8, 8, 256);
  // full support already: single component, flag set
  const WaveFunction gauss = gaussian_state(g, 0, 2.0);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation full = perturb(gauss, spec);
  CHECK(full.already_full_support);
  CHECK(full.state.components().size() == 1);

  // grade beyond the cap: theta truncates away
  spec.grade = Rat(5);
  const Perturbation trunc = perturb(bump_state(g, -1, 1), spec);
  CHECK(trunc.grade_truncated);
  CHECK(trunc.state.components().size() == 1);

  // non-normalized input rejected
  std::vector<cdouble> big(g.n, cdouble{1, 0});
  CHECK_THROWS_AS(perturb(WaveFunction(g, std::move(big)), spec),
                  std::invalid_argument);
}

TEST_CASE("lemma2 gap stays below twice the distance") {
  const Grid g = Grid::make(-8, 8, 512);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(psi, spec);
  const auto base = GradedWaveFunction::pure(psi);

  // whole grid: both integrals are 1, the gap is ~0
  const auto whole = lemma2_gap(base, pert.state, IntervalUnion::whole(g));
  CHECK(whole.gap <= whole.bound);
  CHECK(hclose(whole.gap, HyperReal(0.0), 1e-10));

  // identical states: exact zero gap
  const auto same = lemma2_gap(base, base, IntervalUnion({{-2.0, 2.0}}));
  CHECK(same.gap.is_zero());

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const auto r = lemma2_gap(base, pert.state, IntervalUnion({{a, b}}));
    CHECK(r.gap <= r.bound);
  }
}
