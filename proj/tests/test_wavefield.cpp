#include <doctest.h>

#include <cmath>
#include <random>

#include "pw/perturb.hpp"
#include "pw/wavefield.hpp"
#include "test_util.hpp"

using namespace pw;
using namespace testutil;

TEST_CASE("grid validation and cell lookup") {
  CHECK_THROWS_AS(Grid::make(1.0, 0.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make(0.0, 1.0, 8), std::invalid_argument);
  const Grid g = Grid::make(0.0, 1.0, 16);
  CHECK(g.dx() == doctest::Approx(1.0 / 16));
  CHECK(g.cell(0.0) == 0);
  CHECK(g.cell(0.99) == 15);
  CHECK(g.cell(2.0) == 15);  // clamped
}

TEST_CASE("norm2 against analytic integrals") {
  const Grid g = Grid::make(-20, 20, 2048);
  CHECK(norm2(gaussian_state(g, 0, 1)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(norm2(WaveFunction::zero(g)) == 0.0);

  const Grid gb = Grid::make(-2, 3, 512);
  std::vector<cdouble> s(gb.n, cdouble{0, 0});
  for (int j = 0; j < gb.n; ++j)
    if (gb.x(j) >= 0.0 && gb.x(j) <= 1.0) s[j] = 1.0;
  const double n2 = norm2(WaveFunction(gb, std::move(s)));
  CHECK(std::abs(n2 - 1.0) <= gb.dx() + 1e-12);
}

TEST_CASE("wavefunction rejects non-finite samples") {
  const Grid g = Grid::make(0, 1, 16);
  std::vector<cdouble> s(16, cdouble{0, 0});
  s[3] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(WaveFunction(g, std::move(s)), std::invalid_argument);
}

TEST_CASE("graded density expands |psi~|^2 in eps orders") {
  const Grid g = Grid::make(-2, 2, 64);
  std::vector<cdouble> ones(g.n, cdouble{1, 0});
  const auto flat = GradedWaveFunction::pure(
      WaveFunction(g, std::move(ones)));
  CHECK(graded_density(flat, 0.5) == HyperReal(1.0));

  // psi zero at x, theta = c there: density = c^2 eps^2
  std::vector<cdouble> psi(g.n, cdouble{0, 0}), theta(g.n, cdouble{0, 0});
  const int j = g.cell(0.5);
  theta[j] = theta[j + 1] = 3.0;
  psi[4] = 1.0;
  std::vector<GradedWaveFunction::Component> comps;
  comps.push_back({Rat(0), sqrt(HyperReal(1.0) - HyperReal::epsilon(Rat(2))),
                   WaveFunction(g, std::move(psi))});
  comps.push_back({Rat(1), HyperReal(1.0), WaveFunction(g, std::move(theta))});
  const GradedWaveFunction gwf(std::move(comps));
  const HyperReal d = graded_density(gwf, g.x(j));
  CHECK(d.leading_exponent() == Rat(2));
  CHECK(d.leading_coefficient() == doctest::Approx(9.0));
}

TEST_CASE("integral_over: normalization, empty set, additivity") {
  const Grid g = Grid::make(-8, 8, 1024);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, 1));
  const HyperReal whole = integral_over(state, IntervalUnion::whole(g));
  CHECK(whole.standard_part() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(integral_over(state, IntervalUnion{}).is_zero());

  // finite additivity over disjoint unions, exact at grid resolution
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  const GradedDensityProfile prof(state);
  for (int trial = 0; trial < 50; ++trial) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    if (b >= c) continue;  // keep them disjoint
    const HyperReal left = prof.integral(IntervalUnion({{a, b}}));
    const HyperReal right = prof.integral(IntervalUnion({{c, d}}));
    const HyperReal both = prof.integral(IntervalUnion({{a, b}, {c, d}}));
    CHECK(hclose(both, left + right, 1e-14));
  }
}

TEST_CASE("cdf endpoints and monotonicity under hyperreal comparison") {
  const Grid g = Grid::make(-8, 8, 512);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(psi, spec);
  const GradedDensityProfile prof(pert.state);

  CHECK(prof.cdf(g.x_min).is_zero());
  CHECK(hclose(prof.cdf(g.x_max), prof.total(), 1e-14));

  HyperReal prev = prof.cdf(g.x_min);
  for (int j = 1; j < g.n; j += 7) {
    const HyperReal cur = prof.cdf(g.x(j));
    CHECK(!(cur < prev));
    prev = cur;
  }
}

TEST_CASE("l2_distance: identity, perturbation order, Pythagoras") {
  const Grid g = Grid::make(-8, 8, 512);
  const auto base = GradedWaveFunction::pure(bump_state(g, -1, 1));
  CHECK(l2_distance(base, base).is_zero());

  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(bump_state(g, -1, 1), spec);
  const HyperReal d = l2_distance(base, pert.state);
  CHECK(d.leading_exponent() == Rat(1));

  // disjointly supported unit functions: distance sqrt(2)
  const auto f1 = GradedWaveFunction::pure(normalized(box_state(g, -4, -2)));
  const auto f2 = GradedWaveFunction::pure(normalized(box_state(g, 2, 4)));
  CHECK(l2_distance(f1, f2).standard_part() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("l2_distance satisfies the triangle inequality on random triples") {
  const Grid g = Grid::make(-8, 8, 256);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = GradedWaveFunction::pure(gaussian_state(g, u(rng), 0.8));
    const auto b = GradedWaveFunction::pure(gaussian_state(g, u(rng), 1.1));
    const auto c = GradedWaveFunction::pure(gaussian_state(g, u(rng), 0.6));
    const HyperReal lhs = l2_distance(a, c);
    const HyperReal rhs = l2_distance(a, b) + l2_distance(b, c);
    CHECK(!(lhs > rhs + HyperReal(1e-12)));
  }
}

TEST_CASE("sample_initial_position inverts the density") {
  const Grid g = Grid::make(-8, 8, 2048);

  // median of a symmetric density
  const WaveFunction sym = gaussian_state(g, 1.0, 0.7);
  CHECK(std::abs(sample_initial_position(sym, 0.5) - 1.0) <= g.dx());

  // uniform density on [0,1]
  const WaveFunction uni = normalized(box_state(g, 0, 1));
  CHECK(std::abs(sample_initial_position(uni, 0.25) - 0.25) <= 2 * g.dx());

  // standard Gaussian: u = Phi(1) maps to x = 1 (error-function oracle)
  const WaveFunction gauss = gaussian_state(g, 0.0, 1.0);
  const double u_at_1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(sample_initial_position(gauss, u_at_1) - 1.0) <= 0.01);

  CHECK_THROWS_AS(sample_initial_position(gauss, 1.5), std::invalid_argument);
}

TEST_CASE("density profile tail and cdf are consistent") {
  const Grid g = Grid::make(-8, 8, 512);
  const DensityProfile prof(gaussian_state(g, 0.3, 0.9));
  for (double x : {-5.0, -1.0, 0.3, 2.0, 6.0})
    CHECK(prof.cdf(x) + prof.tail(x) == doctest::Approx(prof.total()).epsilon(1e-12));
  // prefix inversion keeps precision on the left half, suffix on the right
  for (double x : {-5.0, -1.0, 0.3})
    CHECK(prof.quantile(prof.cdf(x)) == doctest::Approx(x).epsilon(1e-9));
  for (double x : {0.3, 2.0, 6.0})
    CHECK(prof.quantile_by_tail(prof.tail(x)) == doctest::Approx(x).epsilon(1e-9));
}

TEST_CASE("graded components validate shape") {
  const Grid g = Grid::make(0, 1, 16);
  std::vector<GradedWaveFunction::Component> comps;
  comps.push_back({Rat(1), HyperReal(1.0), WaveFunction::zero(g)});
  comps.push_back({Rat(1), HyperReal(1.0), WaveFunction::zero(g)});
  CHECK_THROWS_AS(GradedWaveFunction(std::move(comps)), std::invalid_argument);

  std::vector<GradedWaveFunction::Component> neg;
  neg.push_back({Rat(-1), HyperReal(1.0), WaveFunction::zero(g)});
  CHECK_THROWS_AS(GradedWaveFunction(std::move(neg)), std::invalid_argument);
}

TEST_CASE("interval unions validate disjointness") {
  CHECK_THROWS_AS(IntervalUnion({{0.0, 2.0}, {1.0, 3.0}}), std::invalid_argument);
  CHECK_THROWS_AS(IntervalUnion({{2.0, 1.0}}), std::invalid_argument);
  const IntervalUnion u({{3.0, 4.0}, {0.0, 1.0}});
  CHECK(u.intervals().front().lo == 0.0);  // sorted
}
