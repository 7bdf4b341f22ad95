#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pw/dynamics.hpp"
#include "test_util.hpp"

using namespace pw;
using namespace testutil;

namespace {
const PhysicsParams kP;

GradedWaveFunction mini_invader_state(const Grid& g, PerturbationSpec* spec_out) {
  PerturbationSpec spec;
  spec.envelope_center = 1.5;
  spec.envelope_width = 2.0;
  if (spec_out) *spec_out = spec;
  return perturb(bump_state(g, 0, 1), spec).state;
}

}  // namespace

TEST_CASE("velocity: real states, plane waves, spreading Gaussian") {
  const Grid g = Grid::make(-8, 8, 512);

  // zero phase: velocity vanishes (up to spectral-derivative roundoff)
  const auto real_state = GradedWaveFunction::pure(bump_state(g, -1, 1));
  CHECK(std::abs(velocity(real_state, 0.3, kP).standard_part()) <= 1e-12);

  // plane wave e^{ikx}: v = hbar k / m
  const double k = 2.0 * std::numbers::pi * 16 / (g.x_max - g.x_min);
  std::vector<cdouble> pw(g.n);
  for (int j = 0; j < g.n; ++j) pw[j] = std::polar(1.0, k * g.x(j));
  const auto plane = GradedWaveFunction::pure(WaveFunction(g, std::move(pw)));
  PhysicsParams heavy;
  heavy.mass = 2.0;
  CHECK(velocity(plane, 1.2, heavy).standard_part() ==
        doctest::Approx(k / 2.0).epsilon(1e-8));

  // spreading free Gaussian: v(x,t) = x a^2 t / (1 + a^2 t^2), a = 1/(2 s0^2)
  const Grid gg = Grid::make(-20, 20, 2048);
  const WaveFunction psi = gaussian_state(gg, 0, 1);
  const WaveFunction wt = split_step(psi, FreePotential{}, kP, 1e-3, 700);
  const double t = 0.7, a = 0.5;
  const auto state_t = GradedWaveFunction::pure(wt);
  for (double x : {0.5, -1.3, 2.0}) {
    const double expect = x * a * a * t / (1.0 + a * a * t * t);
    CHECK(std::abs(velocity(state_t, x, kP).standard_part() - expect) <= 1e-3);
  }
}

TEST_CASE("velocity throws at an all-orders node") {
  const Grid g = Grid::make(-8, 8, 256);
  const auto state = GradedWaveFunction::pure(bump_state(g, -1, 1));
  CHECK_THROWS_AS(velocity(state, 5.0, kP), NodeError);
}

TEST_CASE("guidance: stationary state gives a constant trajectory") {
  const Grid g = Grid::make(-20, 20, 1024);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, std::sqrt(0.5)));
  const auto run = integrate_guidance(state, HarmonicPotential{1.0}, kP, 0.4,
                                      lab::make_times(1.0, 101));
  REQUIRE(run.status == RunStatus::ok);
  for (double x : run.trajectory.positions) CHECK(std::abs(x - 0.4) <= 1e-6);
}

TEST_CASE("guidance follows the closed-form free-Gaussian trajectory") {
  const Grid g = Grid::make(-20, 20, 4096);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, 1));
  const auto run = integrate_guidance(state, FreePotential{}, kP, 1.0,
                                      lab::make_times(2.0, 201));
  REQUIRE(run.status == RunStatus::ok);
  CHECK(run.support_ok);
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const double expect = free_width(1.0, run.trajectory.times[i]);
    CHECK(std::abs(run.trajectory.positions[i] - expect) <= 1e-3);
  }
}

TEST_CASE("guidance reports a node start") {
  const Grid g = Grid::make(-10, 10, 512);
  const auto state = GradedWaveFunction::pure(bump_state(g, 0, 1));
  const auto run = integrate_guidance(state, FreePotential{}, kP, 5.0,
                                      lab::make_times(0.5, 11));
  CHECK(run.status == RunStatus::node_error);
}

TEST_CASE("guidance stops at the grid edge under a non-free potential") {
  const Grid g = Grid::make(-4, 4, 256);
  // strong rightward kick toward the edge
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 2.0, 0.4, 8.0));
  const auto run = integrate_guidance(state, HarmonicPotential{0.1}, kP, 2.5,
                                      lab::make_times(2.0, 101));
  CHECK(run.status == RunStatus::left_grid);
  CHECK(run.trajectory.times.size() < 101);
}

TEST_CASE("graded guidance with a far perturbation matches the standard run") {
  const Grid g = Grid::make(-15, 15, 1024);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  PerturbationSpec spec;
  spec.envelope_center = 12.0;
  spec.envelope_width = 0.5;
  spec.zero_tol = 1e-14;
  const auto graded = perturb(psi, spec).state;
  REQUIRE(graded.components().size() == 2);
  const auto times = lab::make_times(1.0, 51);
  const auto run_g = integrate_guidance(graded, FreePotential{}, kP, 0.5, times);
  const auto run_s = integrate_guidance(GradedWaveFunction::pure(psi),
                                        FreePotential{}, kP, 0.5, times);
  REQUIRE(run_g.status == RunStatus::ok);
  CHECK(run_g.trajectory.mode == TrajectoryMode::graded);
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(std::abs(run_g.trajectory.positions[i] -
                   run_s.trajectory.positions[i]) <= 1e-9);
}

TEST_CASE("cdf trajectory: start point, median ride, integrator agreement") {
  const Grid g = Grid::make(-20, 20, 4096);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, 1));
  const auto times = lab::make_times(2.0, 101);

  const auto median = cdf_trajectory(state, FreePotential{}, kP, 0.0, times);
  REQUIRE(median.status == RunStatus::ok);
  CHECK(median.trajectory.positions.front() == 0.0);
  for (double x : median.trajectory.positions) CHECK(std::abs(x) <= 1e-6);

  const auto quant = cdf_trajectory(state, FreePotential{}, kP, 1.0, times);
  const auto guid = integrate_guidance(state, FreePotential{}, kP, 1.0, times);
  REQUIRE(quant.status == RunStatus::ok);
  REQUIRE(guid.status == RunStatus::ok);
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(std::abs(quant.trajectory.positions[i] -
                   guid.trajectory.positions[i]) <= 1e-3);
}

TEST_CASE("graded cdf trajectory carries hyperreal corrections") {
  const Grid g = Grid::make(-15, 15, 1024);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  PerturbationSpec spec;
  spec.envelope_center = 12.0;
  spec.envelope_width = 0.5;
  spec.zero_tol = 1e-14;
  const auto graded = perturb(psi, spec).state;
  const auto run =
      cdf_trajectory(graded, FreePotential{}, kP, 0.5, lab::make_times(1.0, 21));
  REQUIRE(run.status == RunStatus::ok);
  CHECK(run.trajectory.mode == TrajectoryMode::graded);
  CHECK(run.trajectory.graded_positions.size() == run.trajectory.times.size());
  // the correction rides above order zero
  for (const auto& h : run.trajectory.graded_positions) {
    REQUIRE(!h.is_zero());
    CHECK(h.leading_exponent() == Rat(0));
  }
}

TEST_CASE("equivariance residual: by construction, by budget, by corruption") {
  const Grid g = Grid::make(-20, 20, 4096);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, 1));
  const auto times = lab::make_times(2.0, 101);

  const auto quant = cdf_trajectory(state, FreePotential{}, kP, 0.8, times);
  CHECK(equivariance_residual(state, FreePotential{}, kP, quant) <= 1e-6);

  auto guid = integrate_guidance(state, FreePotential{}, kP, 0.8, times);
  CHECK(equivariance_residual(state, FreePotential{}, kP, guid) <= 1e-3);

  for (auto& x : guid.trajectory.positions) x += 0.1;
  CHECK(equivariance_residual(state, FreePotential{}, kP, guid) > 5e-3);
}

TEST_CASE("order preservation on random start pairs") {
  const Grid g = Grid::make(-20, 20, 2048);
  const auto state = GradedWaveFunction::pure(gaussian_state(g, 0, 1));
  const auto times = lab::make_times(1.5, 76);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 1.8);
  std::vector<double> x0s;
  for (int i = 0; i < 5; ++i) {
    const double a = u(rng);
    x0s.push_back(a);
    x0s.push_back(a + 0.1 + 0.4 * (rng() % 100) / 100.0);
  }
  const auto runs = integrate_guidance_batch(state, FreePotential{}, kP, x0s, times);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(runs[2 * i].status == RunStatus::ok);
    for (std::size_t t = 0; t < times.size(); ++t)
      CHECK(runs[2 * i].trajectory.positions[t] <
            runs[2 * i + 1].trajectory.positions[t]);
  }
}

TEST_CASE("theorem 3: refusal outside support and the theta -> 0 limit") {
  const Grid g = Grid::make(-15, 15, 1024);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  PerturbationSpec spec;
  spec.envelope_center = 12.0;
  spec.envelope_width = 0.05;
  spec.zero_tol = 1e-14;
  CHECK_THROWS_AS(theorem3_check(psi, spec, FreePotential{}, kP, 12.5,
                                 lab::make_times(1.0, 21), {1e-2}),
                  std::invalid_argument);

  // grade beyond the cap: identical dynamics, d = 0 exactly
  PerturbationSpec degenerate = spec;
  degenerate.grade = Rat(5);
  const auto rep = theorem3_check(psi, degenerate, FreePotential{}, kP, 0.5,
                                  lab::make_times(1.0, 21), {1e-2, 1e-3});
  for (const auto& [e, d] : rep.d_by_eps) CHECK(d == 0.0);
  CHECK(rep.monotone_nonincreasing);
}

TEST_CASE("theorem 3 sweep shrinks with eps") {
  const Grid g = Grid::make(-15, 15, 2048);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  PerturbationSpec spec;
  spec.envelope_center = 12.0;
  spec.envelope_width = 0.05;
  spec.zero_tol = 1e-14;
  const auto rep = theorem3_check(psi, spec, FreePotential{}, kP, 0.5,
                                  lab::make_times(1.0, 101), {1e-1, 1e-2, 1e-3});
  CHECK(rep.monotone_nonincreasing);
  CHECK(rep.d_by_eps.front().second > rep.d_by_eps.back().second);
  CHECK(rep.d_smallest < 1e-3);
}

TEST_CASE("chirp transform agrees with the direct sum") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 37, m = 23;
  std::vector<cdouble> h(n);
  for (auto& v : h) v = {u(rng), u(rng)};
  const double theta0 = 0.3, dtheta = 0.0171;
  const auto got = detail::chirp_transform(h, theta0, dtheta, m);
  for (int k = 0; k < m; ++k) {
    cdouble direct{0, 0};
    for (int j = 0; j < n; ++j)
      direct += h[j] * std::polar(1.0, -(theta0 + k * dtheta) * j);
    CHECK(std::abs(got[k] - direct) <= 1e-10);
  }
}

TEST_CASE("far-field evaluation matches the direct propagator") {
  const Grid g = Grid::make(-10, 40, 1024);
  PerturbationSpec spec;
  const auto state = mini_invader_state(g, &spec);
  const double e = 1e-2;
  const detail::FreeEvolvedState far(state, e, kP);
  const WaveFunction inst = state.instantiate(e);
  for (const auto& [x, t] : std::vector<std::pair<double, double>>{
           {3.0, 0.3}, {12.0, 0.5}, {30.0, 0.5}, {20.0, 0.1}}) {
    const cdouble a = far.value(x, t);
    const cdouble b = free_propagator_eval(inst, x, t, kP);
    CHECK(std::abs(a - b) <= 1e-8 * (1.0 + std::abs(b)));
  }
}

TEST_CASE("tail table densities agree with the quadrature route") {
  const Grid g = Grid::make(-10, 40, 1024);
  const auto state = mini_invader_state(g, nullptr);
  const double e = 1e-2, t = 0.4;
  const detail::FreeEvolvedState far(state, e, kP);
  const auto table = far.tail_table(t, 5.0, 60.0, 4096);
  const int m = static_cast<int>(table.rho.size());
  REQUIRE(m >= 16);
  for (int k = 1; k <= 8; ++k) {
    const int i = k * m / 10;
    const double x = 5.0 + (i + 0.5) * table.dx;
    const double direct = far.density(x, t);
    CHECK(table.rho[i] == doctest::Approx(direct).epsilon(1e-5).scale(1e-14));
  }
}

TEST_CASE("invader run: monotone escape and conserved level") {
  const Grid g = Grid::make(-10, 40, 2048);
  lab::InitSpec init;
  init.kind = "bump";
  init.lo = 0;
  init.hi = 1;
  const WaveFunction psi = lab::make_initial(init, g);
  PerturbationSpec spec;
  spec.envelope_center = 2.0;
  spec.envelope_width = 2.0;

  const auto rep = invader_run(psi, spec, kP, 2.0, 0.5, {5e-2, 2e-3}, 26);
  REQUIRE(rep.per_eps.size() == 2);
  CHECK(rep.per_eps[0].trajectory.positions.front() ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep.per_eps[1].x_t1 > rep.per_eps[0].x_t1);
  for (const auto& r : rep.per_eps) CHECK(r.max_level_drift <= 1e-6);
  CHECK(rep.graded_level.classify() == HyperReal::Magnitude::infinitesimal);
  CHECK(rep.graded_level.leading_exponent() == Rat(2));

  // precondition violations
  CHECK_THROWS_AS(invader_run(psi, spec, kP, 0.5, 0.5, {1e-2}, 11),
                  std::invalid_argument);
}

TEST_CASE("reverse invader returns near the start") {
  const Grid g = Grid::make(-10, 40, 2048);
  lab::InitSpec init;
  init.kind = "bump";
  init.lo = 0;
  init.hi = 1;
  const WaveFunction psi = lab::make_initial(init, g);
  PerturbationSpec spec;
  spec.envelope_center = 2.0;
  spec.envelope_width = 2.0;
  const auto rep = invader_reverse_run(psi, spec, kP, 2.0, 0.5, 2e-3, 26);
  CHECK(std::abs(rep.x_return - 2.0) <= 2e-2);
  CHECK(rep.max_level_drift <= 1e-6);
}

TEST_CASE("concrete invader guidance moves strictly right") {
  const Grid g = Grid::make(-10, 40, 1024);
  PerturbationSpec spec;
  const auto state = mini_invader_state(g, &spec);
  const auto run = integrate_guidance(state, FreePotential{}, kP, 2.0,
                                      lab::make_times(0.5, 51), 1e-2);
  REQUIRE(run.status == RunStatus::ok);
  const auto& xs = run.trajectory.positions;
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] > xs[i - 1]);
}
