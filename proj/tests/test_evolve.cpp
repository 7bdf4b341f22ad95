#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pw/evolve.hpp"
#include "pw/perturb.hpp"
#include "test_util.hpp"

using namespace pw;
using namespace testutil;

namespace {
const PhysicsParams kP;
}

TEST_CASE("free Gaussian width follows the closed form") {
  const Grid g = Grid::make(-20, 20, 2048);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  WaveFunction wf = psi;
  for (int leg = 1; leg <= 2; ++leg) {
    wf = split_step(wf, FreePotential{}, kP, 1e-3, 1000);
    const double t = leg * 1.0;
    const DensityProfile prof(wf);
    double m2 = 0.0;
    for (int j = 0; j < g.n; ++j)
      m2 += g.x(j) * g.x(j) * prof.density(g.x(j)) * g.dx();
    const double width = std::sqrt(m2);
    CHECK(std::abs(width - free_width(1.0, t)) / free_width(1.0, t) <= 1e-4);
  }
}

TEST_CASE("harmonic ground state is stationary") {
  const Grid g = Grid::make(-20, 20, 2048);
  const double sg = std::sqrt(0.5);  // hbar/(2 m omega)
  const WaveFunction psi = gaussian_state(g, 0, sg);
  const WaveFunction after = split_step(psi, HarmonicPotential{1.0}, kP, 2.5e-4, 4000);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j)
    worst = std::max(worst, std::abs(std::norm(after.samples()[j]) -
                                     std::norm(psi.samples()[j])));
  CHECK(worst <= 1e-6);
}

TEST_CASE("unitarity of each split factor") {
  const Grid g = Grid::make(-20, 20, 1024);
  const WaveFunction psi = gaussian_state(g, -3, 0.8, 2.0);
  const double before = norm2(psi);
  for (const Potential& v :
       {Potential{FreePotential{}}, Potential{HarmonicPotential{2.0}}}) {
    const WaveFunction after = split_step(psi, v, kP, 1e-3, 1000);
    CHECK(std::abs(norm2(after) - before) <= 1e-10);
  }
}

TEST_CASE("linearity of the evolution") {
  const Grid g = Grid::make(-20, 20, 512);
  const WaveFunction a = gaussian_state(g, -2, 0.7);
  const WaveFunction b = gaussian_state(g, 3, 1.2, -1.0);
  const cdouble ca{0.3, 0.4}, cb{-0.8, 0.1};
  std::vector<cdouble> combo(g.n);
  for (int j = 0; j < g.n; ++j)
    combo[j] = ca * a.samples()[j] + cb * b.samples()[j];

  const Potential v = HarmonicPotential{1.0};
  const WaveFunction ea = split_step(a, v, kP, 1e-3, 50);
  const WaveFunction eb = split_step(b, v, kP, 1e-3, 50);
  const WaveFunction ec = split_step(WaveFunction(g, combo), v, kP, 1e-3, 50);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j)
    worst = std::max(worst, std::abs(ec.samples()[j] - ca * ea.samples()[j] -
                                     cb * eb.samples()[j]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("forward then backward returns the initial samples") {
  const Grid g = Grid::make(-20, 20, 512);
  const WaveFunction psi = gaussian_state(g, 1, 0.9, 1.5);
  const Potential v = HarmonicPotential{1.0};
  const WaveFunction fwd = split_step(psi, v, kP, 1e-3, 200);
  const WaveFunction back = split_step(fwd, v, kP, -1e-3, 200);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j)
    worst = std::max(worst, std::abs(back.samples()[j] - psi.samples()[j]));
  CHECK(worst <= 1e-8);
}

TEST_CASE("time reversal is conjugation") {
  const Grid g = Grid::make(-10, 10, 256);
  const WaveFunction psi = gaussian_state(g, 0, 1, 2.0);
  const WaveFunction twice = time_reverse(time_reverse(psi));
  for (int j = 0; j < g.n; ++j) CHECK(twice.samples()[j] == psi.samples()[j]);

  // real-valued states are unchanged
  const WaveFunction real = bump_state(g, -1, 1);
  const WaveFunction rev = time_reverse(real);
  for (int j = 0; j < g.n; ++j) CHECK(rev.samples()[j] == real.samples()[j]);

  // evolve(conj(evolve(psi))) = conj(psi) for a real potential
  const Potential v = HarmonicPotential{1.0};
  const WaveFunction round =
      split_step(time_reverse(split_step(psi, v, kP, 1e-3, 100)), v, kP, 1e-3, 100);
  const WaveFunction expect = time_reverse(psi);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j)
    worst = std::max(worst, std::abs(round.samples()[j] - expect.samples()[j]));
  CHECK(worst <= 1e-8);
}

TEST_CASE("invalid stepping arguments") {
  const Grid g = Grid::make(-10, 10, 64);
  const WaveFunction psi = gaussian_state(g, 0, 1);
  CHECK_THROWS_AS(split_step(psi, FreePotential{}, kP, 0.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(split_step(psi, FreePotential{}, kP, 1e-3, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      split_step(psi, SampledPotential{{1.0, 2.0}}, kP, 1e-3, 1),
      std::invalid_argument);
}

TEST_CASE("graded evolution moves each part, keeps scalars") {
  const Grid g = Grid::make(-8, 8, 512);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(psi, spec);

  // single component equals plain split_step
  const auto single = GradedWaveFunction::pure(psi);
  const auto evolved_single = evolve_graded(single, FreePotential{}, kP, 1e-3, 40);
  const WaveFunction direct = split_step(psi, FreePotential{}, kP, 1e-3, 40);
  for (int j = 0; j < g.n; ++j)
    CHECK(evolved_single.components()[0].part.samples()[j] == direct.samples()[j]);

  // unitarity preserves the graded distance to the unperturbed flow
  const HyperReal d0 = l2_distance(single, pert.state);
  const auto et = evolve_graded(pert.state, FreePotential{}, kP, 1e-3, 40);
  const HyperReal dt = l2_distance(evolved_single, et);
  CHECK(hclose(d0, dt, 1e-10));

  // near-zero dt leaves a smooth state unchanged
  const Grid gs = Grid::make(-15, 15, 512);
  PerturbationSpec sspec;
  sspec.envelope_center = 12.0;
  sspec.envelope_width = 0.5;
  sspec.zero_tol = 1e-14;
  const Perturbation smooth = perturb(gaussian_state(gs, 0, 1), sspec);
  const auto tiny = evolve_graded(smooth.state, FreePotential{}, kP, 1e-9, 1);
  for (std::size_t c = 0; c < tiny.components().size(); ++c) {
    double worst = 0.0;
    for (int j = 0; j < gs.n; ++j)
      worst = std::max(worst,
                       std::abs(tiny.components()[c].part.samples()[j] -
                                smooth.state.components()[c].part.samples()[j]));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("instantiation commutes with the linear evolution") {
  const Grid g = Grid::make(-8, 8, 512);
  const WaveFunction psi = bump_state(g, -1, 1);
  PerturbationSpec spec;
  spec.envelope_center = 5.0;
  spec.envelope_width = 1.0;
  const Perturbation pert = perturb(psi, spec);
  for (double e : {1e-2, 1e-3}) {
    const WaveFunction inst_then =
        split_step(pert.state.instantiate(e), HarmonicPotential{1.0}, kP, 1e-3, 50);
    const WaveFunction then_inst =
        evolve_graded(pert.state, HarmonicPotential{1.0}, kP, 1e-3, 50)
            .instantiate(e);
    double worst = 0.0;
    for (int j = 0; j < g.n; ++j)
      worst = std::max(worst,
                       std::abs(inst_then.samples()[j] - then_inst.samples()[j]));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("free propagator matches the spectral solver on the grid") {
  const Grid g = Grid::make(-15, 15, 1024);
  const WaveFunction psi = bump_state(g, -1, 1);
  const WaveFunction evolved = split_step(psi, FreePotential{}, kP, 0.5, 1);
  for (double x : {-0.7, 0.4, 2.0}) {
    const cdouble direct = free_propagator_eval(psi, x, 0.5, kP);
    CHECK(std::abs(direct - evolved.value_at(x)) <= 1e-3);
  }
}

TEST_CASE("free propagator matches the closed-form Gaussian") {
  const Grid g = Grid::make(-15, 15, 1024);
  const double s0 = 1.0;
  const WaveFunction psi = gaussian_state(g, 0, s0);
  const double t = 0.8;
  // psi(x,t) for a centered Gaussian: width grows, quadratic chirp phase
  const cdouble denom = cdouble{1.0, t / (2.0 * s0 * s0)};
  for (double x : {0.0, 0.9, -1.7}) {
    const cdouble exact = std::pow(2.0 * std::numbers::pi * s0 * s0, -0.25) /
                          std::sqrt(denom) *
                          std::exp(-x * x / (4.0 * s0 * s0 * denom));
    const cdouble got = free_propagator_eval(psi, x, t, kP);
    CHECK(std::abs(got - exact) <= 1e-4);
  }
}

TEST_CASE("free propagator edge cases") {
  const Grid g = Grid::make(-10, 10, 256);
  CHECK(free_propagator_eval(WaveFunction::zero(g), 1.0, 0.5, kP) == cdouble{0, 0});
  CHECK_THROWS_AS(free_propagator_eval(bump_state(g, 0, 1), 1.0, 0.0, kP),
                  std::invalid_argument);
}
