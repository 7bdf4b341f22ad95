#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "pw/wavefield.hpp"

namespace pw {

struct PhysicsParams {
  double mass = 1.0;
  double hbar = 1.0;
};

struct FreePotential {};
struct HarmonicPotential {
  double omega = 1.0;
};
struct SampledPotential {
  std::vector<double> values;  // one per grid point, finite
};
using Potential = std::variant<FreePotential, HarmonicPotential, SampledPotential>;

bool is_free(const Potential& v);
std::vector<double> potential_values(const Potential& v, const Grid& grid,
                                     PhysicsParams p);

/// Strang-split spectral stepper on a periodic grid: half potential phase,
/// full kinetic phase in Fourier space, half potential phase. Exactly norm
/// preserving up to roundoff; for a free potential the kinetic phase alone is
/// time-exact.
class SplitStepper {
 public:
  SplitStepper(const Grid& grid, const Potential& v, PhysicsParams p, double dt);
  ~SplitStepper();
  SplitStepper(const SplitStepper&) = delete;
  SplitStepper& operator=(const SplitStepper&) = delete;

  void step(std::vector<cdouble>& samples, int count = 1) const;
  double dt() const { return dt_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double dt_;
};

/// steps applications of the dt-step propagator. dt may be negative (backward
/// evolution); dt == 0 is invalid.
WaveFunction split_step(const WaveFunction& wf, const Potential& v,
                        PhysicsParams p, double dt, int steps);

/// Evolves each graded component's part independently (the equation is
/// linear); scalars and exponents are unchanged.
GradedWaveFunction evolve_graded(const GradedWaveFunction& gwf, const Potential& v,
                                 PhysicsParams p, double dt, int steps);

/// Complex conjugation of all samples (motion reversal).
WaveFunction time_reverse(const WaveFunction& wf);

/// d/dx by Fourier multiplier.
WaveFunction spectral_derivative(const WaveFunction& wf);
std::vector<cdouble> spectral_derivative(const Grid& grid,
                                         const std::vector<cdouble>& samples);

/// Exact free evolution to arbitrary times from a fixed initial state, kept in
/// momentum space; one phase multiply + inverse transform per query.
class FreeSpectralEvolver {
 public:
  FreeSpectralEvolver(const WaveFunction& wf0, PhysicsParams p);

  WaveFunction state_at(double t) const;
  /// State and its spatial derivative in one pass.
  std::pair<std::vector<cdouble>, std::vector<cdouble>> state_and_derivative(
      double t) const;
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  PhysicsParams p_;
  std::vector<cdouble> spectrum_;  // forward transform of wf0 (unnormalized)
};

/// psi(x, t) far from (or on) the grid by direct oscillatory quadrature of the
/// free kernel K(x,x',t) = sqrt(m/(2 pi i hbar t)) exp(i m (x-x')^2 / (2 hbar t))
/// against the sampled initial state, integrated over the support of wf0 with
/// Gauss-Legendre panels that keep at least 8 points per kernel oscillation.
/// t == 0 is invalid (no kernel); t < 0 evaluates the backward evolution.
cdouble free_propagator_eval(const WaveFunction& wf0, double x, double t,
                             PhysicsParams p);

/// Value and spatial derivative together (shared quadrature points).
std::pair<cdouble, cdouble> free_propagator_eval_with_derivative(
    const WaveFunction& wf0, double x, double t, PhysicsParams p);

namespace detail {
/// Quadrature core: integrate the kernel against cells [lo_cell, hi_cell) of
/// wf0's sample polyline. Used with full support by free_propagator_eval and
/// with momentum-screened windows by the far-field tracker.
std::pair<cdouble, cdouble> propagator_quadrature(const WaveFunction& wf0,
                                                  int lo_cell, int hi_cell,
                                                  double x, double t,
                                                  PhysicsParams p,
                                                  bool want_derivative);

// In-place unnormalized transforms (shared FFTW plans, any size).
void fft_forward(std::vector<cdouble>& data);
void fft_backward(std::vector<cdouble>& data);
}  // namespace detail

}  // namespace pw
