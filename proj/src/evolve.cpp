#include "pw/evolve.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "pw/kernels.hpp"

namespace pw {

namespace {

constexpr double kPi = std::numbers::pi;

// ---- FFT plans (FFTW, serial, FFTW_ESTIMATE: deterministic) ----------------

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PlanPair& plan_for(int n) {
  static std::map<int, PlanPair> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cdouble> buf(n);
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  PlanPair plans;
  plans.fwd = fftw_plan_dft_1d(n, raw, raw, FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.bwd = fftw_plan_dft_1d(n, raw, raw, FFTW_BACKWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, plans).first->second;
}

}  // namespace

namespace detail {

void fft_forward(std::vector<cdouble>& data) {
  auto* raw = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(static_cast<int>(data.size())).fwd, raw, raw);
}

void fft_backward(std::vector<cdouble>& data) {
  auto* raw = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(static_cast<int>(data.size())).bwd, raw, raw);
}

}  // namespace detail

namespace {

using detail::fft_backward;
using detail::fft_forward;

// Angular wavenumber of spectral bin j on a periodic grid.
double wavenumber(const Grid& grid, int j) {
  const double dk = 2.0 * kPi / (grid.x_max - grid.x_min);
  const int f = (j <= grid.n / 2) ? j : j - grid.n;
  return dk * f;
}

// ---- Gauss-Legendre nodes on [-1, 1] ----------------------------------------

struct GlRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GlRule make_gl(int order) {
  GlRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    // Newton iteration from the Chebyshev estimate.
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = order * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GlRule& gl_rule(int order) {
  static const std::map<int, GlRule> rules = [] {
    std::map<int, GlRule> r;
    for (int o : {4, 8, 16}) r.emplace(o, make_gl(o));
    return r;
  }();
  return rules.at(order);
}

}  // namespace

bool is_free(const Potential& v) {
  return std::holds_alternative<FreePotential>(v);
}

std::vector<double> potential_values(const Potential& v, const Grid& grid,
                                     PhysicsParams p) {
  std::vector<double> out(grid.n, 0.0);
  if (std::holds_alternative<HarmonicPotential>(v)) {
    const double omega = std::get<HarmonicPotential>(v).omega;
    for (int j = 0; j < grid.n; ++j) {
      const double x = grid.x(j);
      out[j] = 0.5 * p.mass * omega * omega * x * x;
    }
  } else if (std::holds_alternative<SampledPotential>(v)) {
    const auto& vals = std::get<SampledPotential>(v).values;
    if (static_cast<int>(vals.size()) != grid.n)
      throw std::invalid_argument("sampled potential size does not match grid");
    for (double x : vals)
      if (!std::isfinite(x))
        throw std::invalid_argument("non-finite sampled potential value");
    out = vals;
  }
  return out;
}

struct SplitStepper::Impl {
  bool free = false;
  std::vector<cdouble> vphase_half;  // exp(-i V dt / (2 hbar))
  std::vector<cdouble> kin_phase;    // exp(-i hbar k^2 dt / (2 m)) / n
};

SplitStepper::SplitStepper(const Grid& grid, const Potential& v, PhysicsParams p,
                           double dt)
    : impl_(std::make_unique<Impl>()), dt_(dt) {
  if (dt == 0.0) throw std::invalid_argument("split step requires dt != 0");
  if (!(p.mass > 0.0 && p.hbar > 0.0))
    throw std::invalid_argument("physics parameters must be positive");
  impl_->free = is_free(v);
  if (!impl_->free) {
    const auto vals = potential_values(v, grid, p);
    impl_->vphase_half.resize(grid.n);
    for (int j = 0; j < grid.n; ++j)
      impl_->vphase_half[j] = std::polar(1.0, -vals[j] * dt / (2.0 * p.hbar));
  }
  impl_->kin_phase.resize(grid.n);
  const double scale = 1.0 / grid.n;
  for (int j = 0; j < grid.n; ++j) {
    const double k = wavenumber(grid, j);
    impl_->kin_phase[j] =
        std::polar(scale, -p.hbar * k * k * dt / (2.0 * p.mass));
  }
}

SplitStepper::~SplitStepper() = default;

void SplitStepper::step(std::vector<cdouble>& samples, int count) const {
  const std::size_t n = samples.size();
  for (int s = 0; s < count; ++s) {
    if (!impl_->free)
      kernels::apply_phase(samples.data(), impl_->vphase_half.data(), n);
    fft_forward(samples);
    kernels::apply_phase(samples.data(), impl_->kin_phase.data(), n);
    fft_backward(samples);
    if (!impl_->free)
      kernels::apply_phase(samples.data(), impl_->vphase_half.data(), n);
  }
}

WaveFunction split_step(const WaveFunction& wf, const Potential& v,
                        PhysicsParams p, double dt, int steps) {
  if (steps < 1) throw std::invalid_argument("split step requires steps >= 1");
  const SplitStepper stepper(wf.grid(), v, p, dt);
  std::vector<cdouble> s = wf.samples();
  stepper.step(s, steps);
  return WaveFunction(wf.grid(), std::move(s));
}

GradedWaveFunction evolve_graded(const GradedWaveFunction& gwf, const Potential& v,
                                 PhysicsParams p, double dt, int steps) {
  if (steps < 1) throw std::invalid_argument("split step requires steps >= 1");
  const SplitStepper stepper(gwf.grid(), v, p, dt);
  std::vector<GradedWaveFunction::Component> comps;
  comps.reserve(gwf.components().size());
  for (const auto& c : gwf.components()) {
    std::vector<cdouble> s = c.part.samples();
    stepper.step(s, steps);
    comps.push_back({c.exponent, c.scalar, WaveFunction(gwf.grid(), std::move(s))});
  }
  return GradedWaveFunction(std::move(comps), gwf.order_cap());
}

WaveFunction time_reverse(const WaveFunction& wf) {
  std::vector<cdouble> s = wf.samples();
  for (auto& v : s) v = std::conj(v);
  return WaveFunction(wf.grid(), std::move(s));
}

std::vector<cdouble> spectral_derivative(const Grid& grid,
                                         const std::vector<cdouble>& samples) {
  std::vector<cdouble> s = samples;
  fft_forward(s);
  const double scale = 1.0 / grid.n;
  for (int j = 0; j < grid.n; ++j) {
    // Zero the Nyquist derivative: its sign is not determined by the samples.
    const double k = (grid.n % 2 == 0 && j == grid.n / 2) ? 0.0
                                                          : wavenumber(grid, j);
    s[j] *= cdouble(0.0, k * scale);
  }
  fft_backward(s);
  return s;
}

WaveFunction spectral_derivative(const WaveFunction& wf) {
  return WaveFunction(wf.grid(), spectral_derivative(wf.grid(), wf.samples()));
}

FreeSpectralEvolver::FreeSpectralEvolver(const WaveFunction& wf0, PhysicsParams p)
    : grid_(wf0.grid()), p_(p), spectrum_(wf0.samples()) {
  fft_forward(spectrum_);
}

WaveFunction FreeSpectralEvolver::state_at(double t) const {
  std::vector<cdouble> s = spectrum_;
  const double scale = 1.0 / grid_.n;
  for (int j = 0; j < grid_.n; ++j) {
    const double k = wavenumber(grid_, j);
    s[j] *= std::polar(scale, -p_.hbar * k * k * t / (2.0 * p_.mass));
  }
  fft_backward(s);
  return WaveFunction(grid_, std::move(s));
}

std::pair<std::vector<cdouble>, std::vector<cdouble>>
FreeSpectralEvolver::state_and_derivative(double t) const {
  std::vector<cdouble> s = spectrum_;
  const double scale = 1.0 / grid_.n;
  for (int j = 0; j < grid_.n; ++j) {
    const double k = wavenumber(grid_, j);
    s[j] *= std::polar(scale, -p_.hbar * k * k * t / (2.0 * p_.mass));
  }
  std::vector<cdouble> d = s;
  for (int j = 0; j < grid_.n; ++j) {
    const double k = (grid_.n % 2 == 0 && j == grid_.n / 2) ? 0.0
                                                            : wavenumber(grid_, j);
    d[j] *= cdouble(0.0, k);
  }
  fft_backward(s);
  fft_backward(d);
  return {std::move(s), std::move(d)};
}

namespace detail {

std::pair<cdouble, cdouble> propagator_quadrature(const WaveFunction& wf0,
                                                  int lo_cell, int hi_cell,
                                                  double x, double t,
                                                  PhysicsParams p,
                                                  bool want_derivative) {
  if (t == 0.0)
    throw std::invalid_argument("free propagator requires t != 0");
  const Grid& grid = wf0.grid();
  const auto& s = wf0.samples();
  const double dx = grid.dx();
  const double alpha = p.mass / (2.0 * p.hbar * t);   // phase = alpha (x-x')^2
  const double beta = p.mass / (p.hbar * t);          // derivative factor i beta (x-x')

  lo_cell = std::max(lo_cell, 0);
  hi_cell = std::min(hi_cell, grid.n);
  if (lo_cell >= hi_cell) return {cdouble{0, 0}, cdouble{0, 0}};
  const std::size_t ncells = static_cast<std::size_t>(hi_cell - lo_cell);

  // Per-cell contribution: the sample polyline is linear inside a cell, so a
  // Gauss-Legendre rule sized by the local kernel oscillation integrates it
  // accurately; fast cells are subdivided to keep >= 8 points per oscillation.
  const auto cell_contrib = [&](std::size_t idx, bool deriv) -> cdouble {
    const int j = lo_cell + static_cast<int>(idx);
    const double xa = grid.x(j);
    const double xb = xa + dx;
    const cdouble sa = s[j];
    const cdouble sb = (j + 1 < grid.n) ? s[j + 1] : cdouble{0, 0};
    if (sa == cdouble{0, 0} && sb == cdouble{0, 0}) return {0, 0};
    const double span = std::abs(alpha) *
                        std::abs((x - xa) * (x - xa) - (x - xb) * (x - xb));
    const int pieces = std::max(1, static_cast<int>(std::ceil(span / (4.0 * kPi))));
    const double piece_span = span / pieces;
    const int order = piece_span <= 0.5 * kPi ? 4 : (piece_span <= 2.0 * kPi ? 8 : 16);
    const GlRule& rule = gl_rule(order);
    cdouble acc{0, 0};
    const double w_piece = dx / pieces;
    for (int piece = 0; piece < pieces; ++piece) {
      const double a = xa + piece * w_piece;
      const double mid = a + 0.5 * w_piece;
      const double half = 0.5 * w_piece;
      for (int q = 0; q < order; ++q) {
        const double xp = mid + half * rule.nodes[q];
        const double u = (xp - xa) / dx;
        const cdouble val = sa + u * (sb - sa);
        const double d = x - xp;
        cdouble f = val * std::polar(1.0, alpha * d * d);
        if (deriv) f *= cdouble(0.0, beta * d);
        acc += rule.weights[q] * half * f;
      }
    }
    return acc;
  };

  const cdouble raw = kernels::block_reduce_c(
      ncells, [&](std::size_t i) { return cell_contrib(i, false); });
  cdouble raw_d{0, 0};
  if (want_derivative)
    raw_d = kernels::block_reduce_c(
        ncells, [&](std::size_t i) { return cell_contrib(i, true); });

  // sqrt(m / (2 pi i hbar t)) on the principal branch (works for t < 0 too).
  const cdouble prefactor =
      std::sqrt(cdouble(0.0, -p.mass / (2.0 * kPi * p.hbar * t)));
  return {prefactor * raw, prefactor * raw_d};
}

}  // namespace detail

namespace {

std::pair<int, int> support_cells(const WaveFunction& wf0) {
  const auto& s = wf0.samples();
  int first = -1, last = -1;
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    if (s[j] != cdouble{0, 0}) {
      if (first < 0) first = j;
      last = j;
    }
  }
  if (first < 0) return {0, 0};
  return {std::max(0, first - 1), std::min<int>(static_cast<int>(s.size()), last + 1)};
}

}  // namespace

cdouble free_propagator_eval(const WaveFunction& wf0, double x, double t,
                             PhysicsParams p) {
  const auto [lo, hi] = support_cells(wf0);
  return detail::propagator_quadrature(wf0, lo, hi, x, t, p, false).first;
}

std::pair<cdouble, cdouble> free_propagator_eval_with_derivative(
    const WaveFunction& wf0, double x, double t, PhysicsParams p) {
  const auto [lo, hi] = support_cells(wf0);
  return detail::propagator_quadrature(wf0, lo, hi, x, t, p, true);
}

}  // namespace pw
