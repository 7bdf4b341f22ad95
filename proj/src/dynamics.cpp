#include "pw/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "pw/kernels.hpp"

namespace pw {

namespace {

constexpr double kPi = std::numbers::pi;

// ---- velocity fields at a fixed time ----------------------------------------

struct Field {
  Grid grid;
  Rat cap;
  bool graded = false;
  std::vector<Rat> exps;
  std::vector<std::vector<cdouble>> parts;
  std::vector<std::vector<cdouble>> dparts;

  static Field concrete(const Grid& g, std::vector<cdouble> psi,
                        std::vector<cdouble> dpsi) {
    Field f;
    f.grid = g;
    f.graded = false;
    f.exps.push_back(Rat(0));
    f.parts.push_back(std::move(psi));
    f.dparts.push_back(std::move(dpsi));
    return f;
  }

  HyperReal density_h(double x) const {
    std::vector<HyperReal::Term> terms;
    std::vector<cdouble> v(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
      v[i] = interp_value(grid, parts[i], x);
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = i; j < parts.size(); ++j) {
        const Rat e = exps[i] + exps[j];
        if (e > cap) continue;
        const double re = v[i].real() * v[j].real() + v[i].imag() * v[j].imag();
        terms.push_back({e, (i == j) ? re : 2.0 * re});
      }
    return HyperReal::from_terms(std::move(terms), cap);
  }

  HyperReal current_h(double x) const {
    // Im(psi~* d_x psi~) expanded in eps orders.
    std::vector<HyperReal::Term> terms;
    std::vector<cdouble> v(parts.size()), dv(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      v[i] = interp_value(grid, parts[i], x);
      dv[i] = interp_value(grid, dparts[i], x);
    }
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = i; j < parts.size(); ++j) {
        const Rat e = exps[i] + exps[j];
        if (e > cap) continue;
        double im = std::imag(std::conj(v[i]) * dv[j]);
        if (i != j) im += std::imag(std::conj(v[j]) * dv[i]);
        terms.push_back({e, im});
      }
    return HyperReal::from_terms(std::move(terms), cap);
  }

  HyperReal graded_velocity(double x, PhysicsParams p, double node_floor) const {
    const HyperReal rho = density_h(x);
    bool viable = false;
    for (const auto& t : rho.terms())
      if (std::abs(t.coefficient) > node_floor) viable = true;
    if (!viable)
      throw NodeError("velocity undefined at node: density vanishes at all orders");
    const HyperReal cur = current_h(x);
    return (p.hbar / p.mass) * (cur / rho);
  }

  // (standard velocity, standard density); concrete fields use plain ratios.
  std::pair<double, double> velocity_and_density(double x, PhysicsParams p,
                                                 double node_floor) const {
    if (!graded) {
      const cdouble v = interp_value(grid, parts[0], x);
      const cdouble dv = interp_value(grid, dparts[0], x);
      const double rho = std::norm(v);
      if (rho < node_floor)
        throw NodeError("velocity undefined at node: density below floor");
      return {p.hbar * std::imag(std::conj(v) * dv) / (p.mass * rho), rho};
    }
    const HyperReal vel = graded_velocity(x, p, node_floor);
    const HyperReal rho = density_h(x);
    double vst;
    try {
      vst = vel.standard_part();
    } catch (const std::domain_error&) {
      throw NodeError("guidance velocity infinite at a node");
    }
    return {vst, rho.coefficient_at(Rat(0))};
  }
};

Field make_field(const GradedWaveFunction& state, bool graded_mode) {
  Field f;
  f.grid = state.grid();
  f.cap = state.order_cap();
  f.graded = graded_mode;
  for (const auto& fc : state.flattened()) {
    f.exps.push_back(fc.exponent);
    f.parts.push_back(fc.part);
    f.dparts.push_back(spectral_derivative(state.grid(), fc.part));
  }
  return f;
}

}  // namespace

HyperReal velocity(const GradedWaveFunction& state, double x, PhysicsParams p) {
  const Field f = make_field(state, true);
  return f.graded_velocity(x, p, GuidanceOptions{}.node_floor);
}

// ---- guidance integration ----------------------------------------------------

namespace {

struct ParticleState {
  double x = 0.0;
  bool active = true;
  RunStatus status = RunStatus::ok;
  std::string note;
  double min_density = std::numeric_limits<double>::infinity();
  bool off_grid = false;
  std::vector<double> times;
  std::vector<double> positions;
};

// Provides velocity fields at arbitrary times, plus far-field velocities for
// free motion beyond the grid edge.
class GuidanceEngine {
 public:
  GuidanceEngine(const GradedWaveFunction& state0, const Potential& v,
                 PhysicsParams p, std::optional<double> eps,
                 const GuidanceOptions& opts)
      : p_(p), opts_(opts), grid_(state0.grid()), free_(is_free(v)) {
    if (eps) {
      mode_ = TrajectoryMode::concrete;
      concrete_state_ = state0.instantiate(*eps);
    } else if (state0.flattened().size() <= 1) {
      mode_ = TrajectoryMode::standard;
      concrete_state_ =
          WaveFunction(grid_, state0.flattened().empty()
                                  ? std::vector<cdouble>(grid_.n, cdouble{0, 0})
                                  : state0.flattened().front().part);
    } else {
      mode_ = TrajectoryMode::graded;
      graded_state_ = state0;
    }
    if (free_) {
      if (mode_ == TrajectoryMode::graded) {
        for (const auto& fc : graded_state_->flattened())
          free_evolvers_.emplace_back(WaveFunction(grid_, fc.part), p_);
      } else {
        free_evolvers_.emplace_back(*concrete_state_, p_);
      }
      if (mode_ != TrajectoryMode::graded && eps) {
        // far-field continuation for concrete runs
        far_ = std::make_unique<detail::FreeEvolvedState>(state0, *eps, p_);
      } else if (mode_ == TrajectoryMode::standard && !eps) {
        far_ = std::make_unique<detail::FreeEvolvedState>(state0, 0.5, p_);
      }
    } else {
      if (mode_ == TrajectoryMode::graded)
        nonfree_parts_ = graded_state_->flattened();
      else
        nonfree_parts_.push_back({Rat(0), concrete_state_->samples()});
      stepper_v_ = v;
    }
  }

  TrajectoryMode mode() const { return mode_; }
  bool free_motion() const { return free_; }
  const Grid& grid() const { return grid_; }

  // Field at time t built from the free evolvers (exact, cached by t).
  // Shared ownership: callers may outlive a cache eviction.
  std::shared_ptr<const Field> free_field(double t) {
    auto it = field_cache_.find(t);
    if (it != field_cache_.end()) return it->second;
    Field f;
    f.grid = grid_;
    f.graded = (mode_ == TrajectoryMode::graded);
    f.cap = f.graded ? graded_state_->order_cap() : HyperReal::default_order_cap();
    for (std::size_t i = 0; i < free_evolvers_.size(); ++i) {
      auto [s, d] = free_evolvers_[i].state_and_derivative(t);
      f.exps.push_back(f.graded ? graded_state_->flattened()[i].exponent : Rat(0));
      f.parts.push_back(std::move(s));
      f.dparts.push_back(std::move(d));
    }
    if (field_cache_.size() > 16) field_cache_.clear();
    auto ptr = std::make_shared<const Field>(std::move(f));
    field_cache_.emplace(t, ptr);
    return ptr;
  }

  Field field_from_parts(
      const std::vector<GradedWaveFunction::FlatComponent>& parts) const {
    Field f;
    f.grid = grid_;
    f.graded = (mode_ == TrajectoryMode::graded);
    f.cap = f.graded ? graded_state_->order_cap() : HyperReal::default_order_cap();
    for (const auto& fc : parts) {
      f.exps.push_back(fc.exponent);
      f.parts.push_back(fc.part);
      f.dparts.push_back(spectral_derivative(grid_, fc.part));
    }
    return f;
  }

  std::vector<GradedWaveFunction::FlatComponent> step_parts(
      const std::vector<GradedWaveFunction::FlatComponent>& parts,
      double dt) const {
    const SplitStepper stepper(grid_, stepper_v_, p_, dt);
    auto out = parts;
    for (auto& fc : out) stepper.step(fc.part);
    return out;
  }

  bool on_grid(double x) const {
    const double margin = 2.0 * grid_.dx();
    return x >= grid_.x_min + margin && x <= grid_.x_max - margin;
  }

  // velocity/density at (x, t) using grid fields when possible, far-field
  // quadrature for free motion beyond the edge.
  std::pair<double, double> velocity_at(const Field& field, double t, double x) {
    if (on_grid(x) || !free_ || !far_) {
      if (!on_grid(x) && !free_)
        throw std::out_of_range("position left the grid under a non-free potential");
      return field.velocity_and_density(x, p_, opts_.node_floor);
    }
    ++far_evals_;
    const auto [val, dval] = far_->value_and_derivative(x, t);
    const double rho = std::norm(val);
    if (rho < opts_.node_floor)
      throw NodeError("velocity undefined at node: far-field density below floor");
    return {p_.hbar * std::imag(std::conj(val) * dval) / (p_.mass * rho), rho};
  }

  const std::vector<GradedWaveFunction::FlatComponent>& nonfree_parts() const {
    return nonfree_parts_;
  }

  long far_evals() const { return far_evals_; }

  PhysicsParams p_;
  GuidanceOptions opts_;

 private:
  Grid grid_;
  bool free_;
  TrajectoryMode mode_ = TrajectoryMode::standard;
  std::optional<WaveFunction> concrete_state_;
  std::optional<GradedWaveFunction> graded_state_;
  std::vector<FreeSpectralEvolver> free_evolvers_;
  std::unique_ptr<detail::FreeEvolvedState> far_;
  std::vector<GradedWaveFunction::FlatComponent> nonfree_parts_;
  Potential stepper_v_;
  std::map<double, std::shared_ptr<const Field>> field_cache_;
  long far_evals_ = 0;
};

// One RK4 step for every active particle using fields at ta, tm, tb.
void rk4_step(GuidanceEngine& eng, const Field& fa, const Field& fm,
              const Field& fb, double ta, double h,
              std::vector<ParticleState>& ps) {
  for (auto& part : ps) {
    if (!part.active) continue;
    try {
      const auto [k1, rho1] = eng.velocity_at(fa, ta, part.x);
      const auto [k2, rho2] = eng.velocity_at(fm, ta + h / 2, part.x + h / 2 * k1);
      const auto [k3, rho3] = eng.velocity_at(fm, ta + h / 2, part.x + h / 2 * k2);
      const auto [k4, rho4] = eng.velocity_at(fb, ta + h, part.x + h * k3);
      part.x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      part.min_density = std::min(part.min_density, rho1);
      (void)rho2;
      (void)rho3;
      (void)rho4;
    } catch (const NodeError& e) {
      part.active = false;
      part.status = RunStatus::node_error;
      part.note = e.what();
    } catch (const std::out_of_range& e) {
      part.active = false;
      part.status = RunStatus::left_grid;
      part.note = e.what();
    }
  }
}

double max_speed(GuidanceEngine& eng, const Field& f, double t,
                 const std::vector<ParticleState>& ps) {
  double vmax = 0.0;
  for (const auto& part : ps) {
    if (!part.active) continue;
    try {
      vmax = std::max(vmax, std::abs(eng.velocity_at(f, t, part.x).first));
    } catch (...) {
      // a node or grid exit here surfaces during the actual step
    }
  }
  return vmax;
}

// Advance all particles from ta to tb; free motion gets fields on demand,
// non-free passes the marched parts through (returning the end state).
std::vector<GradedWaveFunction::FlatComponent> advance_interval(
    GuidanceEngine& eng, std::vector<GradedWaveFunction::FlatComponent> parts_a,
    double ta, double tb, std::vector<ParticleState>& ps, int depth) {
  const double h = tb - ta;
  const double tm = ta + h / 2;
  if (eng.free_motion()) {
    const auto fa = eng.free_field(ta);
    const double vmax = max_speed(eng, *fa, ta, ps);
    if (vmax * h > eng.grid().dx() && depth < eng.opts_.max_halvings) {
      auto unused = advance_interval(eng, parts_a, ta, tm, ps, depth + 1);
      return advance_interval(eng, std::move(unused), tm, tb, ps, depth + 1);
    }
    const auto fm = eng.free_field(tm);
    const auto fb = eng.free_field(tb);
    rk4_step(eng, *fa, *fm, *fb, ta, h, ps);
    return parts_a;
  }
  const Field fa = eng.field_from_parts(parts_a);
  const double vmax = max_speed(eng, fa, ta, ps);
  if (vmax * h > eng.grid().dx() && depth < eng.opts_.max_halvings) {
    auto mid = advance_interval(eng, std::move(parts_a), ta, tm, ps, depth + 1);
    return advance_interval(eng, std::move(mid), tm, tb, ps, depth + 1);
  }
  auto parts_m = eng.step_parts(parts_a, h / 2);
  auto parts_b = eng.step_parts(parts_m, h / 2);
  const Field fm = eng.field_from_parts(parts_m);
  const Field fb = eng.field_from_parts(parts_b);
  rk4_step(eng, fa, fm, fb, ta, h, ps);
  return parts_b;
}

}  // namespace

std::vector<TrajectoryRun> integrate_guidance_batch(
    const GradedWaveFunction& state0, const Potential& v, PhysicsParams p,
    const std::vector<double>& x0s, const std::vector<double>& t_grid,
    std::optional<double> eps_value, const GuidanceOptions& opts) {
  if (t_grid.size() < 2)
    throw std::invalid_argument("guidance needs at least two output times");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("output times must be strictly increasing");
  for (double x0 : x0s)
    if (!state0.grid().contains(x0))
      throw std::invalid_argument("x0 must start inside the grid");

  GuidanceEngine eng(state0, v, p, eps_value, opts);
  std::vector<ParticleState> ps(x0s.size());
  for (std::size_t i = 0; i < x0s.size(); ++i) {
    ps[i].x = x0s[i];
    ps[i].times.push_back(t_grid[0]);
    ps[i].positions.push_back(x0s[i]);
  }

  // starting densities, for the relative support-preservation monitor
  std::vector<double> rho0(x0s.size(), std::numeric_limits<double>::quiet_NaN());
  {
    std::shared_ptr<const Field> held;
    Field built;
    const Field* f0 = nullptr;
    if (eng.free_motion()) {
      held = eng.free_field(t_grid[0]);
      f0 = held.get();
    } else {
      built = eng.field_from_parts(eng.nonfree_parts());
      f0 = &built;
    }
    for (std::size_t i = 0; i < x0s.size(); ++i) {
      try {
        rho0[i] = f0->velocity_and_density(x0s[i], p, 0.0).second;
      } catch (...) {
      }
    }
  }

  std::vector<GradedWaveFunction::FlatComponent> parts;
  if (!eng.free_motion()) parts = eng.nonfree_parts();
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    parts = advance_interval(eng, std::move(parts), t_grid[i], t_grid[i + 1], ps, 0);
    for (auto& part : ps) {
      if (!part.active) continue;
      part.times.push_back(t_grid[i + 1]);
      part.positions.push_back(part.x);
    }
    bool any = false;
    for (const auto& part : ps) any = any || part.active;
    if (!any) break;
  }

  const TrajectoryMode mode = eng.mode();
  std::vector<TrajectoryRun> out(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out[i].trajectory.mode = mode;
    out[i].trajectory.times = std::move(ps[i].times);
    out[i].trajectory.positions = std::move(ps[i].positions);
    out[i].status = ps[i].status;
    out[i].note = ps[i].note;
    out[i].min_density = ps[i].min_density;
    // The monitor applies when the run started at appreciable density; the
    // floor is relative to it.
    out[i].support_ok = true;
    if (std::isfinite(rho0[i]) && rho0[i] > opts.support_floor &&
        std::isfinite(ps[i].min_density))
      out[i].support_ok = ps[i].min_density >= opts.support_floor * rho0[i];
  }
  return out;
}

TrajectoryRun integrate_guidance(const GradedWaveFunction& state0,
                                 const Potential& v, PhysicsParams p, double x0,
                                 const std::vector<double>& t_grid,
                                 std::optional<double> eps_value,
                                 const GuidanceOptions& opts) {
  return integrate_guidance_batch(state0, v, p, {x0}, t_grid, eps_value,
                                  opts)[0];
}

// ---- CDF quantile trajectory ---------------------------------------------------

namespace {

double bisect_graded_quantile(const GradedDensityProfile& profile, const Grid& g,
                              const HyperReal& r, bool* escaped) {
  double lo = g.x_min, hi = g.x_max;
  *escaped = profile.cdf(hi) < r;
  if (*escaped) return g.x_max;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (g.x_max - g.x_min); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (profile.cdf(mid) < r)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TrajectoryRun cdf_trajectory(const GradedWaveFunction& state0, const Potential& v,
                             PhysicsParams p, double x0,
                             const std::vector<double>& t_grid,
                             std::optional<double> eps_value) {
  if (t_grid.size() < 2)
    throw std::invalid_argument("cdf_trajectory needs at least two output times");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("output times must be strictly increasing");
  if (!state0.grid().contains(x0))
    throw std::invalid_argument("x0 must start inside the grid");
  if (t_grid.front() != 0.0)
    throw std::invalid_argument("cdf_trajectory assumes t_grid starts at 0");

  TrajectoryRun run;
  const Grid& g = state0.grid();

  if (eps_value || state0.flattened().size() <= 1) {
    // concrete / standard: exact real quantile through prefix/suffix tables
    WaveFunction wf = eps_value ? state0.instantiate(*eps_value)
                                : WaveFunction(g, state0.flattened().front().part);
    run.trajectory.mode =
        eps_value ? TrajectoryMode::concrete : TrajectoryMode::standard;
    const DensityProfile prof0(wf);
    const double level = prof0.cdf(x0);
    const double tail0 = prof0.tail(x0);
    const bool use_tail = level > 0.5 * prof0.total();

    run.trajectory.times.push_back(0.0);
    run.trajectory.positions.push_back(x0);
    run.min_density = prof0.density(x0);

    std::vector<cdouble> samples = wf.samples();
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
      const double dt = t_grid[i + 1] - t_grid[i];
      const SplitStepper stepper(g, v, p, dt);
      stepper.step(samples);
      const WaveFunction wft(g, samples);
      const DensityProfile prof(wft);
      const double x = use_tail ? prof.quantile_by_tail(tail0)
                                : prof.quantile(level);
      run.trajectory.times.push_back(t_grid[i + 1]);
      run.trajectory.positions.push_back(x);
      run.min_density = std::min(run.min_density, prof.density(x));
      if (x >= g.x_max - g.dx()) {
        run.status = RunStatus::escaped_grid;
        run.note = "quantile reached the grid edge: x(t) > x_max - dx";
        break;
      }
    }
    run.support_ok = run.min_density > GuidanceOptions{}.support_floor *
                                           std::max(prof0.density(x0), 0.0);
    return run;
  }

  // graded: bisection under hyperreal comparison, then a first-order
  // hyperreal correction through the graded density.
  run.trajectory.mode = TrajectoryMode::graded;
  const GradedDensityProfile prof0(state0);
  const HyperReal r = prof0.cdf(x0);

  GradedWaveFunction state = state0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0) {
      const double dt = t_grid[i] - t_grid[i - 1];
      state = evolve_graded(state, v, p, dt, 1);
    }
    const GradedDensityProfile prof(state);
    bool escaped = false;
    const double xs = (i == 0) ? x0 : bisect_graded_quantile(prof, g, r, &escaped);
    if (escaped) {
      run.status = RunStatus::escaped_grid;
      run.note = "graded quantile beyond grid: x(t) > x_max";
      break;
    }
    HyperReal pos(xs, state.order_cap());
    const HyperReal rho = prof.density(xs);
    if (!rho.is_zero()) pos = pos + (r - prof.cdf(xs)) / rho;
    run.trajectory.times.push_back(t_grid[i]);
    run.trajectory.positions.push_back(pos.standard_part());
    run.trajectory.graded_positions.push_back(std::move(pos));
  }
  return run;
}

double equivariance_residual(const GradedWaveFunction& state0, const Potential& v,
                             PhysicsParams p, const TrajectoryRun& run,
                             std::optional<double> eps_value) {
  const auto& times = run.trajectory.times;
  const auto& xs = run.trajectory.positions;
  if (times.empty()) throw std::invalid_argument("empty trajectory");
  const Grid& g = state0.grid();

  double residual = 0.0;
  if (eps_value || state0.flattened().size() <= 1) {
    WaveFunction wf = eps_value ? state0.instantiate(*eps_value)
                                : WaveFunction(g, state0.flattened().front().part);
    const double r0 = DensityProfile(wf).cdf(xs[0]);
    std::vector<cdouble> samples = wf.samples();
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (i > 0) {
        const SplitStepper stepper(g, v, p, times[i] - times[i - 1]);
        stepper.step(samples);
      }
      const double c = DensityProfile(WaveFunction(g, samples)).cdf(xs[i]);
      residual = std::max(residual, std::abs(c - r0));
    }
    return residual;
  }

  GradedWaveFunction state = state0;
  const double r0 = GradedDensityProfile(state0).cdf(xs[0]).standard_part();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) state = evolve_graded(state, v, p, times[i] - times[i - 1], 1);
    const double c = GradedDensityProfile(state).cdf(xs[i]).standard_part();
    residual = std::max(residual, std::abs(c - r0));
  }
  return residual;
}

// ---- Theorem-3 closeness sweep -------------------------------------------------

Theorem3Report theorem3_check(const WaveFunction& psi, const PerturbationSpec& spec,
                              const Potential& v, PhysicsParams p, double x0,
                              const std::vector<double>& t_grid,
                              const std::vector<double>& eps_list) {
  double amax = 0.0;
  for (const auto& s : psi.samples()) amax = std::max(amax, std::abs(s));
  if (std::abs(psi.value_at(x0)) <= std::max(spec.zero_tol, 1e-12 * amax))
    throw std::invalid_argument(
        "x0 lies outside the support of psi: Theorem-3 hypothesis fails "
        "(this is the invader case)");

  const auto baseline =
      integrate_guidance(GradedWaveFunction::pure(psi), v, p, x0, t_grid);
  if (baseline.status != RunStatus::ok)
    throw std::runtime_error("baseline trajectory failed: " + baseline.note);

  const Perturbation pert = perturb(psi, spec);
  Theorem3Report report;
  for (double e : eps_list) {
    const auto run = integrate_guidance(pert.state, v, p, x0, t_grid, e);
    if (run.status != RunStatus::ok)
      throw std::runtime_error("perturbed trajectory failed: " + run.note);
    double d = 0.0;
    const std::size_t m =
        std::min(run.trajectory.positions.size(), baseline.trajectory.positions.size());
    for (std::size_t i = 0; i < m; ++i)
      d = std::max(d, std::abs(run.trajectory.positions[i] -
                               baseline.trajectory.positions[i]));
    report.d_by_eps.emplace_back(e, d);
  }
  report.monotone_nonincreasing = true;
  for (std::size_t i = 1; i < report.d_by_eps.size(); ++i)
    if (report.d_by_eps[i].second > report.d_by_eps[i - 1].second)
      report.monotone_nonincreasing = false;
  report.d_smallest = report.d_by_eps.empty() ? 0.0 : report.d_by_eps.back().second;
  return report;
}

// ---- far-field machinery -------------------------------------------------------

namespace detail {

std::vector<cdouble> chirp_transform(const std::vector<cdouble>& h, double theta0,
                                     double dtheta, int m_count) {
  const int n = static_cast<int>(h.size());
  const int need = n + m_count - 1;
  int l = 1;
  while (l < need) l <<= 1;

  std::vector<cdouble> u(l, cdouble{0, 0});
  for (int j = 0; j < n; ++j) {
    const double phase =
        -std::fmod(theta0 * j, 2.0 * kPi) -
        std::fmod(dtheta * 0.5 * static_cast<double>(j) * j, 2.0 * kPi);
    u[j] = h[j] * std::polar(1.0, phase);
  }
  std::vector<cdouble> w(l, cdouble{0, 0});
  for (int k = 0; k < m_count; ++k)
    w[k] = std::polar(1.0, std::fmod(dtheta * 0.5 * static_cast<double>(k) * k,
                                     2.0 * kPi));
  for (int k = 1; k < n; ++k)
    w[l - k] = std::polar(1.0, std::fmod(dtheta * 0.5 * static_cast<double>(k) * k,
                                         2.0 * kPi));

  fft_forward(u);
  fft_forward(w);
  for (int i = 0; i < l; ++i) u[i] *= w[i];
  fft_backward(u);

  std::vector<cdouble> y(m_count);
  const double scale = 1.0 / l;
  for (int m = 0; m < m_count; ++m) {
    const double phase =
        -std::fmod(dtheta * 0.5 * static_cast<double>(m) * m, 2.0 * kPi);
    y[m] = u[m] * std::polar(scale, phase);
  }
  return y;
}

FreeEvolvedState::FreeEvolvedState(const GradedWaveFunction& state, double eps,
                                   PhysicsParams p)
    : p_(p), grid_(state.grid()) {
  for (const auto& fc : state.flattened()) {
    const double amp = std::pow(eps, to_double(fc.exponent));
    std::vector<cdouble> s(grid_.n);
    for (int j = 0; j < grid_.n; ++j) s[j] = amp * fc.part[j];

    double smax = 0.0;
    for (const auto& v : s) smax = std::max(smax, std::abs(v));
    if (smax == 0.0) continue;
    int first = -1, last = -1;
    for (int j = 0; j < grid_.n; ++j) {
      if (std::abs(s[j]) > 1e-14 * smax) {
        if (first < 0) first = j;
        last = j;
      }
    }

    Comp comp{WaveFunction(grid_, std::move(s)), std::max(0, first - 1),
              std::min(grid_.n, last + 1), 0.0,  smax, false, nullptr};

    // momentum radius holding all but ~1e-26 of the total mass, from the
    // discrete spectrum; used to window far evaluations (free motion moves
    // momentum-k mass by k t / m).
    std::vector<cdouble> spec = comp.part.samples();
    fft_forward(spec);
    const double dk = 2.0 * kPi / (grid_.x_max - grid_.x_min);
    std::vector<std::pair<double, double>> by_k;  // (|k|, mass)
    by_k.reserve(grid_.n);
    const double mass_scale = grid_.dx() / grid_.n;
    for (int j = 0; j < grid_.n; ++j) {
      const int f = (j <= grid_.n / 2) ? j : j - grid_.n;
      by_k.emplace_back(std::abs(f) * dk, std::norm(spec[j]) * mass_scale);
    }
    std::sort(by_k.begin(), by_k.end());
    double tail = 0.0;
    comp.k_screen = by_k.back().first;
    for (int j = grid_.n - 1; j >= 0; --j) {
      tail += by_k[j].second;
      if (tail > 1e-26) {
        comp.k_screen = by_k[j].first;
        break;
      }
    }
    const double k_nyquist = kPi / grid_.dx();
    comp.smooth = comp.k_screen < 0.5 * k_nyquist;
    if (comp.smooth)
      comp.evolver = std::make_shared<FreeSpectralEvolver>(comp.part, p);
    comps_.push_back(std::move(comp));
  }
}

std::pair<cdouble, cdouble> FreeEvolvedState::eval(double x, double t,
                                                   bool deriv) const {
  cdouble val{0, 0}, dval{0, 0};
  if (t == 0.0) {
    for (const auto& c : comps_) {
      val += c.part.value_at(x);
      if (deriv) dval += interp_value(grid_, spectral_derivative(c.part).samples(), x);
    }
    return {val, dval};
  }
  for (const auto& c : comps_) {
    const double radius =
        c.k_screen * p_.hbar * std::abs(t) / p_.mass + 2.0 + 8.0 * grid_.dx();
    int wlo = std::max(c.lo_cell, grid_.cell(x - radius));
    int whi = std::min(c.hi_cell, grid_.cell(x + radius) + 1);
    if (wlo >= whi) continue;  // screened: no momentum reaches here
    // never cut the window where the data still has weight
    const double floor = 1e-13 * c.peak;
    const auto& s = c.part.samples();
    while (wlo > c.lo_cell && std::abs(s[wlo]) > floor) --wlo;
    while (whi < c.hi_cell && std::abs(s[whi - 1]) > floor) ++whi;
    const auto [v, dv] = propagator_quadrature(c.part, wlo, whi, x, t, p_, deriv);
    val += v;
    dval += dv;
  }
  return {val, dval};
}

cdouble FreeEvolvedState::value(double x, double t) const {
  return eval(x, t, false).first;
}

std::pair<cdouble, cdouble> FreeEvolvedState::value_and_derivative(
    double x, double t) const {
  return eval(x, t, true);
}

double FreeEvolvedState::density(double x, double t) const {
  return std::norm(value(x, t));
}

double FreeEvolvedState::TailTable::tail_at(double x) const {
  if (x <= a) return suffix.front();
  if (x >= b) return suffix.back();
  const int i = std::min<int>(static_cast<int>((x - a) / dx),
                              static_cast<int>(rho.size()) - 1);
  return suffix[i + 1] + (a + (i + 1) * dx - x) * rho[i];
}

double FreeEvolvedState::TailTable::invert(double tail_level) const {
  if (tail_level >= suffix.front()) return a;
  if (tail_level <= suffix.back()) return b;
  // smallest i with suffix[i+1] <= level
  int lo = 0, hi = static_cast<int>(rho.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (suffix[mid + 1] <= tail_level)
      hi = mid;
    else
      lo = mid + 1;
  }
  if (rho[lo] <= 0.0) return a + lo * dx;
  return a + (lo + 1) * dx - (tail_level - suffix[lo + 1]) / rho[lo];
}

void FreeEvolvedState::add_table_values(const Comp& c, double t, double a,
                                        double dx_t,
                                        std::vector<cdouble>& values) const {
  const int m = static_cast<int>(values.size());
  const bool par = kernels::detail::parallel();

  if (c.smooth) {
    // band-limited evolution, interpolated onto the table; zero beyond the
    // momentum reach of the component
    const WaveFunction wf_t = c.evolver->state_at(t);
    const double reach = c.k_screen * p_.hbar * std::abs(t) / p_.mass + 2.0;
    const double lo = grid_.x(c.lo_cell) - reach;
    const double hi = grid_.x(c.hi_cell) + reach;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
      const double xm = a + (i + 0.5) * dx_t;
      if (xm < lo || xm > hi || xm < grid_.x_min || xm > grid_.x_max) continue;
      values[i] += wf_t.value_at(xm);
    }
    return;
  }

  // Chirp transform of the sample polyline over the trimmed support. The
  // quadratic kernel phase is resolved by refining the source grid; the
  // polyline is exactly representable on the refined grid, so only the chirp
  // sampling improves.
  const double alpha = p_.mass / (2.0 * p_.hbar * t);
  const double x_lo = grid_.x(c.lo_cell);
  const double x_hi = grid_.x(c.hi_cell);
  const double xabs = std::max(std::abs(x_lo), std::abs(x_hi));
  const int refine = std::clamp(
      static_cast<int>(std::ceil(2.0 * std::abs(alpha) * xabs * grid_.dx() / 0.35)),
      1, 256);
  const double dxr = grid_.dx() / refine;
  const int nr = (c.hi_cell - c.lo_cell) * refine + 1;
  std::vector<cdouble> h(nr);
  const auto& s = c.part.samples();
  for (int i = 0; i < nr; ++i) {
    const int cell = c.lo_cell + i / refine;
    const double frac = static_cast<double>(i % refine) / refine;
    const cdouble left = s[cell];
    const cdouble right =
        (cell + 1 < grid_.n) ? s[cell + 1] : cdouble{0, 0};
    const cdouble val = left + frac * (right - left);
    const double xi = x_lo + i * dxr;
    h[i] = val * std::polar(1.0, std::fmod(alpha * xi * xi, 2.0 * kPi));
  }
  const double x_first = a + 0.5 * dx_t;
  const double theta0 = 2.0 * alpha * x_first * dxr;
  const double dtheta = 2.0 * alpha * dx_t * dxr;
  const auto czt = detail::chirp_transform(h, theta0, dtheta, m);
  const cdouble prefactor =
      std::sqrt(cdouble(0.0, -p_.mass / (2.0 * kPi * p_.hbar * t)));
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    const double xm = a + (i + 0.5) * dx_t;
    const double omega = 2.0 * alpha * xm;
    const double half = 0.5 * omega * dxr;
    const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
    const double phase = std::fmod(alpha * xm * xm, 2.0 * kPi) -
                         std::fmod(omega * x_lo, 2.0 * kPi);
    values[i] += prefactor * std::polar(dxr * sinc * sinc, phase) * czt[i];
  }
}

FreeEvolvedState::TailTable FreeEvolvedState::tail_table(double t, double a,
                                                         double b,
                                                         int max_points) const {
  TailTable table;
  table.t = t;
  table.a = a;
  table.b = b;
  const double structure = std::max(kPi * std::abs(t) / 8.0, 1e-3);
  int m = static_cast<int>(std::ceil((b - a) / structure));
  m = std::clamp(m, 512, max_points);
  table.dx = (b - a) / m;
  table.rho.assign(m, 0.0);

  std::vector<cdouble> values(m, cdouble{0, 0});
  for (const auto& c : comps_) add_table_values(c, t, a, table.dx, values);
  for (int i = 0; i < m; ++i) table.rho[i] = std::norm(values[i]);

  // power-law closure for the mass beyond b, fitted on the last two bands
  const int band = std::max(8, m / 10);
  double r1 = 0.0, r2 = 0.0;
  for (int i = m - band; i < m; ++i) r2 += table.rho[i];
  for (int i = m - 2 * band; i < m - band; ++i) r1 += table.rho[i];
  double closure = 0.0;
  if (r1 > 0.0 && r2 > 0.0 && r2 < r1) {
    const double x1 = a + (m - 1.5 * band) * table.dx;
    const double x2 = a + (m - 0.5 * band) * table.dx;
    const double pfit =
        std::clamp(std::log(r1 / r2) / std::log(x2 / x1), 2.1, 10.0);
    closure = (r2 / band) * b / (pfit - 1.0);
  }
  table.suffix.assign(m + 1, 0.0);
  table.suffix[m] = closure;
  for (int i = m - 1; i >= 0; --i)
    table.suffix[i] = table.suffix[i + 1] + table.rho[i] * table.dx;
  return table;
}

}  // namespace detail

// ---- invader runs ---------------------------------------------------------------

namespace {

// Wraparound floor: tail levels below ~50x the momentum mass that can cross
// the periodic box within t1 cannot be tracked on the grid.
double wrap_floor(const WaveFunction& wf, PhysicsParams p, double x0, double t1) {
  std::vector<cdouble> spec = wf.samples();
  detail::fft_forward(spec);
  const Grid& g = wf.grid();
  const double dk = 2.0 * kPi / (g.x_max - g.x_min);
  const double k_wrap = (g.x_max - x0) / t1 * p.mass / p.hbar;
  double mass = 0.0;
  const double mass_scale = g.dx() / g.n;
  for (int j = 0; j < g.n; ++j) {
    const int f = (j <= g.n / 2) ? j : j - g.n;
    if (std::abs(f) * dk >= k_wrap) mass += std::norm(spec[j]) * mass_scale;
  }
  return 50.0 * mass + 1e-15;
}

struct FarTrack {
  std::vector<double> times;
  std::vector<double> positions;
  double max_drift = 0.0;
  bool escaped = false;
};

// Tracks tail(x(t), t) = level against the exact free far-field evolution.
// times must be positive except possibly a leading/trailing 0 handled by the
// caller. Positions are solved by tail-table inversion around a warm start.
FarTrack far_track(const detail::FreeEvolvedState& far, const DensityProfile& prof0,
                   double level, double x0, const std::vector<double>& times,
                   const Grid& g) {
  FarTrack out;
  double x_prev = x0;
  for (double t : times) {
    if (t == 0.0) {
      const double x = prof0.quantile_by_tail(level);
      out.times.push_back(t);
      out.positions.push_back(x);
      out.max_drift = std::max(out.max_drift, std::abs(prof0.tail(x) - level));
      x_prev = std::max(x, x0);
      continue;
    }
    double a = std::max(g.x_min, std::min(x_prev - 10.0, x_prev * 0.5));
    double b = std::max({x_prev * 8.0, a + 100.0, g.x_max * 0.25});
    double x = std::numeric_limits<double>::quiet_NaN();
    double drift = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const auto table = far.tail_table(t, a, b, 16384);
      if (table.suffix.front() < level) {
        // bracket missing on the left: the quantile is before a
        a = std::max(g.x_min, a - (b - a));
        continue;
      }
      if (level <= 2.0 * table.suffix.back()) {
        // too close to the closure mass: extend right
        b *= 2.5;
        continue;
      }
      x = table.invert(level);
      drift = std::abs(table.tail_at(x) - level);
      break;
    }
    if (!std::isfinite(x))
      throw std::runtime_error("far-field quantile search failed to bracket");
    out.times.push_back(t);
    out.positions.push_back(x);
    out.max_drift = std::max(out.max_drift, drift);
    x_prev = x;
  }
  return out;
}

}  // namespace

InvaderReport invader_run(const WaveFunction& psi, const PerturbationSpec& spec,
                          PhysicsParams p, double x0, double t1,
                          const std::vector<double>& eps_list, int time_samples) {
  if (time_samples < 2) throw std::invalid_argument("need at least 2 time samples");
  if (!(t1 > 0)) throw std::invalid_argument("t1 must be positive");
  const Perturbation pert = perturb(psi, spec);
  if (pert.already_full_support || pert.grade_truncated)
    throw std::invalid_argument("invader scenario needs a genuine perturbation");
  if (std::abs(psi.value_at(x0)) > spec.zero_tol)
    throw std::invalid_argument("invader x0 must lie outside the support of psi");
  const auto& theta = pert.state.components().back().part;
  if (std::abs(theta.value_at(x0)) == 0.0)
    throw std::invalid_argument("theta must not vanish at x0 (postulate 5)");

  const Grid& g = psi.grid();
  InvaderReport report;
  {
    const GradedDensityProfile gprof(pert.state);
    report.graded_level = gprof.total() - gprof.cdf(x0);
  }

  std::vector<double> times(time_samples);
  for (int i = 0; i < time_samples; ++i)
    times[i] = t1 * i / (time_samples - 1);

  for (double e : eps_list) {
    InvaderEpsResult res;
    res.eps = e;
    const WaveFunction wf0 = pert.state.instantiate(e);
    const DensityProfile prof0(wf0);
    res.level = prof0.tail(x0);
    const double floor = wrap_floor(wf0, p, x0, t1);

    if (res.level >= floor) {
      // grid tracking: exact free evolution of the band-limited samples
      const FreeSpectralEvolver evolver(wf0, p);
      res.far_field = false;
      for (double t : times) {
        const DensityProfile prof = t == 0.0 ? prof0 : DensityProfile(evolver.state_at(t));
        const double x = prof.quantile_by_tail(res.level);
        res.trajectory.times.push_back(t);
        res.trajectory.positions.push_back(x);
        res.max_level_drift =
            std::max(res.max_level_drift, std::abs(prof.tail(x) - res.level));
      }
    } else {
      res.far_field = true;
      const detail::FreeEvolvedState far(pert.state, e, p);
      const FarTrack track = far_track(far, prof0, res.level, x0, times, g);
      res.trajectory.times = track.times;
      res.trajectory.positions = track.positions;
      res.max_level_drift = track.max_drift;
    }
    res.trajectory.mode = TrajectoryMode::concrete;
    res.x_t1 = res.trajectory.positions.back();
    res.escaped_grid = res.x_t1 > g.x_max;
    report.per_eps.push_back(std::move(res));
  }
  return report;
}

ReverseInvaderReport invader_reverse_run(const WaveFunction& psi,
                                         const PerturbationSpec& spec,
                                         PhysicsParams p, double x0, double t1,
                                         double eps, int time_samples) {
  const InvaderReport forward =
      invader_run(psi, spec, p, x0, t1, {eps}, time_samples);
  const auto& fwd = forward.per_eps.front();

  ReverseInvaderReport out;
  out.eps = eps;
  out.x_t1 = fwd.x_t1;

  const Perturbation pert = perturb(psi, spec);
  const WaveFunction wf0 = pert.state.instantiate(eps);
  const DensityProfile prof0(wf0);
  const detail::FreeEvolvedState far(pert.state, eps, p);

  // Re-derive the conserved level from the forward endpoint, then run the
  // dynamics in reverse: positions at decreasing times, ending with the grid
  // inversion of the initial state at t = 0.
  if (fwd.far_field) {
    double a = std::max(psi.grid().x_min, fwd.x_t1 * 0.5);
    double b = fwd.x_t1 * 8.0;
    const auto table = far.tail_table(t1, a, b, 16384);
    out.level_t1 = table.tail_at(fwd.x_t1);
  } else {
    const FreeSpectralEvolver evolver(wf0, p);
    out.level_t1 = DensityProfile(evolver.state_at(t1)).tail(fwd.x_t1);
  }

  std::vector<double> times(time_samples);
  for (int i = 0; i < time_samples; ++i)
    times[i] = t1 * (time_samples - 1 - i) / (time_samples - 1);

  if (fwd.far_field) {
    // warm-start from the forward endpoint; times decrease, so track with the
    // same machinery, seeding each solve from the previous position.
    FarTrack track = far_track(far, prof0, out.level_t1, fwd.x_t1, times,
                               psi.grid());
    out.trajectory.times = track.times;
    out.trajectory.positions = track.positions;
    out.max_level_drift = track.max_drift;
  } else {
    const FreeSpectralEvolver evolver(wf0, p);
    for (double t : times) {
      const DensityProfile prof =
          t == 0.0 ? prof0 : DensityProfile(evolver.state_at(t));
      const double x = prof.quantile_by_tail(out.level_t1);
      out.trajectory.times.push_back(t);
      out.trajectory.positions.push_back(x);
      out.max_level_drift =
          std::max(out.max_level_drift, std::abs(prof.tail(x) - out.level_t1));
    }
  }
  out.trajectory.mode = TrajectoryMode::concrete;
  out.x_return = out.trajectory.positions.back();
  return out;
}

}  // namespace pw
