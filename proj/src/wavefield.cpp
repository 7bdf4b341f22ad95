#include "pw/wavefield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pw/kernels.hpp"

namespace pw {

Grid Grid::make(double x_min, double x_max, int n) {
  if (!(x_min < x_max)) throw std::invalid_argument("grid requires x_min < x_max");
  if (n < 16) throw std::invalid_argument("grid requires n >= 16");
  return Grid{x_min, x_max, n};
}

int Grid::cell(double x) const {
  const int j = static_cast<int>(std::floor((x - x_min) / dx()));
  return std::clamp(j, 0, n - 1);
}

WaveFunction::WaveFunction(Grid grid, std::vector<cdouble> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (static_cast<int>(samples_.size()) != grid_.n)
    throw std::invalid_argument("sample count does not match grid");
  for (const auto& s : samples_)
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw std::invalid_argument("non-finite wavefunction sample");
}

WaveFunction WaveFunction::zero(const Grid& grid) {
  return WaveFunction(grid, std::vector<cdouble>(grid.n, cdouble{0.0, 0.0}));
}

cdouble interp_value(const Grid& grid, const std::vector<cdouble>& samples,
                     double x) {
  const double xc = std::clamp(x, grid.x_min, grid.x_max);
  const int j = grid.cell(xc);
  const double frac = (xc - grid.x(j)) / grid.dx();
  const cdouble left = samples[j];
  const cdouble right = samples[(j + 1) % grid.n];
  return left + frac * (right - left);
}

cdouble WaveFunction::value_at(double x) const {
  return interp_value(grid_, samples_, x);
}

double norm2(const WaveFunction& wf) {
  return kernels::sum_abs2(wf.samples().data(), wf.samples().size()) *
         wf.grid().dx();
}

WaveFunction normalized(const WaveFunction& wf) {
  const double n2 = norm2(wf);
  if (n2 <= 0.0) throw std::domain_error("cannot normalize the zero function");
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<cdouble> s = wf.samples();
  for (auto& v : s) v *= inv;
  return WaveFunction(wf.grid(), std::move(s));
}

IntervalUnion::IntervalUnion(std::vector<Interval> intervals)
    : parts_(std::move(intervals)) {
  for (const auto& iv : parts_)
    if (!(iv.lo <= iv.hi)) throw std::invalid_argument("interval with lo > hi");
  std::sort(parts_.begin(), parts_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < parts_.size(); ++i)
    if (!(parts_[i - 1].hi < parts_[i].lo))
      throw std::invalid_argument("intervals are not pairwise disjoint");
}

IntervalUnion IntervalUnion::whole(const Grid& grid) {
  return IntervalUnion({{grid.x_min, grid.x_max}});
}

std::size_t ZeroSetMask::count() const {
  std::size_t c = 0;
  for (auto b : mask) c += (b != 0);
  return c;
}

GradedWaveFunction::GradedWaveFunction(std::vector<Component> components,
                                       Rat order_cap)
    : cap_(std::move(order_cap)), comps_(std::move(components)) {
  if (comps_.empty())
    throw std::invalid_argument("graded wavefunction needs at least one component");
  grid_ = comps_.front().part.grid();
  for (std::size_t i = 0; i < comps_.size(); ++i) {
    const auto& c = comps_[i];
    if (!(c.part.grid() == grid_))
      throw std::invalid_argument("graded components must share one grid");
    if (c.exponent < Rat(0))
      throw std::invalid_argument("graded exponents must be >= 0");
    if (i > 0 && !(comps_[i - 1].exponent < c.exponent))
      throw std::invalid_argument("graded exponents must be strictly increasing");
    if (c.scalar.order_cap() != cap_)
      throw std::invalid_argument("component scalar has a different order cap");
  }

  // Fold the scalars' eps-series into the exponents.
  std::map<Rat, std::vector<cdouble>> acc;
  for (const auto& c : comps_) {
    for (const auto& t : c.scalar.terms()) {
      const Rat e = c.exponent + t.exponent;
      if (e > cap_) continue;
      auto& dst = acc[e];
      if (dst.empty()) dst.assign(grid_.n, cdouble{0.0, 0.0});
      const auto& src = c.part.samples();
      for (int j = 0; j < grid_.n; ++j) dst[j] += t.coefficient * src[j];
    }
  }
  for (auto& [e, part] : acc) flat_.push_back({e, std::move(part)});
}

GradedWaveFunction GradedWaveFunction::pure(WaveFunction wf, Rat order_cap) {
  std::vector<Component> comps;
  comps.push_back({Rat(0), HyperReal(1.0, order_cap), std::move(wf)});
  return GradedWaveFunction(std::move(comps), std::move(order_cap));
}

WaveFunction GradedWaveFunction::instantiate(double eps_value) const {
  if (!(eps_value > 0.0 && eps_value < 1.0))
    throw std::invalid_argument("instantiate requires 0 < eps_value < 1");
  std::vector<cdouble> out(grid_.n, cdouble{0.0, 0.0});
  for (const auto& fc : flat_) {
    const double a = std::pow(eps_value, to_double(fc.exponent));
    kernels::axpy(cdouble{a, 0.0}, fc.part.data(), out.data(), out.size());
  }
  return WaveFunction(grid_, std::move(out));
}

GradedDensityProfile::GradedDensityProfile(const GradedWaveFunction& gwf)
    : grid_(gwf.grid()), cap_(gwf.order_cap()), source_(&gwf) {
  const auto& flat = gwf.flattened();
  std::map<Rat, std::vector<double>> acc;
  std::vector<double> tmp(grid_.n);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = i; j < flat.size(); ++j) {
      const Rat e = flat[i].exponent + flat[j].exponent;
      if (e > cap_) continue;
      if (i == j) {
        kernels::abs2(flat[i].part.data(), tmp.data(), tmp.size());
      } else {
        kernels::pair_re(flat[i].part.data(), flat[j].part.data(), tmp.data(),
                         tmp.size());
        for (auto& v : tmp) v *= 2.0;
      }
      auto& dst = acc[e];
      if (dst.empty()) dst.assign(grid_.n, 0.0);
      for (int k = 0; k < grid_.n; ++k) dst[k] += tmp[k];
    }
  }
  const double dx = grid_.dx();
  for (auto& [e, w] : acc) {
    Entry entry;
    entry.exponent = e;
    entry.prefix.resize(grid_.n + 1);
    entry.prefix[0] = 0.0;
    for (int k = 0; k < grid_.n; ++k)
      entry.prefix[k + 1] = entry.prefix[k] + w[k] * dx;
    entry.w = std::move(w);
    entries_.push_back(std::move(entry));
  }
}

// Each sample's density covers the cell centered on it (midpoint rule), so
// interval measures have no O(dx) bias for smooth densities. u is the
// continuous cell coordinate: cell j spans u in [j, j+1).
static double cell_coord(const Grid& g, double x) {
  const double u = (x - g.x_min) / g.dx() + 0.5;
  return std::clamp(u, 0.0, static_cast<double>(g.n));
}

double GradedDensityProfile::entry_cdf(const Entry& e, double x) const {
  if (x <= grid_.x_min) return 0.0;
  if (x >= grid_.x_max) return e.prefix[grid_.n];
  const double u = cell_coord(grid_, x);
  const int j = std::min(static_cast<int>(u), grid_.n - 1);
  return e.prefix[j] + (u - j) * e.w[j] * grid_.dx();
}

HyperReal GradedDensityProfile::density(double x) const {
  const auto& flat = source_->flattened();
  std::vector<cdouble> vals(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i)
    vals[i] = interp_value(grid_, flat[i].part, x);
  std::vector<HyperReal::Term> terms;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = i; j < flat.size(); ++j) {
      const Rat e = flat[i].exponent + flat[j].exponent;
      if (e > cap_) continue;
      const double re = vals[i].real() * vals[j].real() +
                        vals[i].imag() * vals[j].imag();
      terms.push_back({e, (i == j) ? re : 2.0 * re});
    }
  }
  return HyperReal::from_terms(std::move(terms), cap_);
}

HyperReal GradedDensityProfile::density_at_node(int j) const {
  std::vector<HyperReal::Term> terms;
  terms.reserve(entries_.size());
  for (const auto& e : entries_) terms.push_back({e.exponent, e.w[j]});
  return HyperReal::from_terms(std::move(terms), cap_);
}

HyperReal GradedDensityProfile::cdf(double x) const {
  std::vector<HyperReal::Term> terms;
  terms.reserve(entries_.size());
  for (const auto& e : entries_) terms.push_back({e.exponent, entry_cdf(e, x)});
  return HyperReal::from_terms(std::move(terms), cap_);
}

HyperReal GradedDensityProfile::integral(const IntervalUnion& f) const {
  std::vector<HyperReal::Term> terms;
  terms.reserve(entries_.size());
  for (const auto& e : entries_) {
    double v = 0.0;
    for (const auto& iv : f.intervals())
      v += entry_cdf(e, iv.hi) - entry_cdf(e, iv.lo);
    terms.push_back({e.exponent, v});
  }
  return HyperReal::from_terms(std::move(terms), cap_);
}

HyperReal GradedDensityProfile::total() const {
  std::vector<HyperReal::Term> terms;
  terms.reserve(entries_.size());
  for (const auto& e : entries_)
    terms.push_back({e.exponent, e.prefix[grid_.n]});
  return HyperReal::from_terms(std::move(terms), cap_);
}

DensityProfile::DensityProfile(const WaveFunction& wf) : grid_(wf.grid()) {
  rho_.resize(grid_.n);
  kernels::abs2(wf.samples().data(), rho_.data(), rho_.size());
  const double dx = grid_.dx();
  prefix_.resize(grid_.n + 1);
  suffix_.resize(grid_.n + 1);
  prefix_[0] = 0.0;
  for (int k = 0; k < grid_.n; ++k) prefix_[k + 1] = prefix_[k] + rho_[k] * dx;
  suffix_[grid_.n] = 0.0;
  for (int k = grid_.n - 1; k >= 0; --k) suffix_[k] = suffix_[k + 1] + rho_[k] * dx;
  total_ = prefix_[grid_.n];
}

double DensityProfile::density(double x) const {
  const double u = cell_coord(grid_, x);
  return rho_[std::min(static_cast<int>(u), grid_.n - 1)];
}

double DensityProfile::cdf(double x) const {
  if (x <= grid_.x_min) return 0.0;
  if (x >= grid_.x_max) return total_;
  const double u = cell_coord(grid_, x);
  const int j = std::min(static_cast<int>(u), grid_.n - 1);
  return prefix_[j] + (u - j) * rho_[j] * grid_.dx();
}

double DensityProfile::tail(double x) const {
  if (x <= grid_.x_min) return suffix_[0];
  if (x >= grid_.x_max) return 0.0;
  const double u = cell_coord(grid_, x);
  const int j = std::min(static_cast<int>(u), grid_.n - 1);
  return suffix_[j + 1] + (j + 1 - u) * rho_[j] * grid_.dx();
}

double DensityProfile::from_coord(double u) const {
  return std::clamp(grid_.x_min + (u - 0.5) * grid_.dx(), grid_.x_min,
                    grid_.x_max);
}

double DensityProfile::quantile(double level) const {
  if (level <= 0.0) {
    for (int j = 0; j < grid_.n; ++j)
      if (rho_[j] > 0.0) return from_coord(j);
    return grid_.x_min;
  }
  if (level >= total_) {
    for (int j = grid_.n - 1; j >= 0; --j)
      if (rho_[j] > 0.0) return from_coord(j + 1);
    return grid_.x_max;
  }
  // smallest j with prefix[j+1] >= level
  int lo = 0, hi = grid_.n - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (prefix_[mid + 1] >= level)
      hi = mid;
    else
      lo = mid + 1;
  }
  if (rho_[lo] <= 0.0) return from_coord(lo);
  return from_coord(lo + (level - prefix_[lo]) / (rho_[lo] * grid_.dx()));
}

double DensityProfile::quantile_by_tail(double tail_level) const {
  if (tail_level <= 0.0) {
    for (int j = grid_.n - 1; j >= 0; --j)
      if (rho_[j] > 0.0) return from_coord(j + 1);
    return grid_.x_max;
  }
  if (tail_level >= total_) {
    for (int j = 0; j < grid_.n; ++j)
      if (rho_[j] > 0.0) return from_coord(j);
    return grid_.x_min;
  }
  // smallest j with suffix[j+1] <= tail_level
  int lo = 0, hi = grid_.n - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (suffix_[mid + 1] <= tail_level)
      hi = mid;
    else
      lo = mid + 1;
  }
  if (rho_[lo] <= 0.0) return from_coord(lo + 1);
  return from_coord(lo + 1 - (tail_level - suffix_[lo + 1]) / (rho_[lo] * grid_.dx()));
}

HyperReal graded_density(const GradedWaveFunction& gwf, double x) {
  return GradedDensityProfile(gwf).density(x);
}

HyperReal integral_over(const GradedWaveFunction& gwf, const IntervalUnion& f) {
  return GradedDensityProfile(gwf).integral(f);
}

HyperReal cdf(const GradedWaveFunction& gwf, double x) {
  return GradedDensityProfile(gwf).cdf(x);
}

HyperReal l2_distance(const GradedWaveFunction& g1, const GradedWaveFunction& g2) {
  if (!(g1.grid() == g2.grid()))
    throw std::invalid_argument("l2_distance requires a shared grid");
  if (g1.order_cap() != g2.order_cap())
    throw std::invalid_argument("l2_distance requires a shared order cap");
  std::map<Rat, std::vector<cdouble>> acc;
  const auto fold = [&](const GradedWaveFunction& g, double sign) {
    for (const auto& fc : g.flattened()) {
      auto& dst = acc[fc.exponent];
      if (dst.empty()) dst.assign(g.grid().n, cdouble{0.0, 0.0});
      for (int j = 0; j < g.grid().n; ++j) dst[j] += sign * fc.part[j];
    }
  };
  fold(g1, 1.0);
  fold(g2, -1.0);

  std::vector<GradedWaveFunction::Component> comps;
  for (auto& [e, part] : acc)
    comps.push_back({e, HyperReal(1.0, g1.order_cap()),
                     WaveFunction(g1.grid(), std::move(part))});
  if (comps.empty()) return HyperReal(0.0, g1.order_cap());
  const GradedWaveFunction diff(std::move(comps), g1.order_cap());
  return sqrt(GradedDensityProfile(diff).total());
}

double sample_initial_position(const WaveFunction& wf, double u) {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::invalid_argument("sample_initial_position requires u in [0,1]");
  const DensityProfile profile(wf);
  return profile.quantile(u * profile.total());
}

}  // namespace pw
