#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "pw/hyperreal.hpp"
#include "pw/rational.hpp"

namespace pw {

using cdouble = std::complex<double>;

/// Uniform spatial grid with n sample points x_j = x_min + j*dx, dx = span/n.
/// The last cell [x_{n-1}, x_max) closes the periodic domain.
struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  int n = 16;

  static Grid make(double x_min, double x_max, int n);  // validates

  double dx() const { return (x_max - x_min) / n; }
  double x(int j) const { return x_min + j * dx(); }
  bool contains(double x) const { return x >= x_min && x <= x_max; }
  /// Cell index of x, clamped to [0, n-1].
  int cell(double x) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Complex samples on a grid. Immutable after construction; finite entries only.
class WaveFunction {
 public:
  WaveFunction(Grid grid, std::vector<cdouble> samples);
  static WaveFunction zero(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const std::vector<cdouble>& samples() const { return samples_; }
  int n() const { return grid_.n; }

  /// Linear interpolation between samples (periodic across the seam).
  cdouble value_at(double x) const;

 private:
  Grid grid_;
  std::vector<cdouble> samples_;
};

/// Linear interpolation of raw samples (periodic across the seam).
cdouble interp_value(const Grid& grid, const std::vector<cdouble>& samples,
                     double x);

/// Riemann sum of |psi|^2 over the grid.
double norm2(const WaveFunction& wf);

WaveFunction normalized(const WaveFunction& wf);

/// Finite union of disjoint closed intervals, kept sorted.
class IntervalUnion {
 public:
  struct Interval {
    double lo, hi;
  };

  IntervalUnion() = default;
  /// Sorts and validates pairwise disjointness.
  explicit IntervalUnion(std::vector<Interval> intervals);
  static IntervalUnion whole(const Grid& grid);

  const std::vector<Interval>& intervals() const { return parts_; }
  bool empty() const { return parts_.empty(); }

 private:
  std::vector<Interval> parts_;
};

/// Boolean per grid point; marks the zero set E = {x : psi(x) = 0}.
struct ZeroSetMask {
  Grid grid;
  std::vector<std::uint8_t> mask;

  std::size_t count() const;
  bool any() const { return count() > 0; }
};

/// A sum of eps-graded wavefunction parts: psi~(x) = sum_i scalar_i * eps^{e_i} * part_i(x),
/// with strictly increasing exponents e_i >= 0 and hyperreal scalar weights.
class GradedWaveFunction {
 public:
  struct Component {
    Rat exponent;
    HyperReal scalar;
    WaveFunction part;
  };

  /// A flattened view: the scalars' own eps-series folded into the exponents,
  /// leaving plain complex parts q_m at strictly increasing exponents f_m.
  struct FlatComponent {
    Rat exponent;
    std::vector<cdouble> part;
  };

  GradedWaveFunction(std::vector<Component> components,
                     Rat order_cap = HyperReal::default_order_cap());
  static GradedWaveFunction pure(WaveFunction wf,
                                 Rat order_cap = HyperReal::default_order_cap());

  const Grid& grid() const { return grid_; }
  const Rat& order_cap() const { return cap_; }
  const std::vector<Component>& components() const { return comps_; }
  const std::vector<FlatComponent>& flattened() const { return flat_; }

  /// Concrete numeric state at eps := eps_value.
  WaveFunction instantiate(double eps_value) const;

 private:
  Grid grid_;
  Rat cap_;
  std::vector<Component> comps_;
  std::vector<FlatComponent> flat_;
};

/// Precomputed quadrature tables for the graded density |psi~|^2: one weight
/// array per eps-order, with prefix sums for interval integrals and the CDF.
/// Each sample's density covers its cell, so interval measures are exactly
/// additive and the CDF is continuous and piecewise linear.
class GradedDensityProfile {
 public:
  explicit GradedDensityProfile(const GradedWaveFunction& gwf);

  HyperReal density(double x) const;  // from interpolated complex parts
  HyperReal density_at_node(int j) const;
  HyperReal cdf(double x) const;
  HyperReal integral(const IntervalUnion& f) const;
  HyperReal total() const;

 private:
  Grid grid_;
  Rat cap_;
  const GradedWaveFunction* source_;
  struct Entry {
    Rat exponent;
    std::vector<double> w;       // density weight at each cell
    std::vector<double> prefix;  // prefix[j] = sum_{l<j} w[l]*dx
  };
  std::vector<Entry> entries_;

  double entry_cdf(const Entry& e, double x) const;
};

/// Real-valued density tables for a concrete wavefunction, with both prefix
/// and suffix accumulations so quantiles near either end keep full precision.
class DensityProfile {
 public:
  explicit DensityProfile(const WaveFunction& wf);

  const Grid& grid() const { return grid_; }
  double density(double x) const;
  double cdf(double x) const;
  double tail(double x) const;  // mass strictly to the right, suffix-accumulated
  double total() const { return total_; }

  /// Smallest x with cdf(x) = level (piecewise-linear inversion).
  double quantile(double level) const;
  /// Largest x with tail(x) = tail_level, solved from the right.
  double quantile_by_tail(double tail_level) const;

 private:
  Grid grid_;
  std::vector<double> rho_;
  std::vector<double> prefix_;  // size n+1
  std::vector<double> suffix_;  // size n+1
  double total_ = 0.0;

  double from_coord(double u) const;  // inverse of the cell coordinate
};

// Spec-level operations on graded states (one-shot; build a profile for
// repeated queries).
HyperReal graded_density(const GradedWaveFunction& gwf, double x);
HyperReal integral_over(const GradedWaveFunction& gwf, const IntervalUnion& f);
HyperReal cdf(const GradedWaveFunction& gwf, double x);

/// Hyperreal L2 distance sqrt(integral |g1-g2|^2); shared grid and cap.
HyperReal l2_distance(const GradedWaveFunction& g1, const GradedWaveFunction& g2);

/// Inverse-CDF sample through |psi|^2. Requires u in [0,1].
double sample_initial_position(const WaveFunction& wf, double u);

}  // namespace pw
