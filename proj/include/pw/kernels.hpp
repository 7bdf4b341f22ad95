#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace pw::kernels {

using cdouble = std::complex<double>;

// Execution mode for the data-parallel kernels. The OpenMP variants are
// bit-identical to the serial ones: reductions accumulate fixed-size blocks
// and combine the partials in block order, so results do not depend on the
// mode or on the thread count.
enum class Exec { serial, omp };

Exec exec_mode();
void set_exec_mode(Exec mode);
Exec parse_exec(const std::string& name);  // "serial" | "omp"
int max_threads();
void set_threads(int n);

inline constexpr std::size_t kBlock = 2048;

// Pointwise
void apply_phase(cdouble* s, const cdouble* phase, std::size_t n);  // s[i] *= phase[i]
void axpy(cdouble a, const cdouble* x, cdouble* y, std::size_t n);  // y[i] += a*x[i]
void abs2(const cdouble* s, double* out, std::size_t n);
void pair_re(const cdouble* a, const cdouble* b, double* out, std::size_t n);  // Re(a*conj(b))

// Deterministic reductions
double sum(const double* a, std::size_t n);
double sum_abs2(const cdouble* s, std::size_t n);

namespace detail {
bool parallel();
}

// Blocked map-reduce over [0, n): f(i) -> double. Deterministic across modes.
template <class F>
double block_reduce(std::size_t n, F&& f) {
  if (n == 0) return 0.0;
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nb, 0.0);
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class F>
cdouble block_reduce_c(std::size_t n, F&& f) {
  if (n == 0) return {0.0, 0.0};
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<cdouble> partial(nb, cdouble{0.0, 0.0});
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    cdouble acc{0.0, 0.0};
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  cdouble total{0.0, 0.0};
  for (const cdouble& p : partial) total += p;
  return total;
}

}  // namespace pw::kernels
