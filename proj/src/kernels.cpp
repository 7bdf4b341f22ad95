#include "pw/kernels.hpp"

#include <omp.h>

#include <atomic>
#include <stdexcept>

namespace pw::kernels {

namespace {
std::atomic<Exec> g_mode{Exec::omp};
}

Exec exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(Exec mode) { g_mode.store(mode, std::memory_order_relaxed); }

Exec parse_exec(const std::string& name) {
  if (name == "serial") return Exec::serial;
  if (name == "omp") return Exec::omp;
  throw std::invalid_argument("unknown exec mode: " + name);
}

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(n); }

namespace detail {
bool parallel() { return exec_mode() == Exec::omp; }
}

void apply_phase(cdouble* s, const cdouble* phase, std::size_t n) {
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    s[i] *= phase[i];
}

void axpy(cdouble a, const cdouble* x, cdouble* y, std::size_t n) {
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] += a * x[i];
}

void abs2(const cdouble* s, double* out, std::size_t n) {
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = s[i].real() * s[i].real() + s[i].imag() * s[i].imag();
}

void pair_re(const cdouble* a, const cdouble* b, double* out, std::size_t n) {
  const bool par = detail::parallel();
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
}

double sum(const double* a, std::size_t n) {
  return block_reduce(n, [a](std::size_t i) { return a[i]; });
}

double sum_abs2(const cdouble* s, std::size_t n) {
  return block_reduce(n, [s](std::size_t i) {
    return s[i].real() * s[i].real() + s[i].imag() * s[i].imag();
  });
}

}  // namespace pw::kernels
