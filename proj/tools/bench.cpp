// Kernel benchmark: OpenMP execution vs the serial reference, same arithmetic.
#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "pw/evolve.hpp"
#include "pw/kernels.hpp"
#include "pw/lab.hpp"

using pw::kernels::cdouble;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, int reps, const std::function<void()>& fn) {
  pw::kernels::set_exec_mode(pw::kernels::Exec::serial);
  const double serial = time_ms(reps, fn);
  pw::kernels::set_exec_mode(pw::kernels::Exec::omp);
  const double omp = time_ms(reps, fn);
  std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %.2fx\n", name,
              serial, omp, serial / omp);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", pw::kernels::max_threads());
  const std::size_t n = 1 << 20;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cdouble> a(n), b(n), phase(n);
  std::vector<double> re(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = {u(rng), u(rng)};
    b[i] = {u(rng), u(rng)};
    phase[i] = std::polar(1.0, u(rng));
  }

  report("apply_phase (1M)", 50,
         [&] { pw::kernels::apply_phase(a.data(), phase.data(), n); });
  report("pair_re (1M)", 50,
         [&] { pw::kernels::pair_re(a.data(), b.data(), re.data(), n); });
  report("sum_abs2 (1M)", 50, [&] {
    volatile double s = pw::kernels::sum_abs2(a.data(), n);
    (void)s;
  });

  const pw::Grid g = pw::Grid::make(-10, 10, 4096);
  pw::lab::InitSpec init;
  init.kind = "bump";
  init.lo = 0;
  init.hi = 1;
  const pw::WaveFunction psi = pw::lab::make_initial(init, g);
  report("propagator eval (far x)", 5, [&] {
    volatile double v = std::abs(pw::free_propagator_eval(psi, 300.0, 1.0, {}));
    (void)v;
  });

  const pw::WaveFunction gauss = [&] {
    pw::lab::InitSpec gi;
    gi.kind = "gaussian";
    gi.sigma = 1.0;
    return pw::lab::make_initial(gi, g);
  }();
  report("split_step x100 (4096)", 5, [&] {
    volatile double v =
        pw::norm2(pw::split_step(gauss, pw::HarmonicPotential{1.0}, {}, 1e-3, 100));
    (void)v;
  });
  return 0;
}
