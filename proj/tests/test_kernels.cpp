#include <doctest.h>

#include <random>
#include <vector>

#include "pw/kernels.hpp"

using namespace pw::kernels;

namespace {

struct ModeGuard {
  Exec saved = exec_mode();
  ~ModeGuard() { set_exec_mode(saved); }
};

std::vector<cdouble> random_complex(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cdouble> out(n);
  for (auto& v : out) v = {u(rng), u(rng)};
  return out;
}

}  // namespace

TEST_CASE("omp kernels are bit-identical to the serial reference") {
  ModeGuard guard;
  const std::size_t n = 3 * kBlock + 137;  // not a block multiple
  const auto a = random_complex(n, 1);
  const auto b = random_complex(n, 2);

  set_exec_mode(Exec::serial);
  auto sa = a;
  apply_phase(sa.data(), b.data(), n);
  const double sum_s = sum_abs2(a.data(), n);
  std::vector<double> re_s(n);
  pair_re(a.data(), b.data(), re_s.data(), n);
  const double red_s =
      block_reduce(n, [&](std::size_t i) { return a[i].real() * b[i].imag(); });

  set_exec_mode(Exec::omp);
  auto sb = a;
  apply_phase(sb.data(), b.data(), n);
  const double sum_o = sum_abs2(a.data(), n);
  std::vector<double> re_o(n);
  pair_re(a.data(), b.data(), re_o.data(), n);
  const double red_o =
      block_reduce(n, [&](std::size_t i) { return a[i].real() * b[i].imag(); });

  CHECK(sa == sb);
  CHECK(sum_s == sum_o);
  CHECK(re_s == re_o);
  CHECK(red_s == red_o);
}

TEST_CASE("reductions are independent of the thread count") {
  ModeGuard guard;
  set_exec_mode(Exec::omp);
  const std::size_t n = 5 * kBlock + 31;
  const auto a = random_complex(n, 3);

  const int hw = max_threads();
  set_threads(1);
  const double one = sum_abs2(a.data(), n);
  set_threads(hw);
  const double many = sum_abs2(a.data(), n);
  CHECK(one == many);
}

TEST_CASE("axpy and abs2 basics") {
  ModeGuard guard;
  set_exec_mode(Exec::serial);
  std::vector<cdouble> x = {{1, 0}, {0, 1}};
  std::vector<cdouble> y = {{0, 0}, {1, 0}};
  axpy({2, 0}, x.data(), y.data(), 2);
  CHECK(y[0] == cdouble{2, 0});
  CHECK(y[1] == cdouble{1, 2});
  std::vector<double> d(2);
  abs2(y.data(), d.data(), 2);
  CHECK(d[0] == 4.0);
  CHECK(d[1] == 5.0);
}

TEST_CASE("exec mode parsing") {
  CHECK(parse_exec("serial") == Exec::serial);
  CHECK(parse_exec("omp") == Exec::omp);
  CHECK_THROWS_AS(parse_exec("gpu"), std::invalid_argument);
}
