#include <benchmark/benchmark.h>

#include <vector>

#include "pwm/numerics/kernels.hpp"
#include "pwm/rng.hpp"

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  pwm::Rng rng(seed, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// args: batch, in, out
template <bool Reference>
void BM_AffineForward(benchmark::State& st) {
  const auto b = static_cast<std::size_t>(st.range(0)), in = static_cast<std::size_t>(st.range(1)),
             out = static_cast<std::size_t>(st.range(2));
  const auto x = random_vec(b * in, 1), w = random_vec(out * in, 2), bias = random_vec(out, 3);
  std::vector<double> y(b * out);
  for (auto _ : st) {
    if constexpr (Reference)
      pwm::kernels::reference::affine_forward(x.data(), w.data(), bias.data(), y.data(), b, in, out);
    else
      pwm::kernels::affine_forward(x.data(), w.data(), bias.data(), y.data(), b, in, out);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(static_cast<int64_t>(st.iterations() * b * in * out));
}

template <bool Reference>
void BM_AffineBackward(benchmark::State& st) {
  const auto b = static_cast<std::size_t>(st.range(0)), in = static_cast<std::size_t>(st.range(1)),
             out = static_cast<std::size_t>(st.range(2));
  const auto x = random_vec(b * in, 1), w = random_vec(out * in, 2), dy = random_vec(b * out, 3);
  std::vector<double> dx(b * in), dw(out * in), db(out);
  for (auto _ : st) {
    if constexpr (Reference)
      pwm::kernels::reference::affine_backward(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), b,
                                               in, out);
    else
      pwm::kernels::affine_backward(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), b, in, out);
    benchmark::ClobberMemory();
  }
  st.SetItemsProcessed(static_cast<int64_t>(st.iterations() * b * in * out));
}

// args: batch, hidden
template <bool Reference>
void BM_GruGates(benchmark::State& st) {
  const auto b = static_cast<std::size_t>(st.range(0)), h = static_cast<std::size_t>(st.range(1));
  const auto gx = random_vec(b * 3 * h, 1), gh = random_vec(b * 3 * h, 2), hid = random_vec(b * h, 3);
  std::vector<double> r(b * h), z(b * h), n(b * h), out(b * h);
  for (auto _ : st) {
    if constexpr (Reference)
      pwm::kernels::reference::gru_gates(gx.data(), gh.data(), hid.data(), r.data(), z.data(), n.data(), out.data(),
                                         b, h);
    else
      pwm::kernels::gru_gates(gx.data(), gh.data(), hid.data(), r.data(), z.data(), n.data(), out.data(), b, h);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(static_cast<int64_t>(st.iterations() * b * h));
}

// planner scoring shape (M candidates through a d_h=128 GRU) and a training batch
void affine_shapes(benchmark::internal::Benchmark* b) {
  b->Args({500, 6, 384})->Args({500, 128, 384})->Args({32, 128, 128})->Args({2000, 128, 4});
}

}  // namespace

BENCHMARK(BM_AffineForward<true>)->Apply(affine_shapes);
BENCHMARK(BM_AffineForward<false>)->Apply(affine_shapes);
BENCHMARK(BM_AffineBackward<true>)->Apply(affine_shapes);
BENCHMARK(BM_AffineBackward<false>)->Apply(affine_shapes);
BENCHMARK(BM_GruGates<true>)->Args({500, 128})->Args({32, 128});
BENCHMARK(BM_GruGates<false>)->Args({500, 128})->Args({32, 128});

BENCHMARK_MAIN();
