#include <benchmark/benchmark.h>

#include "hsx/evaluation.hpp"
#include "hsx/geometry.hpp"
#include "hsx/losses.hpp"
#include "hsx/network.hpp"

using namespace hsx;

namespace {

Matrix gaussian(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.flat()) v = rng.normal();
  return m;
}

std::vector<std::size_t> labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = rng.uniform_index(k);
  return y;
}

void BM_DistArcForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Matrix x = gaussian(rng, n, 2);
  const auto y = labels(rng, n, k);
  const ProxyBank bank = ProxyBank::random(2, k, default_radii(k), rng);
  DistArcConfig cfg;
  cfg.margin = 0.4;
  cfg.lambda = 0.005;
  for (auto _ : state) benchmark::DoNotOptimize(distarc_forward(x, y, bank, cfg).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DistArcForward)->Args({64, 10})->Args({256, 10})->Args({256, 100});

void BM_DistArcBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const Matrix x = gaussian(rng, n, 2);
  const auto y = labels(rng, n, k);
  const ProxyBank bank = ProxyBank::random(2, k, default_radii(k), rng);
  DistArcConfig cfg;
  cfg.margin = 0.4;
  cfg.lambda = 0.005;
  const LossBreakdown fwd = distarc_forward(x, y, bank, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(distarc_backward(x, y, bank, cfg, fwd));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DistArcBackward)->Args({64, 10})->Args({256, 10})->Args({256, 100});

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  const MlpParams p = init_mlp({in, 256, 64, 2}, Activation::relu, rng);
  const Matrix x = gaussian(rng, n, in);
  const Matrix up = gaussian(rng, n, 2);
  for (auto _ : state) {
    ForwardCache cache;
    mlp_forward(p, x, &cache);
    benchmark::DoNotOptimize(mlp_backward(p, cache, up, false));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MlpForwardBackward)->Args({32, 2})->Args({32, 784});

void BM_PredictRadialAngular(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const ProxyBank bank = ProxyBank::random(2, k, default_radii(k), rng);
  const Matrix x = gaussian(rng, 1000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(predict_radial_angular(x, bank));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_PredictRadialAngular)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
