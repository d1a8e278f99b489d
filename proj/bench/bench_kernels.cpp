// Serial reference against the OpenMP kernels. Arg: OpenMP threads.

#include <random>

#include <omp.h>

#include <benchmark/benchmark.h>

#include "tda/reference.hpp"
#include "tda/trainer.hpp"

using namespace tda;

namespace {

constexpr std::size_t kBatch = 64, kDim = 784, kT = 4;

const TdaModel& mnist_like_model() {
  static const TdaModel m = [] {
    DelaySpec s;
    auto topo = std::make_shared<const AutapseTopology>(build_mlp_topology({64, 64}, s));
    return initialize_model(topo, LifParams{}, kT, Dynamics::PAPER, kDim, 10, 1);
  }();
  return m;
}

const EncodedBatch& batch() {
  static const EncodedBatch b = [] {
    Dataset ds;
    ds.samples = Matrix(kBatch, kDim);
    ds.n_classes = 10;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : ds.samples.data) v = u(rng) < 0.2 ? u(rng) : 0.0;  // sparse, MNIST-ish
    for (std::size_t i = 0; i < kBatch; ++i) ds.labels.push_back(i % 10);
    std::vector<std::size_t> idx(kBatch);
    for (std::size_t i = 0; i < kBatch; ++i) idx[i] = i;
    return encode_batch(ds, idx, kT);
  }();
  return b;
}

void BM_ReferenceForward(benchmark::State& st) {
  const TdaConfig& c = mnist_like_model().config;
  for (auto _ : st) benchmark::DoNotOptimize(reference_forward_batch(c, batch().inputs, kBatch));
  st.SetItemsProcessed(st.iterations() * kBatch);
}

void BM_ForwardBatch(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  const TdaConfig& c = mnist_like_model().config;
  for (auto _ : st) benchmark::DoNotOptimize(forward_batch(c, batch().inputs, kBatch));
  st.SetItemsProcessed(st.iterations() * kBatch);
}

void BM_BatchGradients(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(batch_gradients(mnist_like_model(), batch()));
  st.SetItemsProcessed(st.iterations() * kBatch);
}

}  // namespace

BENCHMARK(BM_ReferenceForward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchGradients)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
