#include <benchmark/benchmark.h>

#include "dualarm/vae.hpp"

using namespace dualarm;

namespace {

void BM_VaeBatchGradients(benchmark::State& state) {
    const auto batch = static_cast<int>(state.range(0));
    VaeModel model = make_vae(13, {450, 250, 100}, 5);
    Rng rng(9);
    Eigen::MatrixXd X(13, batch), Eps(2, batch);
    for (int c = 0; c < batch; ++c) {
        for (int r = 0; r < 13; ++r) X(r, c) = rng.uniform(-1, 1);
        for (int r = 0; r < 2; ++r) Eps(r, c) = rng.normal();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(vae_gradients(model, X, Eps).mu_head.b.sum());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_VaeBatchGradients)->Arg(32)->Arg(128);

void BM_VaeEncode(benchmark::State& state) {
    VaeModel model = make_vae(13, {450, 250, 100}, 5);
    Rng rng(9);
    Eigen::VectorXd x(13);
    for (int r = 0; r < 13; ++r) x[r] = rng.uniform(-1, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(model, x).mu.sum());
    }
}
BENCHMARK(BM_VaeEncode);

}  // namespace
