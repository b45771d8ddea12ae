#include <benchmark/benchmark.h>

#include "dualarm/roadmap.hpp"

using namespace dualarm;

namespace {

/// Synthetic safe graph of n uniform latent points with ring + KNN-ish edges.
LatentGraph synthetic_graph(int n, int degree, std::uint64_t seed) {
    LatentGraph graph;
    Rng rng(seed);
    graph.nodes.resize(static_cast<std::size_t>(n));
    for (auto& node : graph.nodes) {
        node.z = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        node.label = SafetyLabel::Safe;
    }
    graph.adjacency.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i) {
        for (int d = 1; d <= degree; ++d) {
            const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            if (j == i) continue;
            const double w = (graph.nodes[static_cast<std::size_t>(i)].z -
                              graph.nodes[static_cast<std::size_t>(j)].z)
                                 .norm();
            graph.adjacency[static_cast<std::size_t>(i)][j] = w;
            graph.adjacency[static_cast<std::size_t>(j)][i] = w;
        }
    }
    return graph;
}

void BM_DijkstraLargeGraph(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LatentGraph graph = synthetic_graph(n, 8, 3);
    Rng rng(4);
    for (auto _ : state) {
        PathQuery q;
        q.start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        q.goal = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        try {
            benchmark::DoNotOptimize(shortest_path(graph, q).weight);
        } catch (const NoPathError&) {
        }
    }
}
BENCHMARK(BM_DijkstraLargeGraph)->Arg(20000);

void BM_NearestSafeNode(benchmark::State& state) {
    const LatentGraph graph = synthetic_graph(20000, 8, 3);
    Rng rng(5);
    for (auto _ : state) {
        const Eigen::Vector2d z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        benchmark::DoNotOptimize(nearest_safe_node(graph, z));
    }
}
BENCHMARK(BM_NearestSafeNode);

}  // namespace
