#include <benchmark/benchmark.h>

#include "dualarm/geometry.hpp"
#include "dualarm/rng.hpp"

using namespace dualarm;

namespace {

PosedCuboid random_box(Rng& rng) {
    PosedCuboid box;
    const Eigen::Vector3d axis =
        Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    box.world_from_geom.rotation = axis_angle_rotation(axis, rng.uniform(-kPi, kPi));
    box.world_from_geom.translation = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                                       rng.uniform(-1, 1)};
    box.half_extents = {rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)};
    return box;
}

void BM_MinDistanceObb(benchmark::State& state) {
    Rng rng(1);
    std::vector<std::pair<PosedCuboid, PosedCuboid>> pairs;
    for (int i = 0; i < 256; ++i) pairs.emplace_back(random_box(rng), random_box(rng));
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, b] = pairs[i++ % pairs.size()];
        benchmark::DoNotOptimize(min_distance_obb(a, b).distance);
    }
}
BENCHMARK(BM_MinDistanceObb);

void BM_ArmPairProximity(benchmark::State& state) {
    const KinematicChain chain_a = with_base(default_chain(), base_pose(0, 0, 0, 0));
    const KinematicChain chain_b = with_base(default_chain(), base_pose(0.62, 0, 0, kPi));
    Rng rng(2);
    std::vector<std::pair<JointConfig, JointConfig>> configs;
    for (int i = 0; i < 64; ++i) {
        JointConfig qa, qb;
        for (int j = 0; j < kNumLinks; ++j) {
            qa[j] = rng.uniform(-kPi, kPi);
            qb[j] = rng.uniform(-kPi, kPi);
        }
        configs.emplace_back(qa, qb);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [qa, qb] = configs[i++ % configs.size()];
        benchmark::DoNotOptimize(arm_pair_proximity(chain_a, qa, chain_b, qb).distance);
    }
}
BENCHMARK(BM_ArmPairProximity);

}  // namespace

BENCHMARK_MAIN();
