#ifndef DUALARM_DATASET_HPP
#define DUALARM_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dualarm/kinematics.hpp"
#include "dualarm/rng.hpp"

namespace dualarm {

/// A logged contact: arm_2 link index (2..6) and a world-frame point on
/// that link's cuboid surface.
struct CollisionContact {
    int link_b = 0;
    Eigen::Vector3d point_world = Eigen::Vector3d::Zero();
};

/**
 * One dataset row: a dual-arm pose pair, the binary collision flag
 * (0 = collided, 1 = safe), and, for collided rows, the contact points.
 * flag == 0 exactly when `collisions` is non-empty.
 */
struct Sample {
    JointConfig theta_a;
    JointConfig theta_b;
    int flag = 1;
    std::vector<CollisionContact> collisions;
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint64_t seed = 0;
};

/// Each angle uniform over its joint limits; deterministic given rng state.
JointConfig sample_random_config(const KinematicChain& chain, Rng& rng);

/**
 * Draw n pose pairs (both configs independent), label each by zero-clearance
 * arm-vs-arm collision, and log surface contact points on arm_2's links 2..6.
 *
 * Pose pairs whose only contact involves arm_2's base link are redrawn so
 * that every collided row carries at least one loggable contact; such
 * redraws are rare on the default scene and come out of the same per-sample
 * rng stream, keeping generation order-independent and reproducible.
 */
Dataset generate_dataset(const KinematicChain& chain_a, const KinematicChain& chain_b,
                         int n_samples, std::uint64_t seed);

/// Fraction of samples with flag == 0.
double collision_fraction(const Dataset& ds);

/// JSONL, one sample per line. Lossless round trip.
void write_dataset(const Dataset& ds, const std::string& path);

/// Throws std::runtime_error naming the 1-based line number on a malformed
/// or invariant-violating line.
Dataset read_dataset(const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_DATASET_HPP
