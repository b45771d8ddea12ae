#ifndef DUALARM_GEOMETRY_HPP
#define DUALARM_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>

#include "dualarm/kinematics.hpp"

namespace dualarm {

/// A cuboid placed in the world: world_from_geom maps geometry-frame
/// coordinates (box axis-aligned, centered at origin) to world coordinates.
struct PosedCuboid {
    RigidTransform world_from_geom;
    Eigen::Vector3d half_extents;
};

/// Pose a link's cuboid given the link's world pose.
PosedCuboid posed(const Cuboid& cuboid, const RigidTransform& link_pose_world);

/// The eight world-frame corners of a posed cuboid.
std::array<Eigen::Vector3d, 8> cuboid_corners(const PosedCuboid& box);

/**
 * Minimum-distance result between two convex bodies (or two whole arms,
 * in which case the achieving link indices are set).
 */
struct ClosestPair {
    Eigen::Vector3d point_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d point_b = Eigen::Vector3d::Zero();
    double distance = 0.0;
    int link_a = -1;  // 1..6 when set by arm_pair_proximity
    int link_b = -1;
};

/**
 * Exact minimum Euclidean distance between two oriented boxes, computed
 * by GJK over their 8-vertex convex hulls. When the boxes are separated,
 * point_a/point_b are the closest points on each surface. When they
 * intersect (including touching), distance is exactly 0 and both points
 * coincide at a common point of the two bodies.
 *
 * Throws std::invalid_argument on a non-orthonormal pose.
 */
ClosestPair min_distance_obb(const PosedCuboid& box_a, const PosedCuboid& box_b);

/// Distance from a world point to a posed cuboid (0 inside), with the
/// closest point of the box.
double point_to_cuboid_distance(const Eigen::Vector3d& point_world, const PosedCuboid& box,
                                Eigen::Vector3d* closest = nullptr);

/**
 * Global minimum over all 6x6 inter-arm link-cuboid pairs. Ties are
 * resolved toward the lexicographically smallest (link_a, link_b).
 * Same-arm link pairs are never tested; only arm-vs-arm proximity is
 * defined here.
 */
ClosestPair arm_pair_proximity(const KinematicChain& chain_a, const JointConfig& config_a,
                               const KinematicChain& chain_b, const JointConfig& config_b);

/// True iff the two arms come within `clearance` meters of each other.
bool collides(const KinematicChain& chain_a, const JointConfig& config_a,
              const KinematicChain& chain_b, const JointConfig& config_b, double clearance);

}  // namespace dualarm

#endif  // DUALARM_GEOMETRY_HPP
