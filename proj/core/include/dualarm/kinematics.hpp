#ifndef DUALARM_KINEMATICS_HPP
#define DUALARM_KINEMATICS_HPP

#include <Eigen/Dense>
#include <array>
#include <string>

namespace dualarm {

inline constexpr int kNumLinks = 6;
inline constexpr double kPi = 3.14159265358979323846;

/// Six joint angles of one arm, radians.
struct JointConfig {
    std::array<double, kNumLinks> angles{};

    double& operator[](int i) { return angles[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return angles[static_cast<std::size_t>(i)]; }
    bool operator==(const JointConfig&) const = default;
};

/**
 * Rigid transform [R | t]: p_out = R * p_in + t.
 * Inverses are always formed as [R^T | -R^T t], never by general
 * matrix inversion.
 */
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return rotation * p + translation;
    }

    RigidTransform compose(const RigidTransform& next) const {
        return {rotation * next.rotation, rotation * next.translation + translation};
    }

    RigidTransform inverse() const {
        const Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    static RigidTransform identity() { return {}; }
};

/// Axis-aligned box in its own geometry frame, posed relative to a link frame.
struct Cuboid {
    Eigen::Vector3d half_extents = Eigen::Vector3d::Constant(0.05);
    RigidTransform frame_offset;  // geometry frame relative to link frame
};

struct LinkSpec {
    Eigen::Vector3d joint_axis = Eigen::Vector3d::UnitZ();  // unit vector
    RigidTransform fixed_offset;
    std::array<double, 2> joint_limits = {-kPi, kPi};
    Cuboid geometry;
};

/// Serial 6-DoF chain. Link i's transform is fixed_offset_i followed by a
/// rotation of angle_{i-1} about joint_axis_i (zero angles reproduce the
/// chain of fixed offsets).
struct KinematicChain {
    std::array<LinkSpec, kNumLinks> links;
};

/// Rodrigues rotation about a unit axis.
Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle);

/// True when every angle is finite and within the chain's joint limits.
bool config_within_limits(const KinematicChain& chain, const JointConfig& config);

/// Clamp each angle into the chain's joint limits.
JointConfig clamp_to_limits(const KinematicChain& chain, const JointConfig& config);

/**
 * Cumulative world->link transform T_0^1 ... T_{k-1}^k for link_index k
 * in 1..6. Throws std::invalid_argument on a bad index or a config
 * outside joint limits.
 */
RigidTransform link_transform(const KinematicChain& chain, int link_index,
                              const JointConfig& config);

/// Poses of all six links; pose[i] == link_transform(chain, i+1, config).
std::array<RigidTransform, kNumLinks> forward_kinematics(const KinematicChain& chain,
                                                         const JointConfig& config);

/// Express a world-frame point in the frame of link link_index (1..6).
Eigen::Vector3d world_to_link_frame(const KinematicChain& chain, int link_index,
                                    const JointConfig& config,
                                    const Eigen::Vector3d& point_world);

/// Express a link-frame point in the world frame.
Eigen::Vector3d link_to_world_frame(const KinematicChain& chain, int link_index,
                                    const JointConfig& config,
                                    const Eigen::Vector3d& point_local);

/**
 * Default 6-link chain: revolute axes alternating Z/Y, link lengths in the
 * 0.1-0.3 m range, cuboid bodies spanning each link segment. This is repo
 * plumbing for simulation scenes, not a model of any particular robot.
 */
KinematicChain default_chain();

/// Re-root a chain: compose a world base pose into link 1's fixed offset.
KinematicChain with_base(KinematicChain chain, const RigidTransform& base);

/// Convenience base pose: translation + yaw about world Z.
RigidTransform base_pose(double x, double y, double z, double yaw);

/// chain.json round trip (schema documented in the README).
void save_chain(const KinematicChain& chain, const std::string& path);
KinematicChain load_chain(const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_KINEMATICS_HPP
