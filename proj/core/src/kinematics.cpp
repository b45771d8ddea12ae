#include "dualarm/kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include "json_util.hpp"

namespace dualarm {

namespace {

void check_rotation(const Eigen::Matrix3d& r, const char* what) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": rotation is not orthonormal");
}

void check_config(const KinematicChain& chain, const JointConfig& config) {
    if (!config_within_limits(chain, config))
        throw std::invalid_argument("joint config outside limits or non-finite");
}

int checked_index(int link_index) {
    if (link_index < 1 || link_index > kNumLinks)
        throw std::invalid_argument("link index must be in 1..6");
    return link_index;
}

}  // namespace

Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 1e-12)) throw std::invalid_argument("joint axis must be non-zero");
    const Eigen::Vector3d u = axis / n;
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::Matrix3d k;
    k << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
    return Eigen::Matrix3d::Identity() * c + s * k + (1.0 - c) * (u * u.transpose());
}

bool config_within_limits(const KinematicChain& chain, const JointConfig& config) {
    for (int i = 0; i < kNumLinks; ++i) {
        const double a = config[i];
        const auto& lim = chain.links[static_cast<std::size_t>(i)].joint_limits;
        if (!std::isfinite(a) || a < lim[0] - 1e-12 || a > lim[1] + 1e-12) return false;
    }
    return true;
}

JointConfig clamp_to_limits(const KinematicChain& chain, const JointConfig& config) {
    JointConfig out = config;
    for (int i = 0; i < kNumLinks; ++i) {
        const auto& lim = chain.links[static_cast<std::size_t>(i)].joint_limits;
        out[i] = std::min(std::max(out[i], lim[0]), lim[1]);
    }
    return out;
}

RigidTransform link_transform(const KinematicChain& chain, int link_index,
                              const JointConfig& config) {
    checked_index(link_index);
    check_config(chain, config);
    RigidTransform t;
    for (int i = 0; i < link_index; ++i) {
        const LinkSpec& link = chain.links[static_cast<std::size_t>(i)];
        const RigidTransform joint{axis_angle_rotation(link.joint_axis, config[i]),
                                   Eigen::Vector3d::Zero()};
        t = t.compose(link.fixed_offset).compose(joint);
    }
    return t;
}

std::array<RigidTransform, kNumLinks> forward_kinematics(const KinematicChain& chain,
                                                         const JointConfig& config) {
    check_config(chain, config);
    std::array<RigidTransform, kNumLinks> poses;
    RigidTransform t;
    for (int i = 0; i < kNumLinks; ++i) {
        const LinkSpec& link = chain.links[static_cast<std::size_t>(i)];
        const RigidTransform joint{axis_angle_rotation(link.joint_axis, config[i]),
                                   Eigen::Vector3d::Zero()};
        t = t.compose(link.fixed_offset).compose(joint);
        poses[static_cast<std::size_t>(i)] = t;
    }
    return poses;
}

Eigen::Vector3d world_to_link_frame(const KinematicChain& chain, int link_index,
                                    const JointConfig& config,
                                    const Eigen::Vector3d& point_world) {
    if (!point_world.allFinite()) throw std::invalid_argument("non-finite point");
    return link_transform(chain, link_index, config).inverse().apply(point_world);
}

Eigen::Vector3d link_to_world_frame(const KinematicChain& chain, int link_index,
                                    const JointConfig& config,
                                    const Eigen::Vector3d& point_local) {
    if (!point_local.allFinite()) throw std::invalid_argument("non-finite point");
    return link_transform(chain, link_index, config).apply(point_local);
}

KinematicChain default_chain() {
    // Segment lengths from each link frame to the next joint; the last entry
    // is the end-effector body length.
    const double seg[kNumLinks] = {0.10, 0.25, 0.22, 0.16, 0.12, 0.10};
    const double rise = 0.15;  // base column below link 1
    const Eigen::Vector3d axes[kNumLinks] = {
        Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(),
        Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY()};

    KinematicChain chain;
    for (int i = 0; i < kNumLinks; ++i) {
        LinkSpec& link = chain.links[static_cast<std::size_t>(i)];
        link.joint_axis = axes[i];
        link.fixed_offset.rotation = Eigen::Matrix3d::Identity();
        link.fixed_offset.translation =
            Eigen::Vector3d(0, 0, i == 0 ? rise : seg[i - 1]);
        link.joint_limits = {-kPi, kPi};
        const double len = seg[i];
        link.geometry.half_extents = Eigen::Vector3d(0.035, 0.035, len / 2 + 0.01);
        link.geometry.frame_offset.translation = Eigen::Vector3d(0, 0, len / 2);
    }
    // Slimmer wrist and end-effector bodies.
    chain.links[4].geometry.half_extents = Eigen::Vector3d(0.03, 0.03, 0.07);
    chain.links[5].geometry.half_extents = Eigen::Vector3d(0.025, 0.025, 0.06);
    return chain;
}

KinematicChain with_base(KinematicChain chain, const RigidTransform& base) {
    check_rotation(base.rotation, "with_base");
    chain.links[0].fixed_offset = base.compose(chain.links[0].fixed_offset);
    return chain;
}

RigidTransform base_pose(double x, double y, double z, double yaw) {
    return {axis_angle_rotation(Eigen::Vector3d::UnitZ(), yaw), Eigen::Vector3d(x, y, z)};
}

void save_chain(const KinematicChain& chain, const std::string& path) {
    json links = json::array();
    for (const LinkSpec& link : chain.links) {
        links.push_back(json{
            {"axis", vec3_to_json(link.joint_axis)},
            {"offset", transform_to_json(link.fixed_offset)},
            {"limits", json::array({link.joint_limits[0], link.joint_limits[1]})},
            {"cuboid",
             json{{"half_extents", vec3_to_json(link.geometry.half_extents)},
                  {"frame_offset", transform_to_json(link.geometry.frame_offset)}}}});
    }
    write_file_atomic(path, json{{"links", links}}.dump(2) + "\n");
}

KinematicChain load_chain(const std::string& path) {
    const json doc = json::parse(read_file(path));
    const json& links = doc.at("links");
    if (!links.is_array() || links.size() != static_cast<std::size_t>(kNumLinks))
        throw std::runtime_error("chain.json must list exactly 6 links: " + path);
    KinematicChain chain;
    for (int i = 0; i < kNumLinks; ++i) {
        const json& jl = links[static_cast<std::size_t>(i)];
        LinkSpec& link = chain.links[static_cast<std::size_t>(i)];
        link.joint_axis = vec3_from_json(jl.at("axis"));
        link.fixed_offset = transform_from_json(jl.at("offset"));
        check_rotation(link.fixed_offset.rotation, "load_chain offset");
        link.joint_limits = {jl.at("limits")[0].get<double>(), jl.at("limits")[1].get<double>()};
        if (!(link.joint_limits[0] <= link.joint_limits[1]))
            throw std::runtime_error("chain.json: joint limits out of order");
        const json& jc = jl.at("cuboid");
        link.geometry.half_extents = vec3_from_json(jc.at("half_extents"));
        if (!(link.geometry.half_extents.minCoeff() > 0))
            throw std::runtime_error("chain.json: cuboid half extents must be positive");
        link.geometry.frame_offset = transform_from_json(jc.at("frame_offset"));
        check_rotation(link.geometry.frame_offset.rotation, "load_chain cuboid");
    }
    return chain;
}

}  // namespace dualarm
