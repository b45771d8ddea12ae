#ifndef DUALARM_JSON_UTIL_HPP
#define DUALARM_JSON_UTIL_HPP

#include <json.hpp>

#include <Eigen/Dense>
#include <string>

#include "dualarm/kinematics.hpp"

namespace dualarm {

using json = nlohmann::json;

json vec3_to_json(const Eigen::Vector3d& v);
Eigen::Vector3d vec3_from_json(const json& j);

json vec2_to_json(const Eigen::Vector2d& v);
Eigen::Vector2d vec2_from_json(const json& j);

/// 3x3 rotation as a row-major 9-array.
json mat3_to_json(const Eigen::Matrix3d& m);
Eigen::Matrix3d mat3_from_json(const json& j);

json transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const json& j);

json config_to_json(const JointConfig& q);
JointConfig config_from_json(const json& j);

/// Write text to path via a temp file + rename so failures leave no
/// partial output behind.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_JSON_UTIL_HPP
