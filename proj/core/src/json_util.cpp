#include "json_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dualarm {

json vec3_to_json(const Eigen::Vector3d& v) {
    return json::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected 3-array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec2_to_json(const Eigen::Vector2d& v) {
    return json::array({v.x(), v.y()});
}

Eigen::Vector2d vec2_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected 2-array");
    return {j[0].get<double>(), j[1].get<double>()};
}

json mat3_to_json(const Eigen::Matrix3d& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
    return out;
}

Eigen::Matrix3d mat3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 9) throw std::runtime_error("expected 9-array");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j[static_cast<std::size_t>(3 * r + c)].get<double>();
    return m;
}

json transform_to_json(const RigidTransform& t) {
    return json{{"R", mat3_to_json(t.rotation)}, {"t", vec3_to_json(t.translation)}};
}

RigidTransform transform_from_json(const json& j) {
    return {mat3_from_json(j.at("R")), vec3_from_json(j.at("t"))};
}

json config_to_json(const JointConfig& q) {
    json out = json::array();
    for (double a : q.angles) out.push_back(a);
    return out;
}

JointConfig config_from_json(const json& j) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(kNumLinks))
        throw std::runtime_error("expected 6-array of joint angles");
    JointConfig q;
    for (int i = 0; i < kNumLinks; ++i) q[i] = j[static_cast<std::size_t>(i)].get<double>();
    return q;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dualarm
