#include "dualarm/dataset.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dualarm/geometry.hpp"
#include "json_util.hpp"

namespace dualarm {

namespace {

/// Push a point inside a box out to its nearest face, in world frame.
Eigen::Vector3d project_to_surface(const Eigen::Vector3d& point_world, const PosedCuboid& box) {
    Eigen::Vector3d local = box.world_from_geom.inverse().apply(point_world);
    local = local.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
    int axis = 0;
    double min_depth = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double depth = box.half_extents[k] - std::abs(local[k]);
        if (depth < min_depth) {
            min_depth = depth;
            axis = k;
        }
    }
    local[axis] = local[axis] >= 0 ? box.half_extents[axis] : -box.half_extents[axis];
    return box.world_from_geom.apply(local);
}

/// Contacts on arm_2's links 2..6 at zero clearance, empty if none.
std::vector<CollisionContact> find_contacts(const KinematicChain& chain_a,
                                            const JointConfig& theta_a,
                                            const KinematicChain& chain_b,
                                            const JointConfig& theta_b) {
    const auto poses_a = forward_kinematics(chain_a, theta_a);
    const auto poses_b = forward_kinematics(chain_b, theta_b);
    std::vector<CollisionContact> contacts;
    for (int j = 1; j < kNumLinks; ++j) {  // arm_2 links 2..6
        const PosedCuboid box_b = posed(chain_b.links[static_cast<std::size_t>(j)].geometry,
                                        poses_b[static_cast<std::size_t>(j)]);
        for (int i = 0; i < kNumLinks; ++i) {
            const PosedCuboid box_a = posed(chain_a.links[static_cast<std::size_t>(i)].geometry,
                                            poses_a[static_cast<std::size_t>(i)]);
            const ClosestPair pair = min_distance_obb(box_a, box_b);
            if (pair.distance == 0.0) {
                contacts.push_back({j + 1, project_to_surface(pair.point_b, box_b)});
                break;  // one contact per arm_2 link, lowest arm_1 link wins
            }
        }
    }
    return contacts;
}

json sample_to_json(const Sample& s) {
    json contacts = json::array();
    for (const CollisionContact& c : s.collisions)
        contacts.push_back(json{{"link", c.link_b}, {"point_world", vec3_to_json(c.point_world)}});
    return json{{"theta_a", config_to_json(s.theta_a)},
                {"theta_b", config_to_json(s.theta_b)},
                {"flag", s.flag},
                {"collisions", contacts}};
}

Sample sample_from_json(const json& j) {
    Sample s;
    s.theta_a = config_from_json(j.at("theta_a"));
    s.theta_b = config_from_json(j.at("theta_b"));
    s.flag = j.at("flag").get<int>();
    if (s.flag != 0 && s.flag != 1) throw std::runtime_error("flag must be 0 or 1");
    for (const json& jc : j.at("collisions")) {
        CollisionContact c;
        c.link_b = jc.at("link").get<int>();
        if (c.link_b < 2 || c.link_b > kNumLinks)
            throw std::runtime_error("collision link index must be in 2..6");
        c.point_world = vec3_from_json(jc.at("point_world"));
        s.collisions.push_back(c);
    }
    if ((s.flag == 0) != !s.collisions.empty())
        throw std::runtime_error("flag/collision-list consistency violated");
    return s;
}

}  // namespace

JointConfig sample_random_config(const KinematicChain& chain, Rng& rng) {
    JointConfig q;
    for (int i = 0; i < kNumLinks; ++i) {
        const auto& lim = chain.links[static_cast<std::size_t>(i)].joint_limits;
        q[i] = rng.uniform(lim[0], lim[1]);
    }
    return q;
}

Dataset generate_dataset(const KinematicChain& chain_a, const KinematicChain& chain_b,
                         int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("generate_dataset: n_samples must be >= 1");
    Dataset ds;
    ds.seed = seed;
    ds.samples.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i));
        for (;;) {
            Sample s;
            s.theta_a = sample_random_config(chain_a, rng);
            s.theta_b = sample_random_config(chain_b, rng);
            const bool hit = collides(chain_a, s.theta_a, chain_b, s.theta_b, 0.0);
            s.flag = hit ? 0 : 1;
            if (hit) {
                s.collisions = find_contacts(chain_a, s.theta_a, chain_b, s.theta_b);
                if (s.collisions.empty()) continue;  // base-link-only contact, redraw
            }
            ds.samples.push_back(std::move(s));
            break;
        }
    }
    return ds;
}

double collision_fraction(const Dataset& ds) {
    if (ds.samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const Sample& s : ds.samples) hits += s.flag == 0 ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    for (const Sample& s : ds.samples) out << sample_to_json(s).dump() << "\n";
    write_file_atomic(path, out.str());
}

Dataset read_dataset(const std::string& path) {
    const std::string text = read_file(path);
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            ds.samples.push_back(sample_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("parse error at line " + std::to_string(line_no) + " of " +
                                     path + ": " + e.what());
        }
    }
    return ds;
}

}  // namespace dualarm
