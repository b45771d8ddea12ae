#include "dualarm/reactive_planner.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "dualarm/geometry.hpp"
#include "json_util.hpp"

namespace dualarm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double linf_distance(const JointConfig& a, const JointConfig& b) {
    double d = 0;
    for (int i = 0; i < kNumLinks; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

JointConfig lerp(const JointConfig& a, const JointConfig& b, double t) {
    JointConfig out;
    for (int i = 0; i < kNumLinks; ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

/// Step a config toward a target at the script's rate limit.
JointConfig step_toward(const JointConfig& from, const JointConfig& target, double max_delta) {
    JointConfig out;
    for (int i = 0; i < kNumLinks; ++i) {
        const double d = target[i] - from[i];
        out[i] = from[i] + std::clamp(d, -max_delta, max_delta);
    }
    return out;
}

Eigen::Vector3d end_effector(const KinematicChain& chain, const JointConfig& q) {
    return forward_kinematics(chain, q)[kNumLinks - 1].translation;
}

/// Obstacle-arm controller state: advances the scripted config by dt.
struct ObstacleRunner {
    const ObstacleScript& script;
    const KinematicChain& chain_a;
    JointConfig config;
    std::size_t next_waypoint = 0;

    ObstacleRunner(const ObstacleScript& s, const KinematicChain& ca)
        : script(s), chain_a(ca), config(clamp_to_limits(ca, s.start)) {}

    void advance(double dt, const KinematicChain& chain_b, const JointConfig& config_b) {
        if (dt <= 0) return;
        const double max_delta = script.speed * dt;
        switch (script.type) {
            case ObstacleScript::Type::Parked:
                break;
            case ObstacleScript::Type::Waypoints: {
                if (script.waypoints.empty()) break;
                const JointConfig target =
                    clamp_to_limits(chain_a, script.waypoints[next_waypoint]);
                config = step_toward(config, target, max_delta);
                if (linf_distance(config, target) < 1e-9)
                    next_waypoint = (next_waypoint + 1) % script.waypoints.size();
                break;
            }
            case ObstacleScript::Type::Chase: {
                // Greedy descent on the end-effector gap, one finite-difference
                // gradient step per tick, rate-limited per joint.
                const Eigen::Vector3d target_ee = end_effector(chain_b, config_b);
                const double h = 1e-3;
                JointConfig grad;
                for (int i = 0; i < kNumLinks; ++i) {
                    const auto& lim = chain_a.links[static_cast<std::size_t>(i)].joint_limits;
                    JointConfig plus = config, minus = config;
                    plus[i] = std::min(plus[i] + h, lim[1]);
                    minus[i] = std::max(minus[i] - h, lim[0]);
                    const double span = plus[i] - minus[i];
                    if (span < 1e-12) {
                        grad[i] = 0;
                        continue;
                    }
                    const double dplus = (end_effector(chain_a, plus) - target_ee).norm();
                    const double dminus = (end_effector(chain_a, minus) - target_ee).norm();
                    grad[i] = (dplus - dminus) / span;
                }
                double gmax = 0;
                for (int i = 0; i < kNumLinks; ++i) gmax = std::max(gmax, std::abs(grad[i]));
                if (gmax < 1e-12) break;
                for (int i = 0; i < kNumLinks; ++i) config[i] -= max_delta * grad[i] / gmax;
                config = clamp_to_limits(chain_a, config);
                break;
            }
        }
    }
};

const char* event_name(StepEvent e) {
    switch (e) {
        case StepEvent::Plan: return "plan";
        case StepEvent::Move: return "move";
        case StepEvent::Replan: return "replan";
        case StepEvent::Arrive: return "arrive";
        case StepEvent::Goal: return "goal";
        case StepEvent::Collision: return "collision";
        default: return "blocked";
    }
}

StepEvent event_from_name(const std::string& s) {
    if (s == "plan") return StepEvent::Plan;
    if (s == "move") return StepEvent::Move;
    if (s == "replan") return StepEvent::Replan;
    if (s == "arrive") return StepEvent::Arrive;
    if (s == "goal") return StepEvent::Goal;
    if (s == "collision") return StepEvent::Collision;
    if (s == "blocked") return StepEvent::Blocked;
    throw std::runtime_error("unknown trace event: " + s);
}

}  // namespace

std::vector<SensorReading> simulate_readings(const PlacementSet& placement,
                                             const KinematicChain& chain_b,
                                             const JointConfig& config_b,
                                             const KinematicChain& chain_a,
                                             const JointConfig& config_a, int step) {
    std::vector<SensorReading> readings;
    if (placement.placements.empty()) return readings;
    const auto poses_a = forward_kinematics(chain_a, config_a);
    std::array<PosedCuboid, kNumLinks> boxes_a;
    for (int i = 0; i < kNumLinks; ++i)
        boxes_a[static_cast<std::size_t>(i)] =
            posed(chain_a.links[static_cast<std::size_t>(i)].geometry,
                  poses_a[static_cast<std::size_t>(i)]);

    readings.reserve(placement.placements.size());
    for (const SensorPlacement& p : placement.placements) {
        const Cuboid& cuboid = chain_b.links[static_cast<std::size_t>(p.link - 1)].geometry;
        // Face point in the geometry frame, then out to the world.
        Eigen::Vector3d local = Eigen::Vector3d::Zero();
        const auto place_on_face = [&](int normal_axis, double sign, int ua, int va) {
            local[normal_axis] = sign * cuboid.half_extents[normal_axis];
            local[ua] = p.uv.x();
            local[va] = p.uv.y();
        };
        switch (p.face) {
            case Face::PosX: place_on_face(0, 1, 1, 2); break;
            case Face::NegX: place_on_face(0, -1, 1, 2); break;
            case Face::PosY: place_on_face(1, 1, 0, 2); break;
            case Face::NegY: place_on_face(1, -1, 0, 2); break;
            case Face::PosZ: place_on_face(2, 1, 0, 1); break;
            case Face::NegZ: place_on_face(2, -1, 0, 1); break;
        }
        const Eigen::Vector3d p_link = cuboid.frame_offset.apply(local);
        const Eigen::Vector3d p_world = link_to_world_frame(chain_b, p.link, config_b, p_link);

        double best = std::numeric_limits<double>::infinity();
        for (const PosedCuboid& box : boxes_a)
            best = std::min(best, point_to_cuboid_distance(p_world, box));
        readings.push_back({p.link, p.face, p.uv, best, step});
    }
    return readings;
}

EpisodeResult run_episode(const LatentGraph& graph, const PlacementSet& placement,
                          const KinematicChain& chain_a, const KinematicChain& chain_b,
                          const EpisodeConfig& ec) {
    if (ec.goals.empty()) throw std::invalid_argument("run_episode: goals must be non-empty");
    if (!(ec.d_safe > 0)) throw std::invalid_argument("run_episode: d_safe must be > 0");
    if (ec.interp_substeps < 1)
        throw std::invalid_argument("run_episode: interp_substeps must be >= 1");

    EpisodeResult result;
    const std::vector<int> component = largest_component(graph);

    int current_node = nearest_safe_node_by_config(graph, ec.start, &component);
    std::vector<int> goal_nodes;
    goal_nodes.reserve(ec.goals.size());
    for (const JointConfig& g : ec.goals)
        goal_nodes.push_back(nearest_safe_node_by_config(graph, g, &component));

    std::unordered_set<int> blacklist;
    JointConfig config_b = clamp_to_limits(chain_b, ec.start);
    ObstacleRunner obstacle(ec.obstacle, chain_a);
    int step = 0;

    // Decoded node poses may poke slightly out of the chain's working range;
    // commands saturate at the joint limits like a real actuator would.
    const auto node_theta = [&](int id) {
        return clamp_to_limits(chain_b, graph.nodes[static_cast<std::size_t>(id)].theta_b);
    };
    const auto record = [&](StepEvent event, double min_reading, int target,
                            std::vector<int> path = {}) {
        result.trace.push_back(
            {step, obstacle.config, config_b, min_reading, target, event, std::move(path)});
    };
    const auto timed_plan = [&](int from, int to) {
        const auto t0 = Clock::now();
        PathResult path = replan(graph, from, to, blacklist, {});
        const double dt = seconds_since(t0);
        result.t_plan_s += dt;
        result.plan_latencies_s.push_back(dt);
        return path;
    };
    const auto fail = [&](StepEvent event, const std::string& reason) {
        result.failure_reason = reason;
        record(event, std::numeric_limits<double>::infinity(), -1);
        return result;
    };

    for (std::size_t goal_idx = 0; goal_idx < goal_nodes.size(); ++goal_idx) {
        const int goal_node = goal_nodes[goal_idx];
        if (blacklist.contains(goal_node))
            return fail(StepEvent::Blocked, "goal node was blacklisted earlier");

        std::vector<int> path_nodes;
        try {
            PathResult path = timed_plan(current_node, goal_node);
            path_nodes = std::move(path.nodes);
        } catch (const NoPathError& e) {
            return fail(StepEvent::Blocked, e.what());
        }
        record(StepEvent::Plan, std::numeric_limits<double>::infinity(), current_node,
               path_nodes);

        std::size_t next_idx = 0;  // path_nodes[next_idx] is the upcoming waypoint
        while (next_idx < path_nodes.size()) {
            const int target = path_nodes[next_idx];
            const JointConfig segment_start = config_b;
            const JointConfig target_theta = node_theta(target);
            const double segment_len = linf_distance(segment_start, target_theta);
            const double segment_time = segment_len / kJointSpeed;
            const double dt_sub = segment_time / ec.interp_substeps;

            bool violated = false;
            for (int s = 1; s <= ec.interp_substeps && !violated; ++s) {
                config_b = lerp(segment_start, target_theta,
                                static_cast<double>(s) / ec.interp_substeps);
                obstacle.advance(dt_sub, chain_b, config_b);
                result.t_motion_s += dt_sub;
                ++step;
                if (step > ec.max_steps)
                    return fail(StepEvent::Blocked, "exceeded max_steps");

                const auto readings =
                    simulate_readings(placement, chain_b, config_b, chain_a, obstacle.config, step);
                double min_reading = std::numeric_limits<double>::infinity();
                for (const SensorReading& r : readings)
                    min_reading = std::min(min_reading, r.distance);

                if (arm_pair_proximity(chain_a, obstacle.config, chain_b, config_b).distance ==
                    0.0)
                    return fail(StepEvent::Collision, "true collision during motion");

                record(StepEvent::Move, min_reading, target);

                // The retreat segment (back to the node we replanned from)
                // cannot be filtered away; only forward nodes are fair game.
                if (min_reading < ec.d_safe && target != current_node) {
                    if (target == goal_node)
                        return fail(StepEvent::Blocked,
                                    "sensor violation at the goal node itself");
                    blacklist.insert(target);
                    ++result.replans;
                    ++step;
                    if (step > ec.max_steps)
                        return fail(StepEvent::Blocked, "exceeded max_steps");
                    try {
                        PathResult path = timed_plan(current_node, goal_node);
                        path_nodes = std::move(path.nodes);
                    } catch (const NoPathError& e) {
                        return fail(StepEvent::Blocked, e.what());
                    }
                    record(StepEvent::Replan, min_reading, current_node, path_nodes);
                    next_idx = 0;
                    violated = true;
                }
            }
            if (!violated) {
                current_node = target;
                ++next_idx;
                record(StepEvent::Arrive, std::numeric_limits<double>::infinity(), target);
            }
        }
        record(StepEvent::Goal, std::numeric_limits<double>::infinity(), goal_node);
    }
    result.success = true;
    return result;
}

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
    if (results.empty()) throw std::invalid_argument("compute_metrics: no episodes");
    Metrics m;
    std::size_t successes = 0;
    for (const EpisodeResult& r : results) {
        m.t_mean_s += r.t_plan_s + r.t_motion_s;
        successes += r.success ? 1 : 0;
    }
    m.t_mean_s /= static_cast<double>(results.size());
    m.sr_percent = 100.0 * static_cast<double>(successes) / static_cast<double>(results.size());
    return m;
}

namespace {

json script_to_json(const ObstacleScript& s) {
    const char* type = s.type == ObstacleScript::Type::Parked      ? "parked"
                       : s.type == ObstacleScript::Type::Waypoints ? "waypoints"
                                                                   : "chase";
    json waypoints = json::array();
    for (const JointConfig& w : s.waypoints) waypoints.push_back(config_to_json(w));
    return json{{"type", type},
                {"start", config_to_json(s.start)},
                {"waypoints", waypoints},
                {"speed", s.speed}};
}

ObstacleScript script_from_json(const json& j) {
    ObstacleScript s;
    const std::string type = j.at("type").get<std::string>();
    if (type == "parked")
        s.type = ObstacleScript::Type::Parked;
    else if (type == "waypoints")
        s.type = ObstacleScript::Type::Waypoints;
    else if (type == "chase")
        s.type = ObstacleScript::Type::Chase;
    else
        throw std::runtime_error("unknown obstacle script type: " + type);
    s.start = config_from_json(j.at("start"));
    for (const json& w : j.at("waypoints")) s.waypoints.push_back(config_from_json(w));
    s.speed = j.at("speed").get<double>();
    return s;
}

}  // namespace

void save_episode_config(const EpisodeConfig& ec, const std::string& path) {
    json goals = json::array();
    for (const JointConfig& g : ec.goals) goals.push_back(config_to_json(g));
    const json doc{{"start", config_to_json(ec.start)},
                   {"goals", goals},
                   {"obstacle", script_to_json(ec.obstacle)},
                   {"d_safe", ec.d_safe},
                   {"max_steps", ec.max_steps},
                   {"interp_substeps", ec.interp_substeps},
                   {"seed", ec.seed}};
    write_file_atomic(path, doc.dump(2) + "\n");
}

EpisodeConfig load_episode_config(const std::string& path) {
    const json doc = json::parse(read_file(path));
    EpisodeConfig ec;
    ec.start = config_from_json(doc.at("start"));
    for (const json& g : doc.at("goals")) ec.goals.push_back(config_from_json(g));
    ec.obstacle = script_from_json(doc.at("obstacle"));
    ec.d_safe = doc.at("d_safe").get<double>();
    ec.max_steps = doc.at("max_steps").get<int>();
    ec.interp_substeps = doc.at("interp_substeps").get<int>();
    ec.seed = doc.at("seed").get<std::uint64_t>();
    if (ec.goals.empty()) throw std::runtime_error("episode.json: goals must be non-empty");
    return ec;
}

void write_trace(const EpisodeResult& result, const std::string& path) {
    std::ostringstream out;
    for (const TraceStep& t : result.trace) {
        json j{{"step", t.step},
               {"theta_a", config_to_json(t.theta_a)},
               {"theta_b", config_to_json(t.theta_b)},
               {"target_node", t.target_node},
               {"event", event_name(t.event)}};
        if (std::isfinite(t.min_reading))
            j["min_reading"] = t.min_reading;
        else
            j["min_reading"] = nullptr;
        if (!t.planned_path.empty()) j["path"] = t.planned_path;
        out << j.dump() << "\n";
    }
    write_file_atomic(path, out.str());
}

std::vector<TraceStep> read_trace(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<TraceStep> trace;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            TraceStep t;
            t.step = j.at("step").get<int>();
            t.theta_a = config_from_json(j.at("theta_a"));
            t.theta_b = config_from_json(j.at("theta_b"));
            t.min_reading = j.at("min_reading").is_null()
                                ? std::numeric_limits<double>::infinity()
                                : j.at("min_reading").get<double>();
            t.target_node = j.at("target_node").get<int>();
            t.event = event_from_name(j.at("event").get<std::string>());
            if (j.contains("path")) t.planned_path = j.at("path").get<std::vector<int>>();
            trace.push_back(std::move(t));
        } catch (const std::exception& e) {
            throw std::runtime_error("parse error at line " + std::to_string(line_no) + " of " +
                                     path + ": " + e.what());
        }
    }
    return trace;
}

void write_metrics_csv(const std::vector<EpisodeResult>& results, const std::string& path,
                       const std::string& summary_line) {
    std::ostringstream out;
    out << "episode,success,t_plan_s,t_motion_s,t_total_s,replans\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const EpisodeResult& r = results[i];
        out << i << "," << (r.success ? 1 : 0) << "," << r.t_plan_s << "," << r.t_motion_s
            << "," << (r.t_plan_s + r.t_motion_s) << "," << r.replans << "\n";
    }
    if (!summary_line.empty()) out << summary_line << "\n";
    write_file_atomic(path, out.str());
}

}  // namespace dualarm
