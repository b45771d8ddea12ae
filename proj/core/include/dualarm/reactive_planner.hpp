#ifndef DUALARM_REACTIVE_PLANNER_HPP
#define DUALARM_REACTIVE_PLANNER_HPP

#include <string>
#include <vector>

#include "dualarm/roadmap.hpp"
#include "dualarm/sensor_placement.hpp"

namespace dualarm {

/// One simulated proximity reading: distance from a placed sensor's world
/// position to the nearest point of any arm_1 link cuboid.
struct SensorReading {
    int link = 0;
    Face face = Face::PosX;
    Eigen::Vector2d uv = Eigen::Vector2d::Zero();
    double distance = 0.0;
    int step = 0;
};

/// Scripted arm_1 motion. Waypoints are cycled at a per-joint rate limit;
/// Chase greedily steps arm_1's joints to close the end-effector gap to
/// arm_2 at the same rate limit.
struct ObstacleScript {
    enum class Type { Parked, Waypoints, Chase };
    Type type = Type::Parked;
    JointConfig start;
    std::vector<JointConfig> waypoints;
    double speed = 0.3;  // rad/s, L-infinity rate limit
};

struct EpisodeConfig {
    JointConfig start;               // arm_2 initial config
    std::vector<JointConfig> goals;  // visited in order; final one decides success
    ObstacleScript obstacle;
    double d_safe = 0.05;  // meters; readings below this blacklist the upcoming node
    int max_steps = 4000;
    int interp_substeps = 10;  // substeps per graph edge
    std::uint64_t seed = 0;    // provenance of generated scenarios
};

enum class StepEvent { Plan, Move, Replan, Arrive, Goal, Collision, Blocked };

struct TraceStep {
    int step = 0;
    JointConfig theta_a;
    JointConfig theta_b;
    double min_reading = 0.0;  // infinity when no sensors are placed
    int target_node = -1;
    StepEvent event = StepEvent::Move;
    std::vector<int> planned_path;  // filled on plan/replan events
};

struct EpisodeResult {
    bool success = false;
    double t_plan_s = 0.0;    // wall clock spent in Dijkstra planning/replanning
    double t_motion_s = 0.0;  // simulated motion time: sum of Linf joint travel / omega
    int replans = 0;
    std::vector<TraceStep> trace;
    std::vector<double> plan_latencies_s;  // every Dijkstra call, for latency stats
    std::string failure_reason;            // empty on success
};

/// Simulated joint speed used to convert joint travel into motion time.
inline constexpr double kJointSpeed = 1.0;  // rad/s

std::vector<SensorReading> simulate_readings(const PlacementSet& placement,
                                             const KinematicChain& chain_b,
                                             const JointConfig& config_b,
                                             const KinematicChain& chain_a,
                                             const JointConfig& config_a, int step = 0);

/**
 * Execute a latent-graph episode: anchor start/goals to safe nodes of the
 * largest component, plan with Dijkstra, walk edges by joint-space
 * interpolation while arm_1 follows its script, and on any reading below
 * d_safe blacklist the upcoming node and replan from the last reached node.
 * Failure (exhausted steps, true collision, or no remaining path) is a
 * result, not an exception. Deterministic for identical inputs.
 */
EpisodeResult run_episode(const LatentGraph& graph, const PlacementSet& placement,
                          const KinematicChain& chain_a, const KinematicChain& chain_b,
                          const EpisodeConfig& ec);

struct Metrics {
    double t_mean_s = 0.0;
    double sr_percent = 0.0;
};

/// T = planning wall clock + simulated motion time, averaged; SR = % successes.
Metrics compute_metrics(const std::vector<EpisodeResult>& results);

/// episode.json round trip.
void save_episode_config(const EpisodeConfig& ec, const std::string& path);
EpisodeConfig load_episode_config(const std::string& path);

/// trace.jsonl: one step record per line.
void write_trace(const EpisodeResult& result, const std::string& path);
std::vector<TraceStep> read_trace(const std::string& path);

/// metrics.csv rows; t_plan_s/t_total_s carry wall-clock time and are the
/// only non-reproducible columns.
void write_metrics_csv(const std::vector<EpisodeResult>& results, const std::string& path,
                       const std::string& summary_line = "");

}  // namespace dualarm

#endif  // DUALARM_REACTIVE_PLANNER_HPP
