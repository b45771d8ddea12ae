#include <doctest.h>

#include <cmath>

#include "dualarm/geometry.hpp"
#include "dualarm/reactive_planner.hpp"
#include "test_helpers.hpp"

using namespace dualarm;

namespace {

KinematicChain scene_chain(double x, double yaw) {
    KinematicChain c = with_base(default_chain(), base_pose(x, 0, 0, yaw));
    const std::array<std::array<double, 2>, 6> limits = {
        {{-1.2, 1.2}, {0.3, 1.6}, {-kPi, kPi}, {-1.6, 1.6}, {-kPi, kPi}, {-1.6, 1.6}}};
    for (int i = 0; i < kNumLinks; ++i)
        c.links[static_cast<std::size_t>(i)].joint_limits =
            limits[static_cast<std::size_t>(i)];
    return c;
}

/// Dense hand placement: three sensors along every face of links 2..6.
PlacementSet dense_placement(const KinematicChain& chain_b) {
    PlacementSet set;
    for (int link = 2; link <= kNumLinks; ++link) {
        const Cuboid& c = chain_b.links[static_cast<std::size_t>(link - 1)].geometry;
        for (Face f : kAllFaces) {
            const Eigen::Vector2d he = face_half_extents(c, f);
            for (double off : {-0.6, 0.0, 0.6})
                set.placements.push_back({link, f, {0.0, off * he.y()}, 1});
        }
    }
    return set;
}

/// The committed obstacle-avoidance demo scene. Node 1 blocks the direct
/// route past the parked arm_1; node 2 is the clear detour.
struct DemoScene {
    KinematicChain chain_a = scene_chain(0, 0);
    KinematicChain chain_b = scene_chain(0.55, kPi);
    JointConfig obstacle{{-0.5, 1.0, 0.0, -0.4, 0.0, 0.0}};
    JointConfig n0{{-1.1, 0.8, 0.0, -0.6, 0.0, 0.0}};  // start, clear
    JointConfig n1{{0.5, 1.2, 0.0, -0.6, 0.0, 0.0}};   // direct mid, blocked
    JointConfig n2{{-0.8, 0.4, 0.0, -1.2, 0.0, 0.0}};  // detour mid, clear
    JointConfig n3{{-0.5, 0.4, 0.0, -0.6, 0.0, 0.0}};  // goal, clear
    LatentGraph graph;
    PlacementSet placement;

    DemoScene() {
        graph.nodes.resize(4);
        graph.nodes[0] = {{0, 0}, SafetyLabel::Safe, n0, NodeSource::Dataset};
        graph.nodes[1] = {{1, 0}, SafetyLabel::Safe, n1, NodeSource::Dataset};
        graph.nodes[2] = {{1, 2}, SafetyLabel::Safe, n2, NodeSource::Dataset};
        graph.nodes[3] = {{2, 0}, SafetyLabel::Safe, n3, NodeSource::Dataset};
        graph.adjacency.assign(4, {});
        const auto connect = [&](int i, int j) {
            const double w = (graph.nodes[static_cast<std::size_t>(i)].z -
                              graph.nodes[static_cast<std::size_t>(j)].z)
                                 .norm();
            graph.adjacency[static_cast<std::size_t>(i)][j] = w;
            graph.adjacency[static_cast<std::size_t>(j)][i] = w;
        };
        connect(0, 1);
        connect(1, 3);
        connect(0, 2);
        connect(2, 3);
        placement = dense_placement(chain_b);
    }

    EpisodeConfig episode() const {
        EpisodeConfig ec;
        ec.start = n0;
        ec.goals = {n3};
        ec.obstacle.type = ObstacleScript::Type::Parked;
        ec.obstacle.start = obstacle;
        ec.d_safe = 0.15;
        ec.max_steps = 2000;
        ec.interp_substeps = 25;
        return ec;
    }
};

}  // namespace

TEST_SUITE("reactive_planner") {
    TEST_CASE("readings with the obstacle parked 10 m away all exceed 5 m") {
        const DemoScene scene;
        const KinematicChain far_a = scene_chain(10, 0);
        const auto readings = simulate_readings(scene.placement, scene.chain_b, scene.n0,
                                                far_a, JointConfig{{0, 0.5, 0, 0, 0, 0}});
        REQUIRE_FALSE(readings.empty());
        for (const SensorReading& r : readings) CHECK(r.distance > 5.0);
    }

    TEST_CASE("a sensor inside an obstacle body reads zero") {
        const DemoScene scene;
        PlacementSet one;
        one.placements.push_back({4, Face::PosZ, {0.0, 0.0}, 1});
        const JointConfig qb{{0, 0.8, 0, -0.4, 0, 0}};
        // Recover the sensor's world position, then park an arm whose first
        // link body is centered on it.
        const Cuboid& cuboid = scene.chain_b.links[3].geometry;
        const Eigen::Vector3d local(0, 0, cuboid.half_extents.z());
        const Eigen::Vector3d p_world =
            link_to_world_frame(scene.chain_b, 4, qb, cuboid.frame_offset.apply(local));
        KinematicChain covering = default_chain();
        covering.links[0].fixed_offset.translation = p_world;
        covering.links[0].geometry.frame_offset.translation.setZero();
        const auto readings =
            simulate_readings(one, scene.chain_b, qb, covering, JointConfig{});
        REQUIRE(readings.size() == 1);
        CHECK(readings[0].distance == 0.0);
    }

    TEST_CASE("empty placement yields an empty reading list") {
        const DemoScene scene;
        CHECK(simulate_readings(PlacementSet{}, scene.chain_b, scene.n0, scene.chain_a,
                                scene.obstacle)
                  .empty());
    }

    TEST_CASE("random-scene readings match a surface-sampling oracle") {
        const DemoScene scene;
        Rng rng(3);
        for (int trial = 0; trial < 5; ++trial) {
            JointConfig qa, qb;
            for (int i = 0; i < kNumLinks; ++i) {
                const auto& la = scene.chain_a.links[static_cast<std::size_t>(i)].joint_limits;
                const auto& lb = scene.chain_b.links[static_cast<std::size_t>(i)].joint_limits;
                qa[i] = rng.uniform(la[0], la[1]);
                qb[i] = rng.uniform(lb[0], lb[1]);
            }
            const auto readings =
                simulate_readings(scene.placement, scene.chain_b, qb, scene.chain_a, qa);
            const auto poses_a = forward_kinematics(scene.chain_a, qa);
            // Oracle: min distance from each sensor point to densely sampled
            // surface points of every arm_1 cuboid.
            std::vector<Eigen::Vector3d> surface;
            double spacing = 0;
            for (int i = 0; i < kNumLinks; ++i) {
                const Cuboid& c = scene.chain_a.links[static_cast<std::size_t>(i)].geometry;
                const RigidTransform pose =
                    poses_a[static_cast<std::size_t>(i)].compose(c.frame_offset);
                const Eigen::Vector3d he = c.half_extents;
                const double h = 0.01;
                spacing = std::max(spacing, h);
                for (int axis = 0; axis < 3; ++axis) {
                    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
                    const int nu = std::max(2, static_cast<int>(2 * he[ua] / h) + 1);
                    const int nv = std::max(2, static_cast<int>(2 * he[va] / h) + 1);
                    for (double sign : {-1.0, 1.0})
                        for (int iu = 0; iu < nu; ++iu)
                            for (int iv = 0; iv < nv; ++iv) {
                                Eigen::Vector3d local;
                                local[axis] = sign * he[axis];
                                local[ua] = -he[ua] + 2 * he[ua] * iu / (nu - 1);
                                local[va] = -he[va] + 2 * he[va] * iv / (nv - 1);
                                surface.push_back(pose.apply(local));
                            }
                }
            }
            const auto poses_b = forward_kinematics(scene.chain_b, qb);
            for (const SensorReading& r : readings) {
                const Cuboid& c =
                    scene.chain_b.links[static_cast<std::size_t>(r.link - 1)].geometry;
                Eigen::Vector3d local = Eigen::Vector3d::Zero();
                const Eigen::Vector2d he = face_half_extents(c, r.face);
                (void)he;
                switch (r.face) {
                    case Face::PosX: local = {c.half_extents.x(), r.uv.x(), r.uv.y()}; break;
                    case Face::NegX: local = {-c.half_extents.x(), r.uv.x(), r.uv.y()}; break;
                    case Face::PosY: local = {r.uv.x(), c.half_extents.y(), r.uv.y()}; break;
                    case Face::NegY: local = {r.uv.x(), -c.half_extents.y(), r.uv.y()}; break;
                    case Face::PosZ: local = {r.uv.x(), r.uv.y(), c.half_extents.z()}; break;
                    case Face::NegZ: local = {r.uv.x(), r.uv.y(), -c.half_extents.z()}; break;
                }
                const Eigen::Vector3d p = poses_b[static_cast<std::size_t>(r.link - 1)]
                                              .compose(c.frame_offset)
                                              .apply(local);
                double oracle = std::numeric_limits<double>::infinity();
                for (const Eigen::Vector3d& s : surface)
                    oracle = std::min(oracle, (p - s).norm());
                CHECK(r.distance <= oracle + 1e-9);
                CHECK(std::abs(r.distance - oracle) <= 2 * spacing);
            }
        }
    }

    TEST_CASE("parked far obstacle: zero replans, executed path equals the plan") {
        const DemoScene scene;
        const KinematicChain far_a = scene_chain(10, 0);
        EpisodeConfig ec = scene.episode();
        ec.obstacle.start = JointConfig{{0, 0.5, 0, 0, 0, 0}};
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, far_a, scene.chain_b, ec);
        CHECK(r.success);
        CHECK(r.replans == 0);
        CHECK(r.failure_reason.empty());

        std::vector<int> planned, visited;
        for (const TraceStep& t : r.trace) {
            if (t.event == StepEvent::Plan) planned = t.planned_path;
            if (t.event == StepEvent::Arrive) visited.push_back(t.target_node);
        }
        CHECK(planned == std::vector<int>{0, 1, 3});
        CHECK(visited == planned);
    }

    TEST_CASE("demo scene: parked obstacle forces one replan and a detour to success") {
        const DemoScene scene;
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, scene.chain_a, scene.chain_b,
                        scene.episode());
        INFO("failure reason: ", r.failure_reason);
        CHECK(r.success);
        CHECK(r.replans >= 1);

        std::vector<int> visited;
        int replan_events = 0;
        for (const TraceStep& t : r.trace) {
            if (t.event == StepEvent::Replan) {
                ++replan_events;
                CHECK(t.planned_path == std::vector<int>{0, 2, 3});
            }
            if (t.event == StepEvent::Arrive) visited.push_back(t.target_node);
        }
        CHECK(replan_events == r.replans);
        REQUIRE_FALSE(visited.empty());
        CHECK(visited.back() == 3);
        // The blocked node is never reached.
        for (const int id : visited) CHECK(id != 1);

        // Every motion substep of the successful episode replays collision-free.
        for (const TraceStep& t : r.trace) {
            if (t.event != StepEvent::Move) continue;
            CHECK(arm_pair_proximity(scene.chain_a, t.theta_a, scene.chain_b, t.theta_b)
                      .distance > 0.0);
        }
        // Replan count equals the threshold-violation count in the trace:
        // violations are the Move steps whose reading dipped below d_safe
        // toward a forward node (the step immediately preceding each Replan).
        int violations = 0;
        for (std::size_t i = 1; i < r.trace.size(); ++i)
            if (r.trace[i].event == StepEvent::Replan &&
                r.trace[i - 1].event == StepEvent::Move &&
                r.trace[i - 1].min_reading < 0.15)
                ++violations;
        CHECK(violations == r.replans);
    }

    TEST_CASE("episodes are deterministic") {
        const DemoScene scene;
        const EpisodeResult a = run_episode(scene.graph, scene.placement, scene.chain_a,
                                            scene.chain_b, scene.episode());
        const EpisodeResult b = run_episode(scene.graph, scene.placement, scene.chain_a,
                                            scene.chain_b, scene.episode());
        CHECK(a.success == b.success);
        CHECK(a.replans == b.replans);
        CHECK(a.t_motion_s == b.t_motion_s);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t i = 0; i < a.trace.size(); ++i) {
            CHECK(a.trace[i].theta_a == b.trace[i].theta_a);
            CHECK(a.trace[i].theta_b == b.trace[i].theta_b);
            CHECK(a.trace[i].event == b.trace[i].event);
            CHECK(a.trace[i].target_node == b.trace[i].target_node);
        }
    }

    TEST_CASE("an unreachable goal fails the episode without throwing") {
        const DemoScene scene;
        EpisodeConfig ec = scene.episode();
        ec.d_safe = 1e9;  // every reading violates: blacklisting cascade
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, scene.chain_a, scene.chain_b, ec);
        CHECK_FALSE(r.success);
        CHECK_FALSE(r.failure_reason.empty());
    }

    TEST_CASE("max_steps exhaustion fails the episode cleanly") {
        const DemoScene scene;
        EpisodeConfig ec = scene.episode();
        ec.max_steps = 5;
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, scene.chain_a, scene.chain_b, ec);
        CHECK_FALSE(r.success);
        CHECK(r.failure_reason == "exceeded max_steps");
    }

    TEST_CASE("simulated motion time is the Linf path length at unit joint speed") {
        const DemoScene scene;
        const KinematicChain far_a = scene_chain(10, 0);
        EpisodeConfig ec = scene.episode();
        ec.obstacle.start = JointConfig{{0, 0.5, 0, 0, 0, 0}};
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, far_a, scene.chain_b, ec);
        REQUIRE(r.success);
        // Path 0 -> 1 -> 3 from a start equal to node 0's pose.
        const auto linf = [](const JointConfig& a, const JointConfig& b) {
            double d = 0;
            for (int i = 0; i < kNumLinks; ++i) d = std::max(d, std::abs(a[i] - b[i]));
            return d;
        };
        const double expected =
            (linf(scene.n0, scene.n1) + linf(scene.n1, scene.n3)) / kJointSpeed;
        CHECK(r.t_motion_s == doctest::Approx(expected).epsilon(1e-9));
    }

    TEST_CASE("mode-B style goal chains visit every goal in order") {
        const DemoScene scene;
        const KinematicChain far_a = scene_chain(10, 0);
        EpisodeConfig ec = scene.episode();
        ec.obstacle.start = JointConfig{{0, 0.5, 0, 0, 0, 0}};
        ec.goals = {scene.n1, scene.n2, scene.n3};
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, far_a, scene.chain_b, ec);
        CHECK(r.success);
        std::vector<int> goal_events;
        for (const TraceStep& t : r.trace)
            if (t.event == StepEvent::Goal) goal_events.push_back(t.target_node);
        CHECK(goal_events == std::vector<int>{1, 2, 3});
    }

    TEST_CASE("compute_metrics arithmetic") {
        EpisodeResult ok, bad;
        ok.success = true;
        ok.t_plan_s = 0.5;
        ok.t_motion_s = 4.5;
        bad.success = false;
        bad.t_plan_s = 1.0;
        bad.t_motion_s = 2.0;

        const Metrics all_ok = compute_metrics({ok, ok});
        CHECK(all_ok.sr_percent == 100.0);
        CHECK(all_ok.t_mean_s == doctest::Approx(5.0));

        const Metrics half = compute_metrics({ok, bad});
        CHECK(half.sr_percent == 50.0);
        CHECK(half.t_mean_s == doctest::Approx(4.0));

        CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);
    }

    TEST_CASE("episode.json round trip") {
        testutil::ScratchDir scratch("episode_json");
        const DemoScene scene;
        EpisodeConfig ec = scene.episode();
        ec.obstacle.type = ObstacleScript::Type::Waypoints;
        ec.obstacle.waypoints = {scene.n0, scene.n1};
        ec.obstacle.speed = 0.45;
        ec.seed = 99;
        const std::string path = scratch.file("episode.json");
        save_episode_config(ec, path);
        const EpisodeConfig back = load_episode_config(path);
        CHECK(back.start == ec.start);
        REQUIRE(back.goals.size() == 1);
        CHECK(back.goals[0] == ec.goals[0]);
        CHECK(back.obstacle.type == ec.obstacle.type);
        CHECK(back.obstacle.start == ec.obstacle.start);
        REQUIRE(back.obstacle.waypoints.size() == 2);
        CHECK(back.obstacle.waypoints[1] == scene.n1);
        CHECK(back.obstacle.speed == ec.obstacle.speed);
        CHECK(back.d_safe == ec.d_safe);
        CHECK(back.max_steps == ec.max_steps);
        CHECK(back.interp_substeps == ec.interp_substeps);
        CHECK(back.seed == ec.seed);
    }

    TEST_CASE("trace.jsonl round trip") {
        testutil::ScratchDir scratch("trace_jsonl");
        const DemoScene scene;
        const EpisodeResult r =
            run_episode(scene.graph, scene.placement, scene.chain_a, scene.chain_b,
                        scene.episode());
        const std::string path = scratch.file("trace.jsonl");
        write_trace(r, path);
        const std::vector<TraceStep> back = read_trace(path);
        REQUIRE(back.size() == r.trace.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].step == r.trace[i].step);
            CHECK(back[i].theta_a == r.trace[i].theta_a);
            CHECK(back[i].theta_b == r.trace[i].theta_b);
            CHECK(back[i].event == r.trace[i].event);
            CHECK(back[i].target_node == r.trace[i].target_node);
            CHECK(back[i].planned_path == r.trace[i].planned_path);
            if (std::isfinite(r.trace[i].min_reading))
                CHECK(back[i].min_reading == r.trace[i].min_reading);
            else
                CHECK_FALSE(std::isfinite(back[i].min_reading));
        }
    }
}
