#include "dualarm/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "dualarm/dataset.hpp"
#include "dualarm/geometry.hpp"
#include "dualarm/sha256.hpp"
#include "json_util.hpp"

namespace dualarm {

namespace fs = std::filesystem;

namespace {

ObstacleScript default_sweep() {
    // arm_1 leans into the shared workspace and sweeps its base yaw.
    ObstacleScript s;
    s.type = ObstacleScript::Type::Waypoints;
    s.start = JointConfig{{-0.8, 1.2, 0.0, -0.5, 0.0, 0.0}};
    s.waypoints = {JointConfig{{-0.8, 1.2, 0.0, -0.5, 0.0, 0.0}},
                   JointConfig{{0.8, 1.2, 0.0, -0.5, 0.0, 0.0}}};
    s.speed = 0.3;
    return s;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            throw std::runtime_error("config: unknown key '" + key + "' in " + where);
    }
}

std::string out_path(const PipelineConfig& cfg, const std::string& rel) {
    return (fs::path(cfg.out_dir) / rel).string();
}

void require_input(const PipelineConfig& cfg, const std::string& rel,
                   const std::string& producing_stage) {
    if (!fs::exists(out_path(cfg, rel)))
        throw std::runtime_error("missing input " + out_path(cfg, rel) + "; run '" +
                                 producing_stage + "' first");
}

void update_manifest(const PipelineConfig& cfg, const std::string& stage,
                     const std::vector<std::string>& files) {
    const std::string path = out_path(cfg, "run_manifest.json");
    json doc = json::object();
    if (fs::exists(path)) doc = json::parse(read_file(path));
    doc["tool_version"] = kToolVersion;
    doc["seed"] = cfg.seed;
    json outputs = json::object();
    for (const std::string& f : files) {
        const std::string rel = fs::relative(f, cfg.out_dir).string();
        outputs[rel] = manifest_digest(f);
    }
    doc["stages"][stage] = json{{"outputs", outputs}};
    write_file_atomic(path, doc.dump(2) + "\n");
}

std::string face_slug(Face f) {
    switch (f) {
        case Face::PosX: return "posx";
        case Face::NegX: return "negx";
        case Face::PosY: return "posy";
        case Face::NegY: return "negy";
        case Face::PosZ: return "posz";
        default: return "negz";
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct EpisodeBatch {
    std::vector<EpisodeConfig> configs;
    std::vector<EpisodeResult> results;
    std::vector<double> plan_latencies;
};

EpisodeBatch run_episode_batch(const LatentGraph& graph, const PlacementSet& placement,
                               const ChainSetup& chains, const PipelineConfig& cfg, char mode,
                               int count) {
    EpisodeBatch batch;
    for (int i = 0; i < count; ++i) {
        EpisodeConfig ec = make_episode(graph, cfg, mode, i);
        EpisodeResult r = run_episode(graph, placement, chains.a, chains.b, ec);
        batch.plan_latencies.insert(batch.plan_latencies.end(), r.plan_latencies_s.begin(),
                                    r.plan_latencies_s.end());
        batch.configs.push_back(std::move(ec));
        batch.results.push_back(std::move(r));
    }
    return batch;
}

std::string batch_summary_line(const EpisodeBatch& batch, char mode) {
    const Metrics m = compute_metrics(batch.results);
    std::ostringstream out;
    out << "# mode=" << mode << " episodes=" << batch.results.size() << " SR=" << m.sr_percent
        << "% T_mean=" << m.t_mean_s << "s median_plan_ms=" << 1e3 * median(batch.plan_latencies);
    return out.str();
}

}  // namespace

PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    cfg.obstacle = default_sweep();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig cfg = default_pipeline_config();
    const json doc = json::parse(read_file(path));
    reject_unknown_keys(doc, {"seed", "out_dir", "chains", "dataset", "placement", "vae",
                              "graph", "episodes"},
                        "top level");

    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("out_dir")) cfg.out_dir = doc.at("out_dir").get<std::string>();

    if (doc.contains("chains")) {
        const json& j = doc.at("chains");
        reject_unknown_keys(j, {"chain_a", "chain_b", "base_a", "base_b", "joint_limits"},
                            "chains");
        if (j.contains("chain_a")) cfg.chain_a_path = j.at("chain_a").get<std::string>();
        if (j.contains("chain_b")) cfg.chain_b_path = j.at("chain_b").get<std::string>();
        const auto parse_base = [](const json& jb, Eigen::Vector3d& xyz, double& yaw) {
            reject_unknown_keys(jb, {"xyz", "yaw"}, "chains.base");
            if (jb.contains("xyz")) xyz = vec3_from_json(jb.at("xyz"));
            if (jb.contains("yaw")) yaw = jb.at("yaw").get<double>();
        };
        if (j.contains("base_a")) parse_base(j.at("base_a"), cfg.base_a_xyz, cfg.base_a_yaw);
        if (j.contains("base_b")) parse_base(j.at("base_b"), cfg.base_b_xyz, cfg.base_b_yaw);
        if (j.contains("joint_limits")) {
            const json& jl = j.at("joint_limits");
            if (!jl.is_array() || jl.size() != static_cast<std::size_t>(kNumLinks))
                throw std::runtime_error("config: chains.joint_limits needs 6 [lo, hi] pairs");
            for (int i = 0; i < kNumLinks; ++i) {
                const json& pair = jl[static_cast<std::size_t>(i)];
                cfg.joint_limits[static_cast<std::size_t>(i)] = {pair.at(0).get<double>(),
                                                                 pair.at(1).get<double>()};
            }
        }
    }
    if (doc.contains("dataset")) {
        const json& j = doc.at("dataset");
        reject_unknown_keys(j, {"n_samples"}, "dataset");
        if (j.contains("n_samples")) cfg.n_samples = j.at("n_samples").get<int>();
    }
    if (doc.contains("placement")) {
        const json& j = doc.at("placement");
        reject_unknown_keys(j, {"min_hits", "bins", "statistic"}, "placement");
        if (j.contains("min_hits")) cfg.placement.min_hits = j.at("min_hits").get<int>();
        if (j.contains("bins")) cfg.histogram_bins = j.at("bins").get<int>();
        if (j.contains("statistic")) {
            const std::string s = j.at("statistic").get<std::string>();
            if (s == "mean")
                cfg.placement.statistic = PlacementStatistic::Mean;
            else if (s == "median")
                cfg.placement.statistic = PlacementStatistic::Median;
            else
                throw std::runtime_error("config: placement.statistic must be mean or median");
        }
    }
    if (doc.contains("vae")) {
        const json& j = doc.at("vae");
        reject_unknown_keys(j, {"hidden", "beta", "learning_rate", "batch_size", "epochs"},
                            "vae");
        if (j.contains("hidden")) cfg.vae_hidden = j.at("hidden").get<std::vector<int>>();
        if (j.contains("beta")) cfg.vae_beta = j.at("beta").get<double>();
        if (j.contains("learning_rate"))
            cfg.vae_train.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("batch_size")) cfg.vae_train.batch_size = j.at("batch_size").get<int>();
        if (j.contains("epochs")) cfg.vae_train.epochs = j.at("epochs").get<int>();
    }
    if (doc.contains("graph")) {
        const json& j = doc.at("graph");
        reject_unknown_keys(j, {"k", "n_synthetic"}, "graph");
        if (j.contains("k")) cfg.graph_k = j.at("k").get<int>();
        if (j.contains("n_synthetic")) cfg.graph_n_synthetic = j.at("n_synthetic").get<int>();
    }
    if (doc.contains("episodes")) {
        const json& j = doc.at("episodes");
        reject_unknown_keys(j,
                            {"count", "mode", "goals_mode_b", "d_safe", "max_steps",
                             "interp_substeps", "obstacle", "episode_file", "export_trace"},
                            "episodes");
        if (j.contains("count")) cfg.episodes = j.at("count").get<int>();
        if (j.contains("mode")) {
            const std::string m = j.at("mode").get<std::string>();
            if (m != "A" && m != "B") throw std::runtime_error("config: mode must be A or B");
            cfg.mode = m[0];
        }
        if (j.contains("goals_mode_b")) cfg.goals_mode_b = j.at("goals_mode_b").get<int>();
        if (j.contains("d_safe")) cfg.d_safe = j.at("d_safe").get<double>();
        if (j.contains("max_steps")) cfg.max_steps = j.at("max_steps").get<int>();
        if (j.contains("interp_substeps"))
            cfg.interp_substeps = j.at("interp_substeps").get<int>();
        if (j.contains("episode_file")) cfg.episode_file = j.at("episode_file").get<std::string>();
        if (j.contains("export_trace")) cfg.export_trace = j.at("export_trace").get<std::string>();
        if (j.contains("obstacle")) {
            const json& jo = j.at("obstacle");
            reject_unknown_keys(jo, {"type", "start", "waypoints", "speed"}, "episodes.obstacle");
            ObstacleScript s;
            const std::string type = jo.at("type").get<std::string>();
            if (type == "parked")
                s.type = ObstacleScript::Type::Parked;
            else if (type == "waypoints")
                s.type = ObstacleScript::Type::Waypoints;
            else if (type == "chase")
                s.type = ObstacleScript::Type::Chase;
            else
                throw std::runtime_error("config: unknown obstacle type " + type);
            s.start = config_from_json(jo.at("start"));
            if (jo.contains("waypoints"))
                for (const json& w : jo.at("waypoints")) s.waypoints.push_back(config_from_json(w));
            if (jo.contains("speed")) s.speed = jo.at("speed").get<double>();
            cfg.obstacle = s;
        }
    }
    return cfg;
}

ChainSetup resolve_chains(const PipelineConfig& cfg) {
    const auto built_in = [&](const Eigen::Vector3d& xyz, double yaw) {
        KinematicChain chain =
            with_base(default_chain(), base_pose(xyz.x(), xyz.y(), xyz.z(), yaw));
        for (int i = 0; i < kNumLinks; ++i)
            chain.links[static_cast<std::size_t>(i)].joint_limits =
                cfg.joint_limits[static_cast<std::size_t>(i)];
        return chain;
    };
    ChainSetup chains;
    chains.a = cfg.chain_a_path.empty() ? built_in(cfg.base_a_xyz, cfg.base_a_yaw)
                                        : load_chain(cfg.chain_a_path);
    chains.b = cfg.chain_b_path.empty() ? built_in(cfg.base_b_xyz, cfg.base_b_yaw)
                                        : load_chain(cfg.chain_b_path);
    return chains;
}

EpisodeConfig make_episode(const LatentGraph& graph, const ChainSetup& chains,
                           const PipelineConfig& cfg, char mode, int index) {
    const std::uint64_t stream =
        static_cast<std::uint64_t>(index) + (mode == 'B' ? (1ULL << 32) : 0);
    Rng rng = Rng::derive(cfg.seed, stream);

    const std::vector<int> component = largest_component(graph);
    if (component.size() < 2)
        throw std::runtime_error("make_episode: largest component has fewer than 2 nodes");

    EpisodeConfig ec;
    ec.seed = rng.seed();
    ec.obstacle = cfg.obstacle;
    if (ec.obstacle.type == ObstacleScript::Type::Waypoints && ec.obstacle.waypoints.size() >= 2) {
        // Random phase along the first sweep leg so episodes differ.
        const double phase = rng.uniform01();
        const JointConfig& w0 = ec.obstacle.waypoints[0];
        const JointConfig& w1 = ec.obstacle.waypoints[1];
        for (int i = 0; i < kNumLinks; ++i)
            ec.obstacle.start[i] = w0[i] + phase * (w1[i] - w0[i]);
    }

    // Redraw anchor nodes until their poses clear the obstacle's initial
    // configuration; an episode that starts inside the obstacle (or aims at
    // a node it currently covers) is not a meaningful trial.
    const JointConfig obstacle_start = clamp_to_limits(chains.a, ec.obstacle.start);
    const double clearance = std::max(2.0 * cfg.d_safe, 0.1);
    const auto pick_clear = [&](int avoid) {
        int fallback = -1;
        for (int attempt = 0; attempt < 200; ++attempt) {
            const int id = component[static_cast<std::size_t>(
                rng.uniform_int(component.size()))];
            if (id == avoid) continue;
            if (fallback < 0) fallback = id;
            const JointConfig pose =
                clamp_to_limits(chains.b, graph.nodes[static_cast<std::size_t>(id)].theta_b);
            if (arm_pair_proximity(chains.a, obstacle_start, chains.b, pose).distance >
                clearance)
                return id;
        }
        return fallback;
    };

    const int start_node = pick_clear(-1);
    ec.start = graph.nodes[static_cast<std::size_t>(start_node)].theta_b;
    const int n_goals = mode == 'B' ? cfg.goals_mode_b : 1;
    int prev = start_node;
    for (int g = 0; g < n_goals; ++g) {
        const int goal = pick_clear(prev);
        ec.goals.push_back(graph.nodes[static_cast<std::size_t>(goal)].theta_b);
        prev = goal;
    }
    ec.d_safe = cfg.d_safe;
    ec.max_steps = cfg.max_steps;
    ec.interp_substeps = cfg.interp_substeps;
    return ec;
}

StageResult stage_gen_data(const PipelineConfig& cfg) {
    if (cfg.n_samples < 1)
        throw std::runtime_error("gen-data: n_samples must be >= 1 (got " +
                                 std::to_string(cfg.n_samples) + ")");
    const ChainSetup chains = resolve_chains(cfg);
    StageResult result;
    const std::string chain_a = out_path(cfg, "chain_a.json");
    const std::string chain_b = out_path(cfg, "chain_b.json");
    save_chain(chains.a, chain_a);
    save_chain(chains.b, chain_b);

    const Dataset ds = generate_dataset(chains.a, chains.b, cfg.n_samples, cfg.seed);
    const std::string dataset = out_path(cfg, "dataset.jsonl");
    write_dataset(ds, dataset);

    result.files = {chain_a, chain_b, dataset};
    std::ostringstream s;
    s << "gen-data: " << ds.samples.size() << " samples, collision fraction "
      << collision_fraction(ds);
    result.summary = s.str();
    update_manifest(cfg, "gen-data", result.files);
    return result;
}

StageResult stage_place_sensors(const PipelineConfig& cfg) {
    require_input(cfg, "dataset.jsonl", "gen-data");
    require_input(cfg, "chain_b.json", "gen-data");
    const KinematicChain chain_b = load_chain(out_path(cfg, "chain_b.json"));
    const Dataset ds = read_dataset(out_path(cfg, "dataset.jsonl"));

    const TagResult tagged = tag_collision_points(ds, chain_b);
    const PlacementSet set = place_all(tagged.hits, chain_b, cfg.placement);

    StageResult result;
    const std::string placement_path = out_path(cfg, "placement.json");
    save_placements(set, placement_path);
    result.files.push_back(placement_path);

    for (const SensorPlacement& p : set.placements) {
        const Cuboid& cuboid = chain_b.links[static_cast<std::size_t>(p.link - 1)].geometry;
        const Histogram2D hist =
            face_histogram(tagged.hits, p.link, p.face, cuboid, cfg.histogram_bins);
        const std::string path = out_path(cfg, "histograms/link" + std::to_string(p.link) + "_" +
                                                   face_slug(p.face) + ".csv");
        write_histogram_csv(hist, path);
        result.files.push_back(path);
    }

    std::ostringstream s;
    s << "place-sensors: " << tagged.hits.size() << " face hits (" << tagged.rejected
      << " rejected), " << set.placements.size() << " placements, " << set.skipped.size()
      << " faces below min_hits";
    result.summary = s.str();
    update_manifest(cfg, "place-sensors", result.files);
    return result;
}

StageResult stage_train_vae(const PipelineConfig& cfg) {
    require_input(cfg, "dataset.jsonl", "gen-data");
    const Dataset ds = read_dataset(out_path(cfg, "dataset.jsonl"));
    if (ds.samples.empty()) throw std::runtime_error("train-vae: dataset is empty");

    VaeModel model = make_vae(13, cfg.vae_hidden, Rng::derive(cfg.seed, 101).seed(),
                              cfg.vae_beta);
    const Eigen::MatrixXd X = pose_matrix(ds);
    const std::vector<double> history =
        train(model, X, cfg.vae_train, Rng::derive(cfg.seed, 102).seed());

    StageResult result;
    const std::string model_path = out_path(cfg, "model.json");
    save_model(model, model_path);
    std::ostringstream loss;
    loss << "epoch,loss\n";
    loss << std::setprecision(17);
    for (std::size_t e = 0; e < history.size(); ++e) loss << e << "," << history[e] << "\n";
    const std::string loss_path = out_path(cfg, "loss.csv");
    write_file_atomic(loss_path, loss.str());

    result.files = {model_path, loss_path};
    std::ostringstream s;
    s << "train-vae: " << history.size() << " epochs, final mean loss " << history.back();
    result.summary = s.str();
    update_manifest(cfg, "train-vae", result.files);
    return result;
}

StageResult stage_build_graph(const PipelineConfig& cfg) {
    require_input(cfg, "dataset.jsonl", "gen-data");
    require_input(cfg, "model.json", "train-vae");
    const Dataset ds = read_dataset(out_path(cfg, "dataset.jsonl"));
    const VaeModel model = load_model(out_path(cfg, "model.json"));

    const LatentGraph graph = build_graph(model, ds, cfg.graph_k, cfg.graph_n_synthetic,
                                          Rng::derive(cfg.seed, 103).seed());

    StageResult result;
    const std::string graph_path = out_path(cfg, "graph.json");
    save_graph(graph, graph_path);
    const std::string scatter_path = out_path(cfg, "latent_scatter.csv");
    write_latent_scatter_csv(graph, scatter_path);
    result.files = {graph_path, scatter_path};

    std::size_t edges = 0, safe = 0;
    for (int id = 0; id < graph.size(); ++id) {
        edges += graph.adjacency[static_cast<std::size_t>(id)].size();
        safe += graph.is_safe(id) ? 1 : 0;
    }
    std::ostringstream s;
    s << "build-graph: " << graph.size() << " nodes (" << safe << " safe), " << edges / 2
      << " edges, largest component " << largest_component(graph).size();
    result.summary = s.str();
    update_manifest(cfg, "build-graph", result.files);
    return result;
}

StageResult stage_run_episodes(const PipelineConfig& cfg) {
    require_input(cfg, "graph.json", "build-graph");
    require_input(cfg, "placement.json", "place-sensors");
    require_input(cfg, "chain_a.json", "gen-data");
    require_input(cfg, "chain_b.json", "gen-data");
    const LatentGraph graph = load_graph(out_path(cfg, "graph.json"));
    const PlacementSet placement = load_placements(out_path(cfg, "placement.json"));
    const ChainSetup chains{load_chain(out_path(cfg, "chain_a.json")),
                            load_chain(out_path(cfg, "chain_b.json"))};

    StageResult result;
    EpisodeBatch batch;
    if (!cfg.episode_file.empty()) {
        EpisodeConfig ec = load_episode_config(cfg.episode_file);
        EpisodeResult r = run_episode(graph, placement, chains.a, chains.b, ec);
        batch.plan_latencies = r.plan_latencies_s;
        batch.configs.push_back(std::move(ec));
        batch.results.push_back(std::move(r));
    } else {
        if (cfg.episodes < 1) throw std::runtime_error("run-episodes: count must be >= 1");
        batch = run_episode_batch(graph, placement, chains, cfg, cfg.mode, cfg.episodes);
    }

    for (std::size_t i = 0; i < batch.results.size(); ++i) {
        std::ostringstream idx;
        idx << std::setw(3) << std::setfill('0') << i;
        const std::string ep_path = out_path(cfg, "episodes/episode_" + idx.str() + ".json");
        save_episode_config(batch.configs[i], ep_path);
        result.files.push_back(ep_path);
        const std::string trace_path = out_path(cfg, "traces/trace_" + idx.str() + ".jsonl");
        write_trace(batch.results[i], trace_path);
        result.files.push_back(trace_path);
    }
    const std::string metrics_path = out_path(cfg, "metrics.csv");
    write_metrics_csv(batch.results, metrics_path, batch_summary_line(batch, cfg.mode));
    result.files.push_back(metrics_path);

    result.summary = "run-episodes: " + batch_summary_line(batch, cfg.mode).substr(2);
    update_manifest(cfg, "run-episodes", result.files);
    return result;
}

StageResult stage_bench(const PipelineConfig& cfg) {
    require_input(cfg, "graph.json", "build-graph");
    require_input(cfg, "placement.json", "place-sensors");
    const LatentGraph graph = load_graph(out_path(cfg, "graph.json"));
    const PlacementSet placement = load_placements(out_path(cfg, "placement.json"));
    const ChainSetup chains{load_chain(out_path(cfg, "chain_a.json")),
                            load_chain(out_path(cfg, "chain_b.json"))};

    StageResult result;
    std::ostringstream table;
    table << "mode,episodes,sr_percent,t_mean_s,median_plan_ms\n";
    for (const char mode : {'A', 'B'}) {
        const EpisodeBatch batch =
            run_episode_batch(graph, placement, chains, cfg, mode, cfg.episodes);
        const Metrics m = compute_metrics(batch.results);
        const std::string metrics_path =
            out_path(cfg, std::string("bench/metrics_") + mode + ".csv");
        write_metrics_csv(batch.results, metrics_path, batch_summary_line(batch, mode));
        result.files.push_back(metrics_path);
        table << mode << "," << batch.results.size() << "," << m.sr_percent << "," << m.t_mean_s
              << "," << 1e3 * median(batch.plan_latencies) << "\n";
    }
    const std::string summary_path = out_path(cfg, "bench/summary.csv");
    write_file_atomic(summary_path, table.str());
    result.files.push_back(summary_path);
    result.summary = "bench: wrote " + summary_path;
    update_manifest(cfg, "bench", result.files);
    return result;
}

StageResult stage_export_plots(const PipelineConfig& cfg) {
    require_input(cfg, "graph.json", "build-graph");
    const LatentGraph graph = load_graph(out_path(cfg, "graph.json"));
    const std::string trace_path =
        cfg.export_trace.empty() ? out_path(cfg, "traces/trace_000.jsonl") : cfg.export_trace;
    if (!fs::exists(trace_path))
        throw std::runtime_error("missing trace " + trace_path + "; run 'run-episodes' first");
    const std::vector<TraceStep> trace = read_trace(trace_path);

    std::ostringstream out;
    out << "phase,seq,node,u,v\n";
    const auto emit = [&](const std::string& phase, std::size_t seq, int node) {
        const GraphNode& n = graph.nodes.at(static_cast<std::size_t>(node));
        out << phase << "," << seq << "," << node << "," << n.z.x() << "," << n.z.y() << "\n";
    };
    int plan_idx = 0;
    std::vector<int> visited;
    for (const TraceStep& t : trace) {
        if (t.event == StepEvent::Plan || t.event == StepEvent::Replan) {
            const std::string phase = "plan_" + std::to_string(plan_idx++);
            for (std::size_t s = 0; s < t.planned_path.size(); ++s)
                emit(phase, s, t.planned_path[s]);
        } else if (t.event == StepEvent::Arrive) {
            if (visited.empty() || visited.back() != t.target_node)
                visited.push_back(t.target_node);
        }
    }
    for (std::size_t s = 0; s < visited.size(); ++s) emit("executed", s, visited[s]);

    StageResult result;
    const std::string overlay_path = out_path(cfg, "plots/path_overlay.csv");
    write_file_atomic(overlay_path, out.str());
    result.files = {overlay_path};
    result.summary = "export-plots: " + std::to_string(plan_idx) + " planned paths, " +
                     std::to_string(visited.size()) + " executed nodes";
    update_manifest(cfg, "export-plots", result.files);
    return result;
}

namespace {

std::vector<std::string> stage_cleanup_targets(const PipelineConfig& cfg,
                                               const std::string& name) {
    if (name == "gen-data")
        return {out_path(cfg, "dataset.jsonl"), out_path(cfg, "chain_a.json"),
                out_path(cfg, "chain_b.json")};
    if (name == "place-sensors")
        return {out_path(cfg, "placement.json"), out_path(cfg, "histograms")};
    if (name == "train-vae") return {out_path(cfg, "model.json"), out_path(cfg, "loss.csv")};
    if (name == "build-graph")
        return {out_path(cfg, "graph.json"), out_path(cfg, "latent_scatter.csv")};
    if (name == "run-episodes")
        return {out_path(cfg, "metrics.csv"), out_path(cfg, "traces"),
                out_path(cfg, "episodes")};
    if (name == "bench") return {out_path(cfg, "bench")};
    if (name == "export-plots") return {out_path(cfg, "plots")};
    return {};
}

}  // namespace

StageResult run_stage(const PipelineConfig& cfg, const std::string& name) {
    try {
        if (name == "gen-data") return stage_gen_data(cfg);
        if (name == "place-sensors") return stage_place_sensors(cfg);
        if (name == "train-vae") return stage_train_vae(cfg);
        if (name == "build-graph") return stage_build_graph(cfg);
        if (name == "run-episodes") return stage_run_episodes(cfg);
        if (name == "bench") return stage_bench(cfg);
        if (name == "export-plots") return stage_export_plots(cfg);
        throw std::runtime_error("unknown stage: " + name);
    } catch (...) {
        for (const std::string& target : stage_cleanup_targets(cfg, name)) {
            std::error_code ec;
            fs::remove_all(target, ec);
        }
        throw;
    }
}

std::string stable_metrics_projection(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::size_t> keep;
    std::ostringstream out;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;  // summary lines carry wall-clock
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (first) {
            first = false;
            header = cells;
            for (std::size_t i = 0; i < header.size(); ++i) {
                const std::string& h = header[i];
                const bool timing = h.size() >= 2 && (h.ends_with("_s") || h.ends_with("_ms"));
                if (!timing) keep.push_back(i);
            }
        }
        bool first_cell = true;
        for (const std::size_t i : keep) {
            if (i >= cells.size()) continue;
            out << (first_cell ? "" : ",") << cells[i];
            first_cell = false;
        }
        out << "\n";
    }
    return out.str();
}

std::string manifest_digest(const std::string& path) {
    const fs::path p(path);
    const std::string name = p.filename().string();
    const bool is_metrics_csv =
        name.ends_with(".csv") && (name.find("metrics") != std::string::npos ||
                                   name.find("summary") != std::string::npos);
    if (is_metrics_csv) return sha256_hex(stable_metrics_projection(read_file(path)));
    return sha256_file(path);
}

}  // namespace dualarm
