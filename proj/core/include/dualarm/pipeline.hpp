#ifndef DUALARM_PIPELINE_HPP
#define DUALARM_PIPELINE_HPP

#include <string>
#include <vector>

#include "dualarm/reactive_planner.hpp"

namespace dualarm {

/**
 * Everything one run needs, parsed from a JSON config file with CLI
 * overrides applied on top. Field defaults are the shipped defaults.
 */
struct PipelineConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "out";

    // Chains: explicit chain.json paths win; otherwise the built-in default
    // chain is planted at the two base poses with the scene joint limits
    // below (a table-top working range that keeps the shared workspace busy).
    std::string chain_a_path;
    std::string chain_b_path;
    Eigen::Vector3d base_a_xyz = Eigen::Vector3d::Zero();
    double base_a_yaw = 0.0;
    Eigen::Vector3d base_b_xyz = Eigen::Vector3d(0.65, 0.0, 0.0);
    double base_b_yaw = kPi;
    std::array<std::array<double, 2>, kNumLinks> joint_limits = {{{-1.2, 1.2},
                                                                  {0.3, 1.05},
                                                                  {-1.2, 1.2},
                                                                  {-1.6, 1.6},
                                                                  {-1.2, 1.2},
                                                                  {-1.6, 1.6}}};

    int n_samples = 10000;

    PlacementOptions placement;
    int histogram_bins = 12;

    std::vector<int> vae_hidden = {450, 250, 100};
    double vae_beta = 1e-3;
    TrainConfig vae_train;

    int graph_k = 8;
    int graph_n_synthetic = 10000;

    int episodes = 100;
    char mode = 'A';  // 'A' single goal, 'B' sequential goals
    int goals_mode_b = 3;
    double d_safe = 0.05;
    int max_steps = 4000;
    int interp_substeps = 10;
    ObstacleScript obstacle;  // shipped default: a workspace sweep
    std::string episode_file;  // run one explicit episode.json instead of generated ones
    std::string export_trace;  // export-plots input; default: traces/trace_000.jsonl
};

/// Shipped defaults (also what an empty config file yields).
PipelineConfig default_pipeline_config();

/// Parse a JSON config file over the defaults. Unknown keys are an error.
PipelineConfig load_pipeline_config(const std::string& path);

/// The two chains a run uses (explicit files or planted defaults).
struct ChainSetup {
    KinematicChain a;
    KinematicChain b;
};
ChainSetup resolve_chains(const PipelineConfig& cfg);

/// Deterministic per-index episode scenario over a built graph: random
/// start/goal nodes from the largest component plus the configured obstacle
/// script started at a random phase. Start and goal poses are redrawn until
/// they clear the obstacle's initial pose, so episodes never begin inside
/// the obstacle or aim at a currently-occluded goal.
EpisodeConfig make_episode(const LatentGraph& graph, const ChainSetup& chains,
                           const PipelineConfig& cfg, char mode, int index);

/// Outcome of one stage: the files it wrote (paths under out_dir).
struct StageResult {
    std::vector<std::string> files;
    std::string summary;  // one human-readable line for the console
};

StageResult stage_gen_data(const PipelineConfig& cfg);
StageResult stage_place_sensors(const PipelineConfig& cfg);
StageResult stage_train_vae(const PipelineConfig& cfg);
StageResult stage_build_graph(const PipelineConfig& cfg);
StageResult stage_run_episodes(const PipelineConfig& cfg);
StageResult stage_bench(const PipelineConfig& cfg);
StageResult stage_export_plots(const PipelineConfig& cfg);

/// Dispatch by stage name; on failure removes the stage's outputs before
/// rethrowing so no partial artifacts survive.
StageResult run_stage(const PipelineConfig& cfg, const std::string& name);

/**
 * Digest used in the run manifest. metrics*.csv files are digested over a
 * timing-stripped projection (wall-clock columns removed) so that reruns
 * with equal seeds produce equal digests; all other files are hashed as-is.
 */
std::string manifest_digest(const std::string& path);

/// The timing-stripped projection itself (exposed for determinism checks).
std::string stable_metrics_projection(const std::string& csv_text);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dualarm

#endif  // DUALARM_PIPELINE_HPP
