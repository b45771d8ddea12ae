// dualarm — command-line front end for the dual-arm latent roadmap pipeline.
//
// Stages (run in order for a full pipeline):
//   gen-data -> place-sensors -> train-vae -> build-graph -> run-episodes
// plus `bench` (mode A/B table) and `export-plots` (path overlay CSVs).

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "dualarm/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int n_samples = 0;
    int k = 0;
    int n_synthetic = -1;
    double d_safe = 0;
    int episodes = 0;
    std::string mode;
    std::string episode_file;
    std::string trace;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* n_samples_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* n_synthetic_opt = nullptr;
    CLI::Option* d_safe_opt = nullptr;
    CLI::Option* episodes_opt = nullptr;
    CLI::Option* mode_opt = nullptr;
    CLI::Option* episode_file_opt = nullptr;
    CLI::Option* trace_opt = nullptr;
};

void add_common_options(CLI::App* sub, CliOverrides& o) {
    sub->add_option("--config", o.config, "JSON config file (defaults used when absent)");
    o.seed_opt = sub->add_option("--seed", o.seed, "Master seed override");
    o.out_opt = sub->add_option("--out", o.out, "Output directory override");
    o.n_samples_opt = sub->add_option("--n-samples", o.n_samples, "Dataset size override");
    o.k_opt = sub->add_option("--k", o.k, "KNN degree override");
    o.n_synthetic_opt =
        sub->add_option("--n-synthetic", o.n_synthetic, "Densification point count override");
    o.d_safe_opt = sub->add_option("--d-safe", o.d_safe, "Safety threshold override (m)");
    o.episodes_opt = sub->add_option("--episodes", o.episodes, "Episode count override");
    o.mode_opt = sub->add_option("--mode", o.mode, "Episode mode: A or B")
                     ->check(CLI::IsMember({"A", "B"}));
    o.episode_file_opt =
        sub->add_option("--episode-file", o.episode_file, "Run a single episode.json");
    o.trace_opt = sub->add_option("--trace", o.trace, "Trace file for export-plots");
}

dualarm::PipelineConfig build_config(const CliOverrides& o) {
    dualarm::PipelineConfig cfg = o.config.empty() ? dualarm::default_pipeline_config()
                                                   : dualarm::load_pipeline_config(o.config);
    if (o.seed_opt->count() > 0) cfg.seed = o.seed;
    if (o.out_opt->count() > 0) cfg.out_dir = o.out;
    if (o.n_samples_opt->count() > 0) cfg.n_samples = o.n_samples;
    if (o.k_opt->count() > 0) cfg.graph_k = o.k;
    if (o.n_synthetic_opt->count() > 0) cfg.graph_n_synthetic = o.n_synthetic;
    if (o.d_safe_opt->count() > 0) cfg.d_safe = o.d_safe;
    if (o.episodes_opt->count() > 0) cfg.episodes = o.episodes;
    if (o.mode_opt->count() > 0) cfg.mode = o.mode[0];
    if (o.episode_file_opt->count() > 0) cfg.episode_file = o.episode_file;
    if (o.trace_opt->count() > 0) cfg.export_trace = o.trace;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-arm latent roadmap planning toolkit"};
    app.set_version_flag("--version", std::string("dualarm ") + dualarm::kToolVersion);
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"gen-data", "Sample dual-arm poses, label collisions, write dataset.jsonl"},
        {"place-sensors", "Tag collision points and compute per-face sensor placements"},
        {"train-vae", "Train the pose VAE, write model.json and loss.csv"},
        {"build-graph", "Embed, densify and connect the safe latent roadmap"},
        {"run-episodes", "Execute reactive episodes, write traces and metrics.csv"},
        {"bench", "Mode A/B benchmark table over generated episodes"},
        {"export-plots", "Emit path-overlay CSV data from a trace"},
    };

    std::vector<CliOverrides> overrides(stages.size());
    for (std::size_t i = 0; i < stages.size(); ++i) {
        CLI::App* sub = app.add_subcommand(stages[i].first, stages[i].second);
        add_common_options(sub, overrides[i]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (app.get_subcommand(stages[i].first)->parsed()) {
                const dualarm::StageResult result =
                    dualarm::run_stage(build_config(overrides[i]), stages[i].first);
                std::cout << result.summary << "\n";
                std::cout << result.files.size() << " file(s) written\n";
                return 0;
            }
        }
        std::cerr << "error: no stage selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
