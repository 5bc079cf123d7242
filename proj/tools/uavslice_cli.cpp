#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavslice/config.hpp"
#include "uavslice/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<long> steps;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "Configuration file (key = value, optional [section] headers)");
    cmd->add_option("--seed", f.seed, "Run seed (overrides run.seed)");
    cmd->add_option("--steps", f.steps, "Training steps (overrides run.steps)");
    cmd->add_option("--out", f.out, "Output directory (overrides run.out_dir)");
}

uavslice::ExperimentConfig load_config(const CommonFlags& f) {
    uavslice::ExperimentConfig config;
    if (!f.config_path.empty()) {
        auto parsed = uavslice::parse_config_file(f.config_path);
        config = std::move(parsed.config);
        if (!parsed.defaulted_keys.empty()) {
            std::cerr << "config: " << parsed.defaulted_keys.size() << " keys left at their defaults\n";
        }
    }
    for (const auto& key : uavslice::apply_env_overrides(config)) {
        std::cerr << "config: " << key << " set from the environment\n";
    }
    if (f.seed) config.run.seed = *f.seed;
    if (f.steps) config.run.steps = *f.steps;
    if (f.out) config.run.out_dir = *f.out;
    uavslice::validate(config);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    namespace ex = uavslice::experiment;
    CLI::App app{"UAV network-slicing simulator with a multi-agent actor-critic learner"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, baseline_flags;
    std::string resume_path, eval_checkpoint, policy_name = "maddpg";
    bool force = false, untrained = false;
    std::vector<std::string> export_inputs;
    std::string export_out = "figures";
    int export_window = 50;

    auto* train = app.add_subcommand("train", "Train the actors and shared critic");
    add_common(train, train_flags);
    train->add_option("--checkpoint", resume_path, "Resume from this checkpoint directory");

    auto* eval = app.add_subcommand("eval", "Noise-free evaluation of a trained checkpoint");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint directory (or a run directory containing one)");
    eval->add_option("--policy", policy_name, "Policy to evaluate: maddpg|random|coverage|qos");
    eval->add_flag("--force", force, "Evaluate even if the checkpoint's config hash differs");
    eval->add_flag("--untrained", untrained, "Evaluate freshly initialized actors");

    auto* baseline = app.add_subcommand("baseline", "Evaluate a heuristic policy on the evaluation seeds");
    add_common(baseline, baseline_flags);
    baseline->add_option("--policy", policy_name, "random|coverage|qos")->required();

    auto* exp = app.add_subcommand("export", "Reshape metric CSVs into long-format figure tables");
    exp->add_option("inputs", export_inputs, "Metric CSV files")->required();
    exp->add_option("--out", export_out, "Output directory");
    exp->add_option("--window", export_window, "Moving-average window")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    ex::tune_allocator();
    try {
        if (*train) {
            const auto config = load_config(train_flags);
            ex::TrainOptions opts;
            if (!resume_path.empty()) opts.resume_from = resume_path;
            ex::run_train(config, opts);
        } else if (*eval) {
            const auto config = load_config(eval_flags);
            if (policy_name == "maddpg") {
                ex::EvalOptions opts;
                if (!eval_checkpoint.empty()) opts.checkpoint = eval_checkpoint;
                opts.untrained = untrained;
                opts.force = force;
                ex::run_eval(config, opts);
            } else if (auto kind = uavslice::baselines::parse_kind(policy_name)) {
                ex::run_baseline(config, *kind);
            } else {
                std::cerr << "error: unknown policy '" << policy_name << "'\n";
                return kExitConfig;
            }
        } else if (*baseline) {
            const auto config = load_config(baseline_flags);
            const auto kind = uavslice::baselines::parse_kind(policy_name);
            if (!kind) {
                std::cerr << "error: unknown baseline '" << policy_name << "'\n";
                return kExitConfig;
            }
            ex::run_baseline(config, *kind);
        } else if (*exp) {
            std::vector<std::filesystem::path> inputs(export_inputs.begin(), export_inputs.end());
            ex::export_figure_data(inputs, export_out, export_window);
        }
    } catch (const uavslice::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
