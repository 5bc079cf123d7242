#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "uavslice/baselines.hpp"
#include "uavslice/config.hpp"
#include "uavslice/maddpg.hpp"
#include "uavslice/rollout.hpp"

namespace uavslice::experiment {

namespace fs = std::filesystem;

/// Columns shared by every metrics CSV, in order.
const std::vector<std::string>& base_columns();
/// train.csv appends critic_loss and actor_loss (empty before the first update).
const std::vector<std::string>& train_columns();

struct MetricsRow {
    std::string policy;
    std::uint64_t seed = 0;
    long episode = 0;
    long step = 0;
    RewardBreakdown reward;
    std::array<double, kNumSlices> slice_satisfaction{};
    double mean_energy_j = 0.0;
    double jain_throughput = 0.0;
    double sigma = 0.0;
};

MetricsRow row_from(const std::string& policy, std::uint64_t seed, long episode, long step,
                    const StepInfo& info, double sigma);
MetricsRow row_from(const std::string& policy, long step, const EpisodeSummary& summary, double sigma);

/// Append-only CSV with a header row and locale-independent shortest round-trip numbers.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header);
    void write(const std::vector<std::string>& cells);
    void write(const MetricsRow& row);
    void write(const MetricsRow& row, const std::optional<UpdateStats>& update);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name` in the header; throws SchemaError when absent.
    std::size_t column(const std::string& name) const;
};

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

CsvTable read_csv(const fs::path& path);

/// Raised for missing or incompatible run artifacts; maps to the runtime-error exit code.
class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Keeps freed training temporaries in the heap instead of returning them to the OS
/// on every step. Process-wide; call once from main().
void tune_allocator();

std::string version_string();
std::string hash_hex(std::uint64_t h);

/// Writes config.snapshot, version.txt and rng_state.txt into `dir`.
void write_run_metadata(const fs::path& dir, const ExperimentConfig& config, const std::string& rng_note);

// ---- checkpoints ----------------------------------------------------------------------------

struct Manifest {
    long step = 0;
    long episode = 0;
    int n_agents = 0;
    NoiseSchedule::State noise;
    std::string rng_state;
    std::string config_hash;
    bool has_replay = false;
};

void save_checkpoint(const fs::path& dir, Trainer& trainer, bool with_replay);
Manifest read_manifest(const fs::path& dir);
std::vector<nn::NamedBlock> read_params(const fs::path& dir);

// ---- subcommands ----------------------------------------------------------------------------

struct TrainOptions {
    std::optional<fs::path> resume_from;
};

/// Trains and writes train.csv, train_eval.csv, timing.csv and checkpoint/ under run.out_dir.
void run_train(const ExperimentConfig& config, const TrainOptions& options = {});

struct EvalOptions {
    std::optional<fs::path> checkpoint;
    bool untrained = false;  // evaluate freshly initialized actors instead of a checkpoint
    bool force = false;      // accept a checkpoint trained under a different config hash
};

/// Noise-free evaluation over eval_episodes episodes of eval_rollout_steps steps.
/// Writes eval.csv (one row per step) and eval_episodes.csv (one row per episode).
std::vector<EpisodeSummary> run_eval(const ExperimentConfig& config, const EvalOptions& options);

/// Same protocol and seeds as run_eval for a heuristic policy.
std::vector<EpisodeSummary> run_baseline(const ExperimentConfig& config, baselines::BaselineKind kind);

JointPolicy baseline_policy(baselines::BaselineKind kind);

/// Reshapes metric CSVs into long tables (policy, step, metric, value) averaged over
/// episodes and seeds, plus trailing moving-average variants.
void export_figure_data(const std::vector<fs::path>& inputs, const fs::path& out_dir, int window = 50);

/// Trailing moving average; the first entries average what is available.
std::vector<double> trailing_mean(const std::vector<double>& series, int window);

}  // namespace uavslice::experiment
