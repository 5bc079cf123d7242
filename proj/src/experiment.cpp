#include "uavslice/experiment.hpp"

#include <chrono>
#include <iostream>
#include <map>
#include <sstream>

#include <malloc.h>

#include "json.hpp"

#ifndef UAVSLICE_VERSION
#define UAVSLICE_VERSION "unknown"
#endif

namespace uavslice::experiment {

using json = nlohmann::json;

namespace {

constexpr const char* kCheckpointDir = "checkpoint";

std::string fmt(double v) { return format_double(v); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot write " + path.string());
    out << text;
    if (!out) throw ArtifactError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ArtifactError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

fs::path resolve_checkpoint(const fs::path& p) {
    if (fs::exists(p / "manifest.json")) return p;
    if (fs::exists(p / kCheckpointDir / "manifest.json")) return p / kCheckpointDir;
    throw ArtifactError("no checkpoint manifest under " + p.string());
}

}  // namespace

const std::vector<std::string>& base_columns() {
    static const std::vector<std::string> cols{
        "policy",   "seed",     "episode",  "step",          "reward",          "qos",  "energy",
        "fairness", "sat_embb", "sat_urllc", "sat_mmtc", "mean_energy_j", "jain_throughput", "sigma"};
    return cols;
}

const std::vector<std::string>& train_columns() {
    static const std::vector<std::string> cols = [] {
        auto c = base_columns();
        c.emplace_back("critic_loss");
        c.emplace_back("actor_loss");
        return c;
    }();
    return cols;
}

MetricsRow row_from(const std::string& policy, std::uint64_t seed, long episode, long step,
                    const StepInfo& info, double sigma) {
    MetricsRow r;
    r.policy = policy;
    r.seed = seed;
    r.episode = episode;
    r.step = step;
    r.reward = info.reward;
    r.slice_satisfaction = info.slice_satisfaction;
    r.mean_energy_j = info.mean_energy_j;
    r.jain_throughput = info.jain_throughput;
    r.sigma = sigma;
    return r;
}

MetricsRow row_from(const std::string& policy, long step, const EpisodeSummary& summary, double sigma) {
    MetricsRow r;
    r.policy = policy;
    r.seed = summary.seed;
    r.episode = summary.episode;
    r.step = step;
    r.reward = summary.mean_reward;
    r.slice_satisfaction = summary.mean_slice_satisfaction;
    r.mean_energy_j = summary.mean_energy_j;
    r.jain_throughput = summary.mean_jain;
    r.sigma = sigma;
    return r;
}

// ---- CSV ------------------------------------------------------------------------------------

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
    if (!out_) throw ArtifactError("cannot open " + path.string());
    write(header);
}

void CsvWriter::write(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw SchemaError("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

static std::vector<std::string> base_cells(const MetricsRow& r) {
    return {r.policy,
            std::to_string(r.seed),
            std::to_string(r.episode),
            std::to_string(r.step),
            fmt(r.reward.total),
            fmt(r.reward.qos),
            fmt(r.reward.energy),
            fmt(r.reward.fairness),
            fmt(r.slice_satisfaction[0]),
            fmt(r.slice_satisfaction[1]),
            fmt(r.slice_satisfaction[2]),
            fmt(r.mean_energy_j),
            fmt(r.jain_throughput),
            fmt(r.sigma)};
}

void CsvWriter::write(const MetricsRow& row) { write(base_cells(row)); }

void CsvWriter::write(const MetricsRow& row, const std::optional<UpdateStats>& update) {
    auto cells = base_cells(row);
    cells.push_back(update ? fmt(update->critic_loss) : std::string());
    cells.push_back(update ? fmt(update->actor_loss) : std::string());
    write(cells);
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw SchemaError("missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != t.header.size()) {
            throw SchemaError(path.string() + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

// ---- metadata and checkpoints ---------------------------------------------------------------

void tune_allocator() {
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 256 << 20);
}

std::string version_string() { return UAVSLICE_VERSION; }

std::string hash_hex(std::uint64_t h) {
    std::ostringstream ss;
    ss << std::hex;
    ss.width(16);
    ss.fill('0');
    ss << h;
    return ss.str();
}

void write_run_metadata(const fs::path& dir, const ExperimentConfig& config, const std::string& rng_note) {
    ensure_dir(dir);
    write_text(dir / "config.snapshot", serialize(config));
    write_text(dir / "version.txt", version_string() + "\n");
    write_text(dir / "rng_state.txt", rng_note);
}

void save_checkpoint(const fs::path& dir, Trainer& trainer, bool with_replay) {
    ensure_dir(dir);
    const TrainerProgress p = trainer.progress();
    {
        std::ofstream out(dir / "params.bin.tmp", std::ios::binary | std::ios::trunc);
        if (!out) throw ArtifactError("cannot write checkpoint in " + dir.string());
        nn::write_blocks(out, trainer.learner().state_blocks());
    }
    fs::rename(dir / "params.bin.tmp", dir / "params.bin");
    if (with_replay) {
        {
            std::ofstream out(dir / "replay.bin.tmp", std::ios::binary | std::ios::trunc);
            if (!out) throw ArtifactError("cannot write replay buffer in " + dir.string());
            trainer.buffer().save(out);
        }
        fs::rename(dir / "replay.bin.tmp", dir / "replay.bin");
    }
    json m;
    m["format"] = 1;
    m["step"] = p.step;
    m["episode"] = p.episode;
    m["n_agents"] = trainer.learner().n_agents();
    m["noise"] = {{"anchor", p.noise.anchor}, {"episodes", p.noise.episodes}, {"reset_used", p.noise.reset_used}};
    m["rng_state"] = p.rng_state;
    m["config_hash"] = hash_hex(config_hash(trainer.config()));
    m["has_replay"] = with_replay;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& dir) {
    const fs::path path = resolve_checkpoint(dir) / "manifest.json";
    try {
        const json m = json::parse(read_text(path));
        Manifest out;
        out.step = m.at("step").get<long>();
        out.episode = m.at("episode").get<long>();
        out.n_agents = m.at("n_agents").get<int>();
        out.noise.anchor = m.at("noise").at("anchor").get<double>();
        out.noise.episodes = m.at("noise").at("episodes").get<long>();
        out.noise.reset_used = m.at("noise").at("reset_used").get<bool>();
        out.rng_state = m.at("rng_state").get<std::string>();
        out.config_hash = m.at("config_hash").get<std::string>();
        out.has_replay = m.at("has_replay").get<bool>();
        return out;
    } catch (const json::exception& e) {
        throw ArtifactError(path.string() + ": malformed manifest: " + e.what());
    }
}

std::vector<nn::NamedBlock> read_params(const fs::path& dir) {
    const fs::path path = resolve_checkpoint(dir) / "params.bin";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + path.string());
    return nn::read_blocks(in);
}

// ---- subcommands ----------------------------------------------------------------------------

void run_train(const ExperimentConfig& config, const TrainOptions& options) {
    validate(config);
    const fs::path out_dir = config.run.out_dir;
    ensure_dir(out_dir);
    Trainer trainer(config);

    if (options.resume_from) {
        const Manifest m = read_manifest(*options.resume_from);
        if (m.config_hash != hash_hex(config_hash(config))) {
            throw ArtifactError("checkpoint was trained under a different configuration");
        }
        if (m.n_agents != config.scenario.n_uavs) throw ArtifactError("checkpoint agent count mismatch");
        std::optional<ReplayBuffer> buffer;
        if (m.has_replay) {
            const fs::path rp = resolve_checkpoint(*options.resume_from) / "replay.bin";
            std::ifstream in(rp, std::ios::binary);
            if (!in) throw ArtifactError("cannot read " + rp.string());
            buffer = ReplayBuffer::load(in);
        } else {
            std::cerr << "warning: checkpoint has no replay buffer; resuming with an empty one\n";
        }
        TrainerProgress p;
        p.step = m.step;
        p.episode = m.episode;
        p.noise = m.noise;
        p.rng_state = m.rng_state;
        trainer.restore(p, read_params(*options.resume_from), std::move(buffer));
    }

    write_run_metadata(out_dir, config,
                       "seed=" + std::to_string(config.run.seed) + "\nstart_step=" + std::to_string(trainer.step()) +
                           "\nlearner_rng=" + trainer.progress().rng_state + "\n");

    CsvWriter train_csv(out_dir / "train.csv", train_columns());
    CsvWriter eval_csv(out_dir / "train_eval.csv", base_columns());
    CsvWriter timing_csv(out_dir / "timing.csv", {"event", "step", "elapsed_s"});
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    const std::string policy = "maddpg";
    TrainObserver obs;
    obs.on_step = [&](const TrainStepRow& r) {
        train_csv.write(row_from(policy, config.run.seed, r.episode, r.step, r.info, r.sigma), r.update);
    };
    obs.on_eval = [&](const EvalRow& e) {
        for (const auto& ep : e.episodes) eval_csv.write(row_from(policy, e.step, ep, 0.0));
        eval_csv.flush();
        timing_csv.write({"eval", std::to_string(e.step), elapsed()});
        timing_csv.flush();
    };
    obs.on_checkpoint = [&](long step) {
        train_csv.flush();
        save_checkpoint(out_dir / kCheckpointDir, trainer, config.run.save_replay);
        timing_csv.write({"checkpoint", std::to_string(step), elapsed()});
    };
    try {
        trainer.run(obs);
    } catch (const nn::NumericError& e) {
        train_csv.flush();
        write_text(out_dir / "diagnostic.txt", std::string(e.what()) + "\n");
        throw;
    }
    save_checkpoint(out_dir / kCheckpointDir, trainer, config.run.save_replay);
    timing_csv.write({"done", std::to_string(trainer.step()), elapsed()});
}

namespace {

std::vector<EpisodeSummary> evaluate_to_csv(const ExperimentConfig& config, const std::string& policy_name,
                                            const JointPolicy& policy) {
    const fs::path out_dir = config.run.out_dir;
    ensure_dir(out_dir);
    write_run_metadata(out_dir, config, "seed=" + std::to_string(config.run.seed) + "\n");
    const auto seeds = eval_seeds(config.run.seed, config.run.eval_episodes);
    CsvWriter steps_csv(out_dir / "eval.csv", base_columns());
    auto episodes = run_episodes(config, policy, seeds, config.run.eval_rollout_steps, [&](const StepRecord& r) {
        steps_csv.write(row_from(policy_name, r.seed, r.episode, r.step, r.info, 0.0));
    });
    CsvWriter ep_csv(out_dir / "eval_episodes.csv", base_columns());
    for (const auto& e : episodes) ep_csv.write(row_from(policy_name, e.steps, e, 0.0));
    return episodes;
}

}  // namespace

std::vector<EpisodeSummary> run_eval(const ExperimentConfig& config, const EvalOptions& options) {
    validate(config);
    auto learner = std::make_unique<Maddpg>(config, config.scenario.n_uavs, config.run.seed);
    std::string name = "maddpg";
    if (options.untrained) {
        name = "maddpg_untrained";
    } else {
        if (!options.checkpoint) throw ArtifactError("eval needs --checkpoint (or --untrained)");
        const Manifest m = read_manifest(*options.checkpoint);
        if (m.config_hash != hash_hex(config_hash(config))) {
            std::cerr << "warning: checkpoint config hash " << m.config_hash << " differs from "
                      << hash_hex(config_hash(config)) << "\n";
            if (!options.force) throw ArtifactError("config hash mismatch; rerun with --force to evaluate anyway");
        }
        if (m.n_agents != config.scenario.n_uavs) throw ArtifactError("checkpoint agent count mismatch");
        learner->load_state_blocks(read_params(*options.checkpoint));
    }
    Maddpg& l = *learner;
    const JointPolicy policy = [&l](const Environment&, std::span<const Observation> obs, std::mt19937_64&) {
        return l.policy(obs);
    };
    return evaluate_to_csv(config, name, policy);
}

JointPolicy baseline_policy(baselines::BaselineKind kind) {
    return [kind](const Environment& env, std::span<const Observation>, std::mt19937_64& rng) {
        const baselines::BaselinePolicy p(kind);
        std::vector<AgentAction> actions;
        for (const auto& uav : env.world().uavs) actions.push_back(p.act(env.world(), env.config(), uav.id, rng));
        return actions;
    };
}

std::vector<EpisodeSummary> run_baseline(const ExperimentConfig& config, baselines::BaselineKind kind) {
    validate(config);
    return evaluate_to_csv(config, baselines::kind_name(kind), baseline_policy(kind));
}

// ---- export ---------------------------------------------------------------------------------

std::vector<double> trailing_mean(const std::vector<double>& series, int window) {
    if (window <= 0) throw std::invalid_argument("trailing_mean: window must be positive");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t lo = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t j = lo; j <= i; ++j) s += series[j];
        out[i] = s / static_cast<double>(i + 1 - lo);
    }
    return out;
}

void export_figure_data(const std::vector<fs::path>& inputs, const fs::path& out_dir, int window) {
    if (inputs.empty()) throw ArtifactError("export: no input CSVs");
    const std::vector<std::string> reward_metrics{"reward"};
    const std::vector<std::string> breakdown_metrics{"qos",      "energy",   "fairness",      "sat_embb",
                                                     "sat_urllc", "sat_mmtc", "mean_energy_j", "jain_throughput"};
    std::vector<std::string> all = reward_metrics;
    all.insert(all.end(), breakdown_metrics.begin(), breakdown_metrics.end());

    // (policy, step) -> per-metric running sums and count
    std::map<std::pair<std::string, long>, std::pair<std::vector<double>, long>> acc;
    for (const auto& path : inputs) {
        const CsvTable t = read_csv(path);
        const std::size_t policy_col = t.column("policy");
        const std::size_t step_col = t.column("step");
        std::vector<std::size_t> cols;
        for (const auto& m : all) cols.push_back(t.column(m));
        for (const auto& row : t.rows) {
            auto& slot = acc[{row[policy_col], std::stol(row[step_col])}];
            if (slot.first.empty()) slot.first.assign(all.size(), 0.0);
            for (std::size_t k = 0; k < cols.size(); ++k) slot.first[k] += std::stod(row[cols[k]]);
            ++slot.second;
        }
    }

    ensure_dir(out_dir);
    auto emit = [&](const std::string& stem, const std::vector<std::string>& metrics) {
        CsvWriter raw(out_dir / (stem + ".csv"), {"policy", "step", "metric", "value"});
        CsvWriter smooth(out_dir / (stem + "_smoothed.csv"), {"policy", "step", "metric", "value"});
        std::map<std::string, std::vector<std::pair<long, std::vector<double>>>> by_policy;
        for (const auto& [key, slot] : acc) {
            std::vector<double> means;
            for (double s : slot.first) means.push_back(s / static_cast<double>(slot.second));
            by_policy[key.first].emplace_back(key.second, std::move(means));
        }
        for (const auto& [policy, series] : by_policy) {
            for (const auto& metric : metrics) {
                const std::size_t k =
                    static_cast<std::size_t>(std::find(all.begin(), all.end(), metric) - all.begin());
                std::vector<double> values;
                for (const auto& [step, means] : series) values.push_back(means[k]);
                const auto smoothed = trailing_mean(values, window);
                for (std::size_t i = 0; i < series.size(); ++i) {
                    raw.write({policy, std::to_string(series[i].first), metric, fmt(values[i])});
                    smooth.write({policy, std::to_string(series[i].first), metric, fmt(smoothed[i])});
                }
            }
        }
    };
    emit("figure_reward", reward_metrics);
    emit("figure_breakdown", breakdown_metrics);
}

}  // namespace uavslice::experiment
