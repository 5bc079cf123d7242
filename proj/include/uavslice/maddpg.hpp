#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavslice/config.hpp"
#include "uavslice/environment.hpp"
#include "uavslice/networks.hpp"
#include "uavslice/nn.hpp"
#include "uavslice/rollout.hpp"

namespace uavslice {

// ---- replay buffer --------------------------------------------------------------------------

struct Transition {
    std::vector<Observation> obs;
    std::vector<AgentAction> actions;
    double reward = 0.0;
    std::vector<Observation> next_obs;
};

/// Column-per-agent mini-batch: obs[u] and next_obs[u] are B x 80, actions[u] is B x 13.
struct Batch {
    std::vector<Tensor2> obs;
    std::vector<Tensor2> actions;
    Tensor2 rewards;  // B x 1
    std::vector<Tensor2> next_obs;

    Eigen::Index size() const { return rewards.rows(); }
};

Batch make_batch(std::span<const Transition> transitions);

class RewardMismatchError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Fixed-capacity FIFO of joint transitions stored as flat rows.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int n_agents);

    /// `rewards` holds each agent's reward for the step; they must all be equal.
    void push(std::span<const Observation> obs, std::span<const AgentAction> actions,
              std::span<const double> rewards, std::span<const Observation> next_obs);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    int n_agents() const { return n_agents_; }

    /// i = 0 is the oldest stored transition.
    Transition at(std::size_t i) const;

    /// k distinct indices drawn uniformly (Floyd's algorithm).
    std::vector<std::size_t> sample_indices(std::size_t k, std::mt19937_64& rng) const;
    Batch gather(std::span<const std::size_t> indices) const;

    void save(std::ostream& out) const;
    static ReplayBuffer load(std::istream& in);

private:
    std::size_t row_width() const;
    const double* row(std::size_t i) const;

    std::size_t capacity_;
    int n_agents_;
    std::vector<double> data_;
    std::size_t head_ = 0;  // next slot to write once full
    std::size_t size_ = 0;
};

// ---- exploration ----------------------------------------------------------------------------

/// Per-episode exponential decay floored at sigma_min, with one re-exploration reset
/// at the episode boundary after the floor is first reached.
class NoiseSchedule {
public:
    struct State {
        double anchor = 1.0;
        long episodes = 0;
        bool reset_used = false;
    };

    explicit NoiseSchedule(NoiseConfig config);

    double sigma() const;
    void end_episode();

    State state() const { return state_; }
    void restore(State s) { state_ = s; }
    const NoiseConfig& config() const { return config_; }

private:
    NoiseConfig config_;
    State state_;
};

/// Gaussian noise on movement and power (then clamped to the head ranges) and a
/// Dirichlet(1) mixture with weight min(1, sigma) on the bandwidth simplex. With
/// sigma = 0 the policy output is returned as is and `rng` is not touched.
AgentAction perturb_action(const AgentAction& policy_output, double sigma, std::mt19937_64& rng);

AgentAction select_action(ActorNetwork& actor, const Observation& obs, double sigma, std::mt19937_64& rng);

// ---- learner --------------------------------------------------------------------------------

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;  // mean over agents
};

/// Actors, shared critic, their target copies and optimizers.
/// Optimizers hold pointers into the networks, so the learner is pinned in memory.
class Maddpg {
public:
    Maddpg(const ExperimentConfig& config, int n_agents, std::uint64_t init_seed);
    Maddpg(const Maddpg&) = delete;
    Maddpg& operator=(const Maddpg&) = delete;

    int n_agents() const { return n_agents_; }
    const LearnerConfig& learner() const { return learner_; }

    ActorNetwork& actor(int u) { return actors_.at(u); }
    ActorNetwork& target_actor(int u) { return target_actors_.at(u); }
    SharedCritic& critic() { return critic_; }
    SharedCritic& target_critic() { return target_critic_; }
    nn::Adam& actor_optimizer(int u) { return actor_opts_.at(u); }
    nn::Adam& critic_optimizer() { return critic_opt_; }

    /// Noise-free joint action.
    std::vector<AgentAction> policy(std::span<const Observation> obs);
    std::vector<AgentAction> act(std::span<const Observation> obs, double sigma, std::mt19937_64& rng);

    /// y = r + gamma_d * Q'(s', mu'(o')) from the target networks only.
    Tensor2 td_target(const Batch& batch);
    double critic_update(const Batch& batch);
    double actor_update(const Batch& batch, int u);
    void soft_update_targets(double tau);

    /// One critic update, one update per actor, then soft target updates.
    UpdateStats update(const Batch& batch);

    /// Every parameter, target and optimizer moment as named blocks.
    std::vector<nn::NamedBlock> state_blocks();
    void load_state_blocks(std::span<const nn::NamedBlock> blocks);

private:
    int n_agents_;
    LearnerConfig learner_;
    std::vector<ActorNetwork> actors_;
    std::vector<ActorNetwork> target_actors_;
    SharedCritic critic_;
    SharedCritic target_critic_;
    std::vector<nn::Adam> actor_opts_;
    nn::Adam critic_opt_;
};

// ---- training loop --------------------------------------------------------------------------

struct TrainStepRow {
    long step = 0;
    long episode = 0;
    StepInfo info;
    double sigma = 0.0;
    std::optional<UpdateStats> update;
};

struct EvalRow {
    long step = 0;
    std::vector<EpisodeSummary> episodes;
    EpisodeSummary mean;
};

struct TrainObserver {
    std::function<void(const TrainStepRow&)> on_step;
    std::function<void(const EvalRow&)> on_eval;
    /// Called at each checkpoint boundary with the number of completed steps.
    std::function<void(long)> on_checkpoint;
};

/// Saved progress beyond network parameters.
struct TrainerProgress {
    long step = 0;
    long episode = 0;
    NoiseSchedule::State noise;
    std::string rng_state;
};

/// Drives the environment and learner: act with noise, step, store, update once the
/// buffer holds more than a batch, decay noise per episode, evaluate noise-free.
class Trainer {
public:
    explicit Trainer(ExperimentConfig config);

    /// Runs until `run.steps` steps have completed in total.
    void run(const TrainObserver& observer);

    long step() const { return progress_.step; }
    Maddpg& learner() { return *learner_; }
    ReplayBuffer& buffer() { return buffer_; }
    const NoiseSchedule& noise() const { return noise_; }
    const ExperimentConfig& config() const { return config_; }
    long updates_performed() const { return updates_; }

    EvalRow evaluate(long at_step);

    TrainerProgress progress() const;
    /// Restores progress at an episode boundary; the replay buffer is optional.
    void restore(const TrainerProgress& p, std::span<const nn::NamedBlock> blocks,
                 std::optional<ReplayBuffer> buffer);

private:
    ExperimentConfig config_;
    std::unique_ptr<Maddpg> learner_;
    ReplayBuffer buffer_;
    NoiseSchedule noise_;
    std::mt19937_64 rng_;
    TrainerProgress progress_;
    long updates_ = 0;
};

}  // namespace uavslice
