#include "uavslice/maddpg.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace uavslice {

namespace {

constexpr double kLogFloor = 1e-12;
// The sigmoid power head never emits exactly 0; exploration stays inside that range so the
// replay buffer holds no actions the policy could not produce (zero power on every UAV
// zeroes every throughput, which the fairness index scores as perfect equality).
constexpr double kMinExploredPower = 1e-6;

Tensor2 row_batch(std::span<const double> values, Eigen::Index cols) {
    Tensor2 t(1, cols);
    for (Eigen::Index c = 0; c < cols; ++c) t(0, c) = values[c];
    return t;
}

}  // namespace

// ---- replay buffer --------------------------------------------------------------------------

Batch make_batch(std::span<const Transition> transitions) {
    if (transitions.empty()) throw std::invalid_argument("make_batch: empty batch");
    const auto b_count = static_cast<Eigen::Index>(transitions.size());
    const std::size_t n_agents = transitions.front().obs.size();
    Batch batch;
    batch.rewards.resize(b_count, 1);
    for (std::size_t u = 0; u < n_agents; ++u) {
        batch.obs.emplace_back(b_count, kObsWidth);
        batch.actions.emplace_back(b_count, kActionWidth);
        batch.next_obs.emplace_back(b_count, kObsWidth);
    }
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const Transition& tr = transitions[b];
        if (tr.obs.size() != n_agents || tr.actions.size() != n_agents || tr.next_obs.size() != n_agents) {
            throw std::invalid_argument("make_batch: agent count differs between transitions");
        }
        batch.rewards(b, 0) = tr.reward;
        for (std::size_t u = 0; u < n_agents; ++u) {
            for (int c = 0; c < kObsWidth; ++c) {
                batch.obs[u](b, c) = tr.obs[u][c];
                batch.next_obs[u](b, c) = tr.next_obs[u][c];
            }
            for (int c = 0; c < kActionWidth; ++c) batch.actions[u](b, c) = tr.actions[u][c];
        }
    }
    return batch;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int n_agents) : capacity_(capacity), n_agents_(n_agents) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    if (n_agents <= 0) throw std::invalid_argument("ReplayBuffer: needs at least one agent");
}

std::size_t ReplayBuffer::row_width() const {
    return static_cast<std::size_t>(n_agents_) * (2 * kObsWidth + kActionWidth) + 1;
}

const double* ReplayBuffer::row(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("ReplayBuffer: index out of range");
    const std::size_t slot = size_ < capacity_ ? i : (head_ + i) % capacity_;
    return data_.data() + slot * row_width();
}

void ReplayBuffer::push(std::span<const Observation> obs, std::span<const AgentAction> actions,
                        std::span<const double> rewards, std::span<const Observation> next_obs) {
    const auto n = static_cast<std::size_t>(n_agents_);
    if (obs.size() != n || actions.size() != n || rewards.size() != n || next_obs.size() != n) {
        throw std::invalid_argument("ReplayBuffer: expected one entry per agent");
    }
    for (double r : rewards) {
        if (r != rewards[0]) throw RewardMismatchError("ReplayBuffer: agents must share one reward");
    }
    const std::size_t w = row_width();
    double* dst = nullptr;
    if (size_ < capacity_) {
        data_.resize(data_.size() + w);
        dst = data_.data() + size_ * w;
        ++size_;
    } else {
        dst = data_.data() + head_ * w;
        head_ = (head_ + 1) % capacity_;
    }
    for (const auto& o : obs) dst = std::copy(o.begin(), o.end(), dst);
    for (const auto& a : actions) dst = std::copy(a.begin(), a.end(), dst);
    *dst++ = rewards[0];
    for (const auto& o : next_obs) dst = std::copy(o.begin(), o.end(), dst);
}

Transition ReplayBuffer::at(std::size_t i) const {
    const double* src = row(i);
    Transition t;
    t.obs.resize(n_agents_);
    t.actions.resize(n_agents_);
    t.next_obs.resize(n_agents_);
    for (auto& o : t.obs) {
        std::copy(src, src + kObsWidth, o.begin());
        src += kObsWidth;
    }
    for (auto& a : t.actions) {
        std::copy(src, src + kActionWidth, a.begin());
        src += kActionWidth;
    }
    t.reward = *src++;
    for (auto& o : t.next_obs) {
        std::copy(src, src + kObsWidth, o.begin());
        src += kObsWidth;
    }
    return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, std::mt19937_64& rng) const {
    if (k == 0) throw std::invalid_argument("ReplayBuffer: empty sample requested");
    if (k > size_) throw std::invalid_argument("ReplayBuffer: sample larger than buffer");
    std::vector<std::size_t> out;
    out.reserve(k);
    std::unordered_set<std::size_t> chosen;
    for (std::size_t j = size_ - k; j < size_; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        const std::size_t v = chosen.contains(t) ? j : t;
        chosen.insert(v);
        out.push_back(v);
    }
    return out;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw std::invalid_argument("ReplayBuffer: empty batch");
    const auto b_count = static_cast<Eigen::Index>(indices.size());
    Batch batch;
    batch.rewards.resize(b_count, 1);
    for (int u = 0; u < n_agents_; ++u) {
        batch.obs.emplace_back(b_count, kObsWidth);
        batch.actions.emplace_back(b_count, kActionWidth);
        batch.next_obs.emplace_back(b_count, kObsWidth);
    }
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const double* src = row(indices[b]);
        for (int u = 0; u < n_agents_; ++u, src += kObsWidth) {
            std::copy(src, src + kObsWidth, batch.obs[u].row(b).data());
        }
        for (int u = 0; u < n_agents_; ++u, src += kActionWidth) {
            std::copy(src, src + kActionWidth, batch.actions[u].row(b).data());
        }
        batch.rewards(b, 0) = *src++;
        for (int u = 0; u < n_agents_; ++u, src += kObsWidth) {
            std::copy(src, src + kObsWidth, batch.next_obs[u].row(b).data());
        }
    }
    return batch;
}

void ReplayBuffer::save(std::ostream& out) const {
    const std::size_t w = row_width();
    nn::NamedBlock meta{"replay/meta", Tensor2(1, 3)};
    meta.value << static_cast<double>(capacity_), static_cast<double>(n_agents_), static_cast<double>(size_);
    nn::NamedBlock rows{"replay/rows", Tensor2(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(w))};
    for (std::size_t i = 0; i < size_; ++i) {
        std::copy(row(i), row(i) + w, rows.value.row(static_cast<Eigen::Index>(i)).data());
    }
    const std::vector<nn::NamedBlock> blocks{std::move(meta), std::move(rows)};
    nn::write_blocks(out, blocks);
}

ReplayBuffer ReplayBuffer::load(std::istream& in) {
    const auto blocks = nn::read_blocks(in);
    if (blocks.size() != 2 || blocks[0].name != "replay/meta" || blocks[1].name != "replay/rows" ||
        blocks[0].value.cols() != 3) {
        throw std::runtime_error("ReplayBuffer: not a replay file");
    }
    const auto& meta = blocks[0].value;
    ReplayBuffer buf(static_cast<std::size_t>(meta(0, 0)), static_cast<int>(meta(0, 1)));
    const auto n = static_cast<std::size_t>(meta(0, 2));
    const auto& rows = blocks[1].value;
    if (static_cast<std::size_t>(rows.rows()) != n || static_cast<std::size_t>(rows.cols()) != buf.row_width() ||
        n > buf.capacity_) {
        throw std::runtime_error("ReplayBuffer: row block does not match its header");
    }
    buf.data_.assign(rows.data(), rows.data() + rows.size());
    buf.size_ = n;
    buf.head_ = 0;
    return buf;
}

// ---- exploration ----------------------------------------------------------------------------

NoiseSchedule::NoiseSchedule(NoiseConfig config) : config_(config) { state_.anchor = config_.sigma0; }

double NoiseSchedule::sigma() const {
    return std::max(config_.sigma_min, state_.anchor * std::pow(config_.rho, static_cast<double>(state_.episodes)));
}

void NoiseSchedule::end_episode() {
    if (!state_.reset_used && sigma() <= config_.sigma_min) {
        state_.anchor = config_.reset_sigma;
        state_.episodes = 0;
        state_.reset_used = true;
        return;
    }
    ++state_.episodes;
}

AgentAction perturb_action(const AgentAction& policy_output, double sigma, std::mt19937_64& rng) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("perturb_action: sigma must be finite and >= 0");
    for (double v : policy_output) {
        if (!std::isfinite(v)) throw nn::NumericError("perturb_action: non-finite policy output");
    }
    if (sigma == 0.0) return policy_output;

    AgentAction a = policy_output;
    std::normal_distribution<double> gauss(0.0, sigma);
    for (int i = 0; i < 3; ++i) a[i] = std::clamp(a[i] + gauss(rng), -1.0, 1.0);
    a[3] = std::clamp(a[3] + gauss(rng), kMinExploredPower, 1.0);

    const double eps = std::min(1.0, sigma);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::array<double, kNumDemandAreas> dir{};
    double total = 0.0;
    for (auto& g : dir) {
        g = gamma(rng);
        total += g;
    }
    const std::vector<double> pi = nn::softmax(std::span<const double>(policy_output.data() + 4, kNumDemandAreas));
    for (int d = 0; d < kNumDemandAreas; ++d) {
        const double p = (1.0 - eps) * pi[d] + eps * dir[d] / total;
        a[4 + d] = std::log(std::max(p, kLogFloor));
    }
    return a;
}

AgentAction select_action(ActorNetwork& actor, const Observation& obs, double sigma, std::mt19937_64& rng) {
    for (double v : obs) {
        if (!std::isfinite(v)) throw nn::NumericError("select_action: non-finite observation");
    }
    const Tensor2 out = actor.forward(row_batch(obs, kObsWidth));
    AgentAction a{};
    for (int c = 0; c < kActionWidth; ++c) a[c] = out(0, c);
    return perturb_action(a, sigma, rng);
}

// ---- learner --------------------------------------------------------------------------------

Maddpg::Maddpg(const ExperimentConfig& config, int n_agents, std::uint64_t init_seed)
    : n_agents_(n_agents), learner_(config.learner),
      critic_([&] {
          std::mt19937_64 rng(derive_seed(init_seed, seed_stream::init, 0));
          return SharedCritic("critic", n_agents, config.learner, rng);
      }()),
      target_critic_([&] {
          std::mt19937_64 rng(derive_seed(init_seed, seed_stream::init, 1));
          return SharedCritic("target_critic", n_agents, config.learner, rng);
      }()) {
    actors_.reserve(n_agents);
    target_actors_.reserve(n_agents);
    for (int u = 0; u < n_agents; ++u) {
        std::mt19937_64 rng(derive_seed(init_seed, seed_stream::init, 2 + 2 * u));
        actors_.emplace_back("actor" + std::to_string(u), config.learner, rng);
        std::mt19937_64 target_rng(derive_seed(init_seed, seed_stream::init, 3 + 2 * u));
        target_actors_.emplace_back("target_actor" + std::to_string(u), config.learner, target_rng);
    }
    nn::soft_update(critic_.parameters(), target_critic_.parameters(), 1.0);
    for (int u = 0; u < n_agents; ++u) {
        nn::soft_update(actors_[u].parameters(), target_actors_[u].parameters(), 1.0);
        actor_opts_.emplace_back(actors_[u].parameters(), nn::AdamConfig{.lr = learner_.lr_actor});
    }
    critic_opt_ = nn::Adam(critic_.parameters(), nn::AdamConfig{.lr = learner_.lr_critic});
}

std::vector<AgentAction> Maddpg::policy(std::span<const Observation> obs) {
    std::mt19937_64 unused(0);
    return act(obs, 0.0, unused);
}

std::vector<AgentAction> Maddpg::act(std::span<const Observation> obs, double sigma, std::mt19937_64& rng) {
    if (static_cast<int>(obs.size()) != n_agents_) throw std::invalid_argument("Maddpg::act: one observation per agent");
    std::vector<AgentAction> out;
    out.reserve(obs.size());
    for (int u = 0; u < n_agents_; ++u) out.push_back(select_action(actors_[u], obs[u], sigma, rng));
    return out;
}

Tensor2 Maddpg::td_target(const Batch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("td_target: empty batch");
    std::vector<Tensor2> next_actions;
    next_actions.reserve(n_agents_);
    for (int u = 0; u < n_agents_; ++u) next_actions.push_back(target_actors_[u].forward(batch.next_obs[u]));
    const Tensor2 q_next = target_critic_.forward(batch.next_obs, next_actions);
    Tensor2 y = batch.rewards;
    if (learner_.gamma_d != 0.0) y += learner_.gamma_d * q_next;
    return y;
}

double Maddpg::critic_update(const Batch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("critic_update: empty batch");
    const Tensor2 y = td_target(batch);
    const Tensor2 q = critic_.forward(batch.obs, batch.actions);
    const Tensor2 diff = q - y;
    const double n = static_cast<double>(batch.size());
    const double loss = diff.squaredNorm() / n;
    if (!std::isfinite(loss)) throw nn::NumericError("critic_update: non-finite loss");
    critic_opt_.zero_grad();
    critic_.backward((2.0 / n) * diff, GradMode::accumulate);
    critic_opt_.step();
    return loss;
}

double Maddpg::actor_update(const Batch& batch, int u) {
    if (batch.size() == 0) throw std::invalid_argument("actor_update: empty batch");
    if (u < 0 || u >= n_agents_) throw std::out_of_range("actor_update: no such agent");
    std::vector<Tensor2> actions = batch.actions;
    actions[u] = actors_[u].forward(batch.obs[u]);
    const Tensor2 q = critic_.forward(batch.obs, actions);
    const double n = static_cast<double>(batch.size());
    const double loss = -q.sum() / n;
    if (!std::isfinite(loss)) throw nn::NumericError("actor_update: non-finite loss");
    const Tensor2 d_q = Tensor2::Constant(batch.size(), 1, -1.0 / n);
    const auto grads = critic_.backward(d_q, GradMode::input_only);
    actor_opts_[u].zero_grad();
    actors_[u].backward(grads.d_actions[u], GradMode::accumulate);
    actor_opts_[u].step();
    return loss;
}

void Maddpg::soft_update_targets(double tau) {
    nn::soft_update(critic_.parameters(), target_critic_.parameters(), tau);
    for (int u = 0; u < n_agents_; ++u) nn::soft_update(actors_[u].parameters(), target_actors_[u].parameters(), tau);
}

UpdateStats Maddpg::update(const Batch& batch) {
    UpdateStats stats;
    stats.critic_loss = critic_update(batch);
    for (int u = 0; u < n_agents_; ++u) stats.actor_loss += actor_update(batch, u);
    stats.actor_loss /= n_agents_;
    soft_update_targets(learner_.tau);
    return stats;
}

std::vector<nn::NamedBlock> Maddpg::state_blocks() {
    std::vector<nn::NamedBlock> out;
    auto add_params = [&](const nn::ParameterList& params) {
        for (const nn::Parameter* p : params) out.push_back({p->name, p->value});
    };
    auto add_adam = [&](nn::Adam& opt, const std::string& tag) {
        const auto& params = opt.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            out.push_back({"adam/" + params[i]->name + "/m", opt.first_moments()[i]});
            out.push_back({"adam/" + params[i]->name + "/v", opt.second_moments()[i]});
        }
        out.push_back({"adam/" + tag + "/t", Tensor2::Constant(1, 1, static_cast<double>(opt.step_count()))});
    };
    for (int u = 0; u < n_agents_; ++u) add_params(actors_[u].parameters());
    add_params(critic_.parameters());
    for (int u = 0; u < n_agents_; ++u) add_params(target_actors_[u].parameters());
    add_params(target_critic_.parameters());
    for (int u = 0; u < n_agents_; ++u) add_adam(actor_opts_[u], actors_[u].name());
    add_adam(critic_opt_, "critic");
    return out;
}

void Maddpg::load_state_blocks(std::span<const nn::NamedBlock> blocks) {
    std::map<std::string, const Tensor2*> by_name;
    for (const auto& b : blocks) {
        if (!by_name.emplace(b.name, &b.value).second) throw std::runtime_error("checkpoint: duplicate block " + b.name);
    }
    auto fetch = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) -> const Tensor2& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error("checkpoint: missing block " + name);
        if (it->second->rows() != rows || it->second->cols() != cols) {
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        }
        return *it->second;
    };
    auto load_params = [&](const nn::ParameterList& params) {
        for (nn::Parameter* p : params) p->value = fetch(p->name, p->value.rows(), p->value.cols());
    };
    auto load_adam = [&](nn::Adam& opt, const std::string& tag) {
        const auto& params = opt.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Eigen::Index r = params[i]->value.rows(), c = params[i]->value.cols();
            opt.first_moments()[i] = fetch("adam/" + params[i]->name + "/m", r, c);
            opt.second_moments()[i] = fetch("adam/" + params[i]->name + "/v", r, c);
        }
        opt.set_step_count(static_cast<long>(fetch("adam/" + tag + "/t", 1, 1)(0, 0)));
    };
    for (int u = 0; u < n_agents_; ++u) load_params(actors_[u].parameters());
    load_params(critic_.parameters());
    for (int u = 0; u < n_agents_; ++u) load_params(target_actors_[u].parameters());
    load_params(target_critic_.parameters());
    for (int u = 0; u < n_agents_; ++u) load_adam(actor_opts_[u], actors_[u].name());
    load_adam(critic_opt_, "critic");
}

// ---- training loop --------------------------------------------------------------------------

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)),
      learner_(std::make_unique<Maddpg>(config_, config_.scenario.n_uavs, config_.run.seed)),
      buffer_(static_cast<std::size_t>(config_.learner.buffer_capacity), config_.scenario.n_uavs),
      noise_(config_.noise),
      rng_(derive_seed(config_.run.seed, seed_stream::learner, 0)) {
    if (config_.run.checkpoint_every > 0 && config_.run.checkpoint_every % config_.run.episode_length != 0) {
        throw ConfigError("run.checkpoint_every must be a multiple of run.episode_length");
    }
}

EvalRow Trainer::evaluate(long at_step) {
    const auto seeds = eval_seeds(config_.run.seed, config_.run.eval_episodes);
    Maddpg& learner = *learner_;
    const JointPolicy policy = [&learner](const Environment&, std::span<const Observation> obs, std::mt19937_64&) {
        return learner.policy(obs);
    };
    EvalRow row;
    row.step = at_step;
    row.episodes = run_episodes(config_, policy, seeds, config_.run.episode_length);
    row.mean = average(row.episodes);
    return row;
}

TrainerProgress Trainer::progress() const {
    TrainerProgress p = progress_;
    p.noise = noise_.state();
    std::ostringstream os;
    os << rng_;
    p.rng_state = os.str();
    return p;
}

void Trainer::restore(const TrainerProgress& p, std::span<const nn::NamedBlock> blocks,
                      std::optional<ReplayBuffer> buffer) {
    if (p.step % config_.run.episode_length != 0) {
        throw std::runtime_error("resume is only possible from an episode boundary");
    }
    learner_->load_state_blocks(blocks);
    if (buffer) {
        if (buffer->n_agents() != config_.scenario.n_uavs) throw std::runtime_error("replay buffer agent count mismatch");
        buffer_ = std::move(*buffer);
    }
    noise_.restore(p.noise);
    std::istringstream is(p.rng_state);
    is >> rng_;
    if (!is) throw std::runtime_error("checkpoint: unreadable rng state");
    progress_.step = p.step;
    progress_.episode = p.episode;
}

void Trainer::run(const TrainObserver& observer) {
    const RunConfig& rc = config_.run;
    const int n = config_.scenario.n_uavs;
    Environment env(config_);
    std::vector<Observation> obs = env.reset(derive_seed(rc.seed, seed_stream::train_episode, progress_.episode));
    const std::size_t batch_size = static_cast<std::size_t>(config_.learner.batch_size);

    auto maybe_eval = [&](long step) {
        if (rc.eval_every > 0 && step % rc.eval_every == 0 && observer.on_eval) observer.on_eval(evaluate(step));
    };

    while (progress_.step < rc.steps) {
        maybe_eval(progress_.step);
        const double sigma = noise_.sigma();
        const auto actions = learner_->act(obs, sigma, rng_);
        StepResult result = env.step(actions);
        const std::vector<double> rewards(n, result.reward.total);
        buffer_.push(obs, actions, rewards, result.observations);

        TrainStepRow row;
        row.step = progress_.step;
        row.episode = progress_.episode;
        row.info = result.info;
        row.sigma = sigma;
        if (buffer_.size() > batch_size) {
            const auto idx = buffer_.sample_indices(batch_size, rng_);
            const Batch batch = buffer_.gather(idx);
            try {
                row.update = learner_->update(batch);
            } catch (const nn::NumericError& e) {
                std::ostringstream msg;
                msg << e.what() << " at step " << progress_.step << " (episode " << progress_.episode
                    << ", sigma " << sigma << ", batch reward mean " << batch.rewards.mean() << ", min "
                    << batch.rewards.minCoeff() << ", max " << batch.rewards.maxCoeff() << ")";
                throw nn::NumericError(msg.str());
            }
            ++updates_;
        }
        if (observer.on_step) observer.on_step(row);

        obs = std::move(result.observations);
        ++progress_.step;
        if (progress_.step % rc.episode_length == 0) {
            noise_.end_episode();
            ++progress_.episode;
            obs = env.reset(derive_seed(rc.seed, seed_stream::train_episode, progress_.episode));
            if (rc.checkpoint_every > 0 && progress_.step % rc.checkpoint_every == 0 && observer.on_checkpoint) {
                observer.on_checkpoint(progress_.step);
            }
        }
    }
    maybe_eval(progress_.step);
}

}  // namespace uavslice
