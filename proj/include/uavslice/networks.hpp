#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavslice/config.hpp"
#include "uavslice/environment.hpp"
#include "uavslice/nn.hpp"

namespace uavslice {

using nn::GradMode;
using nn::Tensor2;

/// Decentralized policy: 80-wide observation -> 13-wide action.
///
/// The UAV-state slice [0:4] and the context slice [67:80] each pass through a
/// one-layer encoder. The nine demand-area feature rows share a three-layer
/// encoder whose embeddings attend to one another; their mean joins the other two
/// embeddings in a hidden layer that drives the movement (tanh) and power (sigmoid)
/// heads. Each attended DA embedding, paired with that hidden vector, scores its DA
/// and the nine scores leave as log-probabilities.
class ActorNetwork {
public:
    ActorNetwork(std::string name, const LearnerConfig& shape, std::mt19937_64& rng);

    Tensor2 forward(const Tensor2& obs);
    /// Returns the gradient with respect to the observation batch.
    Tensor2 backward(const Tensor2& d_action, GradMode mode = GradMode::accumulate);

    nn::ParameterList parameters();
    std::uint64_t relu_pattern() const;
    const std::string& name() const { return name_; }

private:
    std::string name_;
    int embed_ = 0;
    int hidden_ = 0;
    nn::DenseLayer state_enc_, da1_, da2_, da3_, ctx_enc_, trunk_, move_head_, power_head_, bw_head_;
    nn::MultiHeadAttention da_attn_;

    Eigen::Index batch_ = 0;
    Tensor2 attended_;   // (B*9) x embed
    Tensor2 hidden_out_; // B x hidden
    Tensor2 log_probs_;  // B x 9
    bool cached_ = false;
};

/// Centralized action-value function over all agents' (observation, action) pairs.
///
/// A shared embedder maps each agent's pair to a token. Bandwidth log-probabilities
/// are renormalized with a softmax before embedding. Tokens attend across agents,
/// then the id-ordered concatenation feeds a dense trunk ending in a scalar.
class SharedCritic {
public:
    SharedCritic(std::string name, int n_agents, const LearnerConfig& shape, std::mt19937_64& rng);

    /// obs[u]: B x 80, actions[u]: B x 13. Returns B x 1.
    Tensor2 forward(std::span<const Tensor2> obs, std::span<const Tensor2> actions);

    struct InputGrads {
        std::vector<Tensor2> d_obs;
        std::vector<Tensor2> d_actions;
    };
    InputGrads backward(const Tensor2& d_q, GradMode mode = GradMode::accumulate);

    nn::ParameterList parameters();
    std::uint64_t relu_pattern() const;
    int n_agents() const { return n_agents_; }

private:
    std::string name_;
    int n_agents_ = 0;
    int embed_ = 0;
    nn::DenseLayer embed1_, embed2_;
    nn::MultiHeadAttention attn_;
    std::vector<nn::DenseLayer> trunk_;

    Eigen::Index batch_ = 0;
    Tensor2 bw_probs_;  // (B*U) x 9
    bool cached_ = false;
};

}  // namespace uavslice
