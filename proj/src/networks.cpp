#include "uavslice/networks.hpp"

#include <cmath>

namespace uavslice {

namespace {

constexpr int kStateWidth = 4;
constexpr int kContextWidth = kObsWidth - kContextOffset;
constexpr int kTokenWidth = kObsWidth + kActionWidth;

}  // namespace

// ---- ActorNetwork -------------------------------------------------------------------------

ActorNetwork::ActorNetwork(std::string name, const LearnerConfig& shape, std::mt19937_64& rng)
    : name_(std::move(name)), embed_(shape.embed_dim), hidden_(shape.actor_hidden) {
    using nn::Activation;
    state_enc_ = nn::DenseLayer(name_ + "/state_enc", kStateWidth, embed_, Activation::relu, rng);
    da1_ = nn::DenseLayer(name_ + "/da1", kDaFeatureWidth, shape.da_hidden, Activation::relu, rng);
    da2_ = nn::DenseLayer(name_ + "/da2", shape.da_hidden, shape.da_hidden, Activation::relu, rng);
    da3_ = nn::DenseLayer(name_ + "/da3", shape.da_hidden, embed_, Activation::identity, rng);
    da_attn_ = nn::MultiHeadAttention(name_ + "/da_attn", embed_, shape.attention_heads, rng);
    ctx_enc_ = nn::DenseLayer(name_ + "/ctx_enc", kContextWidth, embed_, Activation::relu, rng);
    trunk_ = nn::DenseLayer(name_ + "/trunk", 3 * embed_, hidden_, Activation::relu, rng);
    // heads start near zero so early actions stay gentle
    move_head_ = nn::DenseLayer(name_ + "/move", hidden_, 3, Activation::tanh, rng, 0.1);
    power_head_ = nn::DenseLayer(name_ + "/power", hidden_, 1, Activation::sigmoid, rng, 0.1);
    bw_head_ = nn::DenseLayer(name_ + "/bw", embed_ + hidden_, 1, Activation::identity, rng, 0.1);
}

Tensor2 ActorNetwork::forward(const Tensor2& obs) {
    if (obs.cols() != kObsWidth) {
        throw nn::ShapeError(name_ + ": observation width " + std::to_string(obs.cols()) + " != 80");
    }
    nn::check_finite(obs, name_ + " input");
    const Eigen::Index b_count = obs.rows();
    batch_ = b_count;
    const int n_da = kNumDemandAreas;

    const Tensor2& s_emb = state_enc_.forward(obs.leftCols(kStateWidth));

    Tensor2 da_in(b_count * n_da, kDaFeatureWidth);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        for (int d = 0; d < n_da; ++d) {
            da_in.row(b * n_da + d) = obs.block(b, kDaFeatureOffset + d * kDaFeatureWidth, 1, kDaFeatureWidth);
        }
    }
    const Tensor2& e = da3_.forward(da2_.forward(da1_.forward(da_in)));
    attended_ = e + da_attn_.forward(e, n_da);

    const Tensor2& c_emb = ctx_enc_.forward(obs.rightCols(kContextWidth));

    Tensor2 trunk_in(b_count, 3 * embed_);
    trunk_in.leftCols(embed_) = s_emb;
    for (Eigen::Index b = 0; b < b_count; ++b) {
        trunk_in.block(b, embed_, 1, embed_) =
            attended_.middleRows(b * n_da, n_da).colwise().mean();
    }
    trunk_in.rightCols(embed_) = c_emb;
    hidden_out_ = trunk_.forward(trunk_in);

    const Tensor2& move = move_head_.forward(hidden_out_);
    const Tensor2& power = power_head_.forward(hidden_out_);

    Tensor2 bw_in(b_count * n_da, embed_ + hidden_);
    bw_in.leftCols(embed_) = attended_;
    for (Eigen::Index b = 0; b < b_count; ++b) {
        for (int d = 0; d < n_da; ++d) bw_in.block(b * n_da + d, embed_, 1, hidden_) = hidden_out_.row(b);
    }
    const Tensor2& scores = bw_head_.forward(bw_in);

    log_probs_.resize(b_count, n_da);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const auto row = scores.middleRows(b * n_da, n_da);
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        for (int d = 0; d < n_da; ++d) log_probs_(b, d) = row(d, 0) - lse;
    }

    Tensor2 out(b_count, kActionWidth);
    out.leftCols(3) = move;
    out.col(3) = power.col(0);
    out.rightCols(n_da) = log_probs_;
    nn::check_finite(out, name_ + " output");
    cached_ = true;
    return out;
}

Tensor2 ActorNetwork::backward(const Tensor2& d_action, GradMode mode) {
    if (!cached_) throw nn::MissingCacheError(name_ + ": backward without forward");
    if (d_action.rows() != batch_ || d_action.cols() != kActionWidth) {
        throw nn::ShapeError(name_ + ": action gradient shape mismatch");
    }
    const Eigen::Index b_count = batch_;
    const int n_da = kNumDemandAreas;

    Tensor2 d_hidden = move_head_.backward(d_action.leftCols(3), mode);
    d_hidden += power_head_.backward(d_action.col(3), mode);

    // log-softmax: dl = dy - softmax * sum(dy)
    Tensor2 d_scores(b_count * n_da, 1);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const double total = d_action.row(b).tail(n_da).sum();
        for (int d = 0; d < n_da; ++d) {
            d_scores(b * n_da + d, 0) = d_action(b, 4 + d) - std::exp(log_probs_(b, d)) * total;
        }
    }
    const Tensor2 d_bw_in = bw_head_.backward(d_scores, mode);
    Tensor2 d_attended = d_bw_in.leftCols(embed_);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        d_hidden.row(b) += d_bw_in.block(b * n_da, embed_, n_da, hidden_).colwise().sum();
    }

    const Tensor2 d_trunk_in = trunk_.backward(d_hidden, mode);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const auto d_pool = d_trunk_in.block(b, embed_, 1, embed_) / static_cast<double>(n_da);
        for (int d = 0; d < n_da; ++d) d_attended.row(b * n_da + d) += d_pool;
    }

    Tensor2 d_e = d_attended + da_attn_.backward(d_attended, mode);
    const Tensor2 d_da_in = da1_.backward(da2_.backward(da3_.backward(d_e, mode), mode), mode);

    Tensor2 d_obs = Tensor2::Zero(b_count, kObsWidth);
    d_obs.leftCols(kStateWidth) = state_enc_.backward(d_trunk_in.leftCols(embed_), mode);
    d_obs.rightCols(kContextWidth) = ctx_enc_.backward(d_trunk_in.rightCols(embed_), mode);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        for (int d = 0; d < n_da; ++d) {
            d_obs.block(b, kDaFeatureOffset + d * kDaFeatureWidth, 1, kDaFeatureWidth) = d_da_in.row(b * n_da + d);
        }
    }
    return d_obs;
}

nn::ParameterList ActorNetwork::parameters() {
    nn::ParameterList out;
    for (nn::DenseLayer* l : {&state_enc_, &da1_, &da2_, &da3_}) l->collect(out);
    da_attn_.collect(out);
    for (nn::DenseLayer* l : {&ctx_enc_, &trunk_, &move_head_, &power_head_, &bw_head_}) l->collect(out);
    return out;
}

std::uint64_t ActorNetwork::relu_pattern() const {
    std::uint64_t h = 0;
    for (const nn::DenseLayer* l : {&state_enc_, &da1_, &da2_, &ctx_enc_, &trunk_}) h = l->relu_pattern(h);
    return h;
}

// ---- SharedCritic -------------------------------------------------------------------------

SharedCritic::SharedCritic(std::string name, int n_agents, const LearnerConfig& shape, std::mt19937_64& rng)
    : name_(std::move(name)), n_agents_(n_agents), embed_(shape.embed_dim) {
    using nn::Activation;
    if (n_agents <= 0) throw nn::ShapeError(name_ + ": needs at least one agent");
    embed1_ = nn::DenseLayer(name_ + "/embed1", kTokenWidth, 2 * embed_, Activation::relu, rng);
    embed2_ = nn::DenseLayer(name_ + "/embed2", 2 * embed_, embed_, Activation::identity, rng);
    attn_ = nn::MultiHeadAttention(name_ + "/attn", embed_, shape.attention_heads, rng);
    int width = n_agents * embed_;
    for (std::size_t i = 0; i < shape.critic_trunk.size(); ++i) {
        trunk_.emplace_back(name_ + "/trunk" + std::to_string(i), width, shape.critic_trunk[i],
                            Activation::relu, rng);
        width = shape.critic_trunk[i];
    }
    trunk_.emplace_back(name_ + "/q", width, 1, Activation::identity, rng);
}

Tensor2 SharedCritic::forward(std::span<const Tensor2> obs, std::span<const Tensor2> actions) {
    if (static_cast<int>(obs.size()) != n_agents_ || static_cast<int>(actions.size()) != n_agents_) {
        throw nn::ShapeError(name_ + ": expected one observation and one action batch per agent");
    }
    const Eigen::Index b_count = obs[0].rows();
    for (int u = 0; u < n_agents_; ++u) {
        if (obs[u].rows() != b_count || actions[u].rows() != b_count || obs[u].cols() != kObsWidth ||
            actions[u].cols() != kActionWidth) {
            throw nn::ShapeError(name_ + ": inconsistent input batch shapes");
        }
    }
    batch_ = b_count;
    const int n_da = kNumDemandAreas;

    Tensor2 tokens(b_count * n_agents_, kTokenWidth);
    bw_probs_.resize(b_count * n_agents_, n_da);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        for (int u = 0; u < n_agents_; ++u) {
            const Eigen::Index r = b * n_agents_ + u;
            tokens.block(r, 0, 1, kObsWidth) = obs[u].row(b);
            tokens.block(r, kObsWidth, 1, 4) = actions[u].block(b, 0, 1, 4);
            const auto logits = actions[u].block(b, 4, 1, n_da);
            const double mx = logits.maxCoeff();
            auto p = bw_probs_.row(r);
            p = (logits.array() - mx).exp().matrix();
            p /= p.sum();
            tokens.block(r, kObsWidth + 4, 1, n_da) = p;
        }
    }
    nn::check_finite(tokens, name_ + " input");

    const Tensor2& e = embed2_.forward(embed1_.forward(tokens));
    Tensor2 z = e + attn_.forward(e, n_agents_);
    // row-major storage: the (B*U) x E token matrix read as B x (U*E) is the id-ordered concatenation
    Tensor2 flat = Eigen::Map<const Tensor2>(z.data(), b_count, n_agents_ * embed_);
    const Tensor2* x = &flat;
    for (auto& layer : trunk_) x = &layer.forward(*x);
    cached_ = true;
    return *x;
}

SharedCritic::InputGrads SharedCritic::backward(const Tensor2& d_q, GradMode mode) {
    if (!cached_) throw nn::MissingCacheError(name_ + ": backward without forward");
    if (d_q.rows() != batch_ || d_q.cols() != 1) throw nn::ShapeError(name_ + ": dQ shape mismatch");
    const Eigen::Index b_count = batch_;
    const int n_da = kNumDemandAreas;

    Tensor2 g = d_q;
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = it->backward(g, mode);
    Tensor2 d_z = Eigen::Map<const Tensor2>(g.data(), b_count * n_agents_, embed_);
    Tensor2 d_e = d_z + attn_.backward(d_z, mode);
    const Tensor2 d_tokens = embed1_.backward(embed2_.backward(d_e, mode), mode);

    InputGrads grads;
    for (int u = 0; u < n_agents_; ++u) {
        grads.d_obs.push_back(Tensor2::Zero(b_count, kObsWidth));
        grads.d_actions.push_back(Tensor2::Zero(b_count, kActionWidth));
    }
    for (Eigen::Index b = 0; b < b_count; ++b) {
        for (int u = 0; u < n_agents_; ++u) {
            const Eigen::Index r = b * n_agents_ + u;
            grads.d_obs[u].row(b) = d_tokens.block(r, 0, 1, kObsWidth);
            grads.d_actions[u].block(b, 0, 1, 4) = d_tokens.block(r, kObsWidth, 1, 4);
            const auto dp = d_tokens.block(r, kObsWidth + 4, 1, n_da);
            const auto p = bw_probs_.row(r);
            const double dot = dp.cwiseProduct(p).sum();
            grads.d_actions[u].block(b, 4, 1, n_da) = (p.array() * (dp.array() - dot)).matrix();
        }
    }
    return grads;
}

nn::ParameterList SharedCritic::parameters() {
    nn::ParameterList out;
    embed1_.collect(out);
    embed2_.collect(out);
    attn_.collect(out);
    for (auto& l : trunk_) l.collect(out);
    return out;
}

std::uint64_t SharedCritic::relu_pattern() const {
    std::uint64_t h = embed1_.relu_pattern(0);
    for (const auto& l : trunk_) h = l.relu_pattern(h);
    return h;
}

}  // namespace uavslice
