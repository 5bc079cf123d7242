#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uavslice::nn {

/// Dense row-major 64-bit matrix; rows are batch samples (or tokens).
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when backward() runs without a preceding forward().
class MissingCacheError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

void check_finite(const Tensor2& t, const std::string& where);

struct Parameter {
    std::string name;
    Tensor2 value;
    Tensor2 grad;

    Parameter() = default;
    Parameter(std::string n, Tensor2 v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor2::Zero(value.rows(), value.cols());
    }
};

using ParameterList = std::vector<Parameter*>;
using ConstParameterList = std::vector<const Parameter*>;

void zero_grads(const ParameterList& params);

/// Whether backward passes accumulate parameter gradients or only propagate to inputs.
enum class GradMode { accumulate, input_only };

enum class Activation { identity, relu, tanh, sigmoid };

/// Numerically stable softmax (max-shifted).
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

/// y = act(x W^T + b) over a batch of row vectors.
class DenseLayer {
public:
    DenseLayer() = default;
    /// Uniform(-1/sqrt(in), 1/sqrt(in)) initialization, multiplied by `init_scale`.
    DenseLayer(std::string name, int in, int out, Activation act, std::mt19937_64& rng,
               double init_scale = 1.0);

    const Tensor2& forward(const Tensor2& x);
    Tensor2 backward(const Tensor2& dy, GradMode mode = GradMode::accumulate);

    int in_dim() const { return static_cast<int>(weight_.value.cols()); }
    int out_dim() const { return static_cast<int>(weight_.value.rows()); }
    Activation activation() const { return act_; }

    void collect(ParameterList& out) { out.push_back(&weight_); out.push_back(&bias_); }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

    /// Folds the sign pattern of cached ReLU pre-activations into `seed`.
    std::uint64_t relu_pattern(std::uint64_t seed) const;

private:
    Parameter weight_;  // out x in
    Parameter bias_;    // 1 x out
    Activation act_ = Activation::identity;
    Tensor2 input_;
    Tensor2 output_;
    bool cached_ = false;
};

/// Multi-head scaled dot-product self-attention over fixed-size token sets.
/// Input rows are grouped per sample: rows [b*n, (b+1)*n) form sample b.
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(std::string name, int d_model, int n_heads, std::mt19937_64& rng);

    Tensor2 forward(const Tensor2& tokens, int tokens_per_sample);
    Tensor2 backward(const Tensor2& dy, GradMode mode = GradMode::accumulate);

    int d_model() const { return d_model_; }
    int n_heads() const { return n_heads_; }
    void collect(ParameterList& out);

    /// Attention weights of the last forward pass: (batch * heads * n) x n.
    const Tensor2& attention_weights() const { return attn_; }

private:
    int d_model_ = 0;
    int n_heads_ = 0;
    int tokens_ = 0;
    Parameter wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
    Tensor2 x_, q_, k_, v_, concat_, attn_;
    bool cached_ = false;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list.
class Adam {
public:
    Adam() = default;
    Adam(ParameterList params, AdamConfig config);

    /// Applies one update from each parameter's accumulated gradient.
    void step();
    void zero_grad() { zero_grads(params_); }

    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; }
    const AdamConfig& config() const { return config_; }
    std::vector<Tensor2>& first_moments() { return m_; }
    std::vector<Tensor2>& second_moments() { return v_; }
    const ParameterList& parameters() const { return params_; }

private:
    ParameterList params_;
    AdamConfig config_;
    std::vector<Tensor2> m_;
    std::vector<Tensor2> v_;
    long t_ = 0;
};

/// target <- tau * source + (1 - tau) * target, element-wise.
void soft_update(const ParameterList& source, const ParameterList& target, double tau);

// ---- checkpoint container -------------------------------------------------------------------
//
// Layout (all integers little-endian):
//   magic "UAVSNNCK" (8 bytes) | u32 version | u32 block_count
//   per block: u32 name_len | name bytes | u32 rows | u32 cols | rows*cols f64 (row-major)

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBlock {
    std::string name;
    Tensor2 value;
};

void write_blocks(std::ostream& out, std::span<const NamedBlock> blocks);
std::vector<NamedBlock> read_blocks(std::istream& in);

}  // namespace uavslice::nn
