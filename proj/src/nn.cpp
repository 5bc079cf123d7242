#include "uavslice/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <cstring>
#include <istream>
#include <ostream>

namespace uavslice::nn {

void check_finite(const Tensor2& t, const std::string& where) {
    // x * 0 is NaN exactly for non-finite x and NaN survives the sum
    if ((t.array() * 0.0).sum() != 0.0) throw NumericError("non-finite value produced in " + where);
}

void zero_grads(const ParameterList& params) {
    for (Parameter* p : params) p->grad.setZero();
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

namespace {

Tensor2 uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor2 m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

}  // namespace

// ---- DenseLayer -----------------------------------------------------------------------------

DenseLayer::DenseLayer(std::string name, int in, int out, Activation act, std::mt19937_64& rng,
                       double init_scale)
    : act_(act) {
    if (in <= 0 || out <= 0) throw ShapeError("DenseLayer " + name + ": dimensions must be positive");
    const double bound = init_scale / std::sqrt(static_cast<double>(in));
    weight_ = Parameter(name + "/w", uniform_matrix(out, in, bound, rng));
    bias_ = Parameter(name + "/b", uniform_matrix(1, out, bound, rng));
}

const Tensor2& DenseLayer::forward(const Tensor2& x) {
    if (x.cols() != weight_.value.cols()) {
        throw ShapeError(weight_.name + ": input has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(weight_.value.cols()));
    }
    input_ = x;
    output_.noalias() = x * weight_.value.transpose();
    output_.rowwise() += bias_.value.row(0);
    switch (act_) {
        case Activation::identity: break;
        case Activation::relu: output_ = output_.cwiseMax(0.0); break;
        case Activation::tanh: output_ = output_.array().tanh().matrix(); break;
        case Activation::sigmoid:
            output_ = (1.0 / (1.0 + (-output_.array()).exp())).matrix();
            break;
    }
    check_finite(output_, weight_.name);
    cached_ = true;
    return output_;
}

Tensor2 DenseLayer::backward(const Tensor2& dy, GradMode mode) {
    if (!cached_) throw MissingCacheError(weight_.name + ": backward without forward");
    if (dy.rows() != output_.rows() || dy.cols() != output_.cols()) {
        throw ShapeError(weight_.name + ": upstream gradient shape mismatch");
    }
    Tensor2 dz;
    switch (act_) {
        case Activation::identity: dz = dy; break;
        case Activation::relu: dz = (output_.array() > 0.0).select(dy, 0.0); break;
        case Activation::tanh: dz = (dy.array() * (1.0 - output_.array().square())).matrix(); break;
        case Activation::sigmoid:
            dz = (dy.array() * output_.array() * (1.0 - output_.array())).matrix();
            break;
    }
    if (mode == GradMode::accumulate) {
        weight_.grad.noalias() += dz.transpose() * input_;
        bias_.grad.row(0) += dz.colwise().sum();
    }
    Tensor2 dx = dz * weight_.value;
    return dx;
}

std::uint64_t DenseLayer::relu_pattern(std::uint64_t seed) const {
    if (act_ != Activation::relu || !cached_) return seed;
    std::uint64_t h = seed;
    for (Eigen::Index i = 0; i < output_.size(); ++i) {
        h ^= output_.data()[i] > 0.0 ? 0x9e3779b97f4a7c15ULL : 0x7f4a7c159e3779b9ULL;
        h = (h << 7) | (h >> 57);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- MultiHeadAttention ---------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(std::string name, int d_model, int n_heads, std::mt19937_64& rng)
    : d_model_(d_model), n_heads_(n_heads) {
    if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
        throw ShapeError("MultiHeadAttention " + name + ": d_model must be divisible by n_heads");
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
    wq_ = Parameter(name + "/wq", uniform_matrix(d_model, d_model, bound, rng));
    bq_ = Parameter(name + "/bq", Tensor2::Zero(1, d_model));
    wk_ = Parameter(name + "/wk", uniform_matrix(d_model, d_model, bound, rng));
    bk_ = Parameter(name + "/bk", Tensor2::Zero(1, d_model));
    wv_ = Parameter(name + "/wv", uniform_matrix(d_model, d_model, bound, rng));
    bv_ = Parameter(name + "/bv", Tensor2::Zero(1, d_model));
    wo_ = Parameter(name + "/wo", uniform_matrix(d_model, d_model, bound, rng));
    bo_ = Parameter(name + "/bo", Tensor2::Zero(1, d_model));
}

void MultiHeadAttention::collect(ParameterList& out) {
    for (Parameter* p : {&wq_, &bq_, &wk_, &bk_, &wv_, &bv_, &wo_, &bo_}) out.push_back(p);
}

Tensor2 MultiHeadAttention::forward(const Tensor2& tokens, int tokens_per_sample) {
    if (tokens.cols() != d_model_) {
        throw ShapeError(wq_.name + ": token width " + std::to_string(tokens.cols()) +
                         " != d_model " + std::to_string(d_model_));
    }
    if (tokens_per_sample <= 0 || tokens.rows() % tokens_per_sample != 0) {
        throw ShapeError(wq_.name + ": token rows are not a multiple of tokens_per_sample");
    }
    const int n = tokens_per_sample;
    const Eigen::Index batch = tokens.rows() / n;
    const int dk = d_model_ / n_heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    tokens_ = n;
    x_ = tokens;
    q_.noalias() = x_ * wq_.value.transpose();
    q_.rowwise() += bq_.value.row(0);
    k_.noalias() = x_ * wk_.value.transpose();
    k_.rowwise() += bk_.value.row(0);
    v_.noalias() = x_ * wv_.value.transpose();
    v_.rowwise() += bv_.value.row(0);

    concat_.resize(x_.rows(), d_model_);
    attn_.resize(batch * n_heads_ * n, n);
    const Eigen::Index d = d_model_;
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int h = 0; h < n_heads_; ++h) {
            const Eigen::Index off = b * n * d + h * dk;
            const double* qb = q_.data() + off;
            const double* kb = k_.data() + off;
            double* a = attn_.data() + (b * n_heads_ + h) * n * n;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
#pragma omp simd reduction(+ : s)
                    for (int c = 0; c < dk; ++c) s += qb[i * d + c] * kb[j * d + c];
                    a[i * n + j] = s * scale;
                }
            }
        }
    }
    // row-wise softmax over the whole score tensor at once
    const Eigen::VectorXd row_max = attn_.rowwise().maxCoeff();
    attn_.colwise() -= row_max;
    attn_ = attn_.array().exp().matrix();
    const Eigen::VectorXd row_sum = attn_.rowwise().sum();
    attn_.array().colwise() /= row_sum.array();
    concat_.setZero();
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int h = 0; h < n_heads_; ++h) {
            const Eigen::Index off = b * n * d + h * dk;
            const double* vb = v_.data() + off;
            double* out = concat_.data() + off;
            const double* a = attn_.data() + (b * n_heads_ + h) * n * n;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double aij = a[i * n + j];
                    for (int c = 0; c < dk; ++c) out[i * d + c] += aij * vb[j * d + c];
                }
            }
        }
    }
    Tensor2 y = concat_ * wo_.value.transpose();
    y.rowwise() += bo_.value.row(0);
    check_finite(y, wq_.name);
    cached_ = true;
    return y;
}

Tensor2 MultiHeadAttention::backward(const Tensor2& dy, GradMode mode) {
    if (!cached_) throw MissingCacheError(wq_.name + ": backward without forward");
    if (dy.rows() != x_.rows() || dy.cols() != d_model_) {
        throw ShapeError(wq_.name + ": upstream gradient shape mismatch");
    }
    const int n = tokens_;
    const Eigen::Index batch = x_.rows() / n;
    const int dk = d_model_ / n_heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    const Tensor2 dconcat = dy * wo_.value;
    if (mode == GradMode::accumulate) {
        wo_.grad.noalias() += dy.transpose() * concat_;
        bo_.grad.row(0) += dy.colwise().sum();
    }

    Tensor2 dq = Tensor2::Zero(x_.rows(), d_model_);
    Tensor2 dk_all = Tensor2::Zero(x_.rows(), d_model_);
    Tensor2 dv = Tensor2::Zero(x_.rows(), d_model_);
    const Eigen::Index d = d_model_;
    std::vector<double> ds(static_cast<std::size_t>(n) * n);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int h = 0; h < n_heads_; ++h) {
            const Eigen::Index off = b * n * d + h * dk;
            const double* a = attn_.data() + (b * n_heads_ + h) * n * n;
            const double* dout = dconcat.data() + off;
            const double* qb = q_.data() + off;
            const double* kb = k_.data() + off;
            const double* vb = v_.data() + off;
            double* dqb = dq.data() + off;
            double* dkb = dk_all.data() + off;
            double* dvb = dv.data() + off;
            for (int i = 0; i < n; ++i) {
                // dA_ij = dout_i . v_j ; dS_ij = A_ij (dA_ij - sum_j' A_ij' dA_ij')
                double row_dot = 0.0;
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
#pragma omp simd reduction(+ : s)
                    for (int c = 0; c < dk; ++c) s += dout[i * d + c] * vb[j * d + c];
                    ds[i * n + j] = s;
                    row_dot += s * a[i * n + j];
                }
                for (int j = 0; j < n; ++j) ds[i * n + j] = a[i * n + j] * (ds[i * n + j] - row_dot) * scale;
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double aij = a[i * n + j];
                    const double sij = ds[i * n + j];
                    for (int c = 0; c < dk; ++c) {
                        dvb[j * d + c] += aij * dout[i * d + c];
                        dqb[i * d + c] += sij * kb[j * d + c];
                        dkb[j * d + c] += sij * qb[i * d + c];
                    }
                }
            }
        }
    }

    if (mode == GradMode::accumulate) {
        wq_.grad.noalias() += dq.transpose() * x_;
        bq_.grad.row(0) += dq.colwise().sum();
        wk_.grad.noalias() += dk_all.transpose() * x_;
        bk_.grad.row(0) += dk_all.colwise().sum();
        wv_.grad.noalias() += dv.transpose() * x_;
        bv_.grad.row(0) += dv.colwise().sum();
    }
    Tensor2 dx = dq * wq_.value;
    dx.noalias() += dk_all * wk_.value;
    dx.noalias() += dv * wv_.value;
    return dx;
}

// ---- Adam -----------------------------------------------------------------------------------

Adam::Adam(ParameterList params, AdamConfig config) : params_(std::move(params)), config_(config) {
    for (const Parameter* p : params_) {
        m_.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
            m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols()) {
            throw ShapeError("Adam: shape mismatch for " + p.name);
        }
        check_finite(p.grad, "gradient of " + p.name);
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= config_.lr * (m_[i].array() / bc1) /
                           ((v_[i].array() / bc2).sqrt() + config_.eps);
    }
}

void soft_update(const ParameterList& source, const ParameterList& target, double tau) {
    if (source.size() != target.size()) throw ShapeError("soft_update: parameter count mismatch");
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Tensor2& s = source[i]->value;
        Tensor2& t = target[i]->value;
        if (s.rows() != t.rows() || s.cols() != t.cols()) {
            throw ShapeError("soft_update: shape mismatch for " + source[i]->name);
        }
        if (tau == 1.0) {
            t = s;
        } else {
            t = tau * s + (1.0 - tau) * t;
        }
    }
}

// ---- checkpoint container -------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'S', 'N', 'N', 'C', 'K'};

template <typename T>
T little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        if constexpr (sizeof(T) == 4) return static_cast<T>(__builtin_bswap32(v));
        else return static_cast<T>(__builtin_bswap64(v));
    }
    return v;
}

template <typename T>
void put(std::ostream& out, T v) {
    v = little_endian(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: unexpected end of data");
    return little_endian(v);
}

}  // namespace

void write_blocks(std::ostream& out, std::span<const NamedBlock> blocks) {
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
    for (const NamedBlock& b : blocks) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
        out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.value.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.value.cols()));
        for (Eigen::Index i = 0; i < b.value.size(); ++i) {
            put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(b.value.data()[i]));
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failed");
}

std::vector<NamedBlock> read_blocks(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = get<std::uint32_t>(in);
    std::vector<NamedBlock> blocks;
    blocks.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedBlock b;
        const auto len = get<std::uint32_t>(in);
        b.name.resize(len);
        in.read(b.name.data(), len);
        const auto rows = get<std::uint32_t>(in);
        const auto cols = get<std::uint32_t>(in);
        b.value.resize(rows, cols);
        for (Eigen::Index k = 0; k < b.value.size(); ++k) {
            b.value.data()[k] = std::bit_cast<double>(get<std::uint64_t>(in));
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

}  // namespace uavslice::nn
