// Masked multi-head actor-critic network for conflict resolution.
//
// Slot inputs (one per conflicting decision) pass through a shared encoder.
// Each decision head sees its own encoding, its parameter-type indicator, the
// global features, and the mean encoding of the *other* valid slots. The critic
// sees the global features and the mean encoding of *all* valid slots, with
// layer normalization after its first affine layer.
//
// Everything is templated on the scalar type; training uses double.
#ifndef ACCORD_NN_HPP
#define ACCORD_NN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "accord/core.hpp"

namespace accord::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr int kSlots = kMaxConflictDecisions;
inline constexpr int kTypeDims = 4;
inline constexpr int kSlotFeatures = kTypeDims + 1;
inline constexpr int kGlobalFeatures = 11;
inline constexpr int kActions = kNumActions;
/// Logit written for masked heads; stands in for -infinity.
inline constexpr double kMaskedLogit = -1e9;

template <typename Scalar>
using SlotMatrix = Eigen::Matrix<Scalar, kSlots, kSlotFeatures>;
template <typename Scalar>
using Globals = Eigen::Matrix<Scalar, kGlobalFeatures, 1>;
template <typename Scalar>
using Logits = Eigen::Matrix<Scalar, kSlots, kActions>;
template <typename Scalar>
using ActionProbs = Eigen::Matrix<Scalar, kActions, 1>;

using Mask = std::array<bool, kSlots>;

struct NetDims {
    int encoder_hidden = 128;
    int encoder_out = 252;
    int head_hidden = 256;
    int critic_hidden1 = 256;
    int critic_hidden2 = 128;

    int head_input() const { return 2 * encoder_out + kTypeDims + kGlobalFeatures; }
    int critic_input() const { return encoder_out + kGlobalFeatures; }
    /// Widest layer on the inference path (encoder + decision heads).
    int max_width() const {
        return std::max({1, encoder_hidden, encoder_out, head_input(), head_hidden, kActions});
    }
    /// Sequential affine layers on the inference path.
    static constexpr int inference_depth() { return 4; }

    bool operator==(const NetDims&) const = default;
};

/// Upper bound on multiply-accumulates of one inference pass: slots x depth x width^2.
constexpr std::int64_t mac_bound(std::int64_t slots, std::int64_t depth, std::int64_t width) {
    return slots * depth * width * width;
}

template <typename Scalar>
struct Linear {
    Matrix<Scalar> weight;  // out x in
    Vector<Scalar> bias;

    static Linear zeros(int in, int out) { return {Matrix<Scalar>::Zero(out, in), Vector<Scalar>::Zero(out)}; }
};

template <typename Scalar>
struct LayerNorm {
    Vector<Scalar> gain;
    Vector<Scalar> bias;
    static constexpr double kEps = 1e-5;
};

template <typename Scalar>
struct NetParams {
    NetDims dims;
    Linear<Scalar> encoder1, encoder2;
    std::array<Linear<Scalar>, kSlots> head1, head2;
    Linear<Scalar> critic1;
    LayerNorm<Scalar> critic_norm;
    Linear<Scalar> critic2, critic3;

    static NetParams zeros(const NetDims& d) {
        NetParams p;
        p.dims = d;
        p.encoder1 = Linear<Scalar>::zeros(1, d.encoder_hidden);
        p.encoder2 = Linear<Scalar>::zeros(d.encoder_hidden, d.encoder_out);
        for (int i = 0; i < kSlots; ++i) {
            p.head1[i] = Linear<Scalar>::zeros(d.head_input(), d.head_hidden);
            p.head2[i] = Linear<Scalar>::zeros(d.head_hidden, kActions);
        }
        p.critic1 = Linear<Scalar>::zeros(d.critic_input(), d.critic_hidden1);
        p.critic_norm = {Vector<Scalar>::Zero(d.critic_hidden1), Vector<Scalar>::Zero(d.critic_hidden1)};
        p.critic2 = Linear<Scalar>::zeros(d.critic_hidden1, d.critic_hidden2);
        p.critic3 = Linear<Scalar>::zeros(d.critic_hidden2, 1);
        return p;
    }

    /// Visits every tensor as (name, Eigen object&) in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each(F&& f) const {
        visit(*this, f);
    }

    std::int64_t size() const {
        std::int64_t n = 0;
        for_each([&](std::string_view, const auto& t) { n += t.size(); });
        return n;
    }

    /// Tensors owned by the actor (encoder + heads) vs the critic.
    static bool is_critic_tensor(std::string_view name) { return name.substr(0, 6) == "critic"; }

    NetParams& operator+=(const NetParams& o) {
        zip(o, [](auto& a, const auto& b) { a += b; });
        return *this;
    }
    NetParams& operator*=(Scalar s) {
        for_each([&](std::string_view, auto& t) { t *= s; });
        return *this;
    }

    template <typename F>
    void zip(const NetParams& o, F&& f) {
        auto visit2 = [&](auto& self_tensor, const auto& other_tensor) { f(self_tensor, other_tensor); };
        visit2(encoder1.weight, o.encoder1.weight);
        visit2(encoder1.bias, o.encoder1.bias);
        visit2(encoder2.weight, o.encoder2.weight);
        visit2(encoder2.bias, o.encoder2.bias);
        for (int i = 0; i < kSlots; ++i) {
            visit2(head1[i].weight, o.head1[i].weight);
            visit2(head1[i].bias, o.head1[i].bias);
            visit2(head2[i].weight, o.head2[i].weight);
            visit2(head2[i].bias, o.head2[i].bias);
        }
        visit2(critic1.weight, o.critic1.weight);
        visit2(critic1.bias, o.critic1.bias);
        visit2(critic_norm.gain, o.critic_norm.gain);
        visit2(critic_norm.bias, o.critic_norm.bias);
        visit2(critic2.weight, o.critic2.weight);
        visit2(critic2.bias, o.critic2.bias);
        visit2(critic3.weight, o.critic3.weight);
        visit2(critic3.bias, o.critic3.bias);
    }

private:
    template <typename Self, typename F>
    static void visit(Self& s, F& f) {
        static constexpr std::array<std::string_view, kSlots> h1w = {"head0.1.weight", "head1.1.weight", "head2.1.weight"};
        static constexpr std::array<std::string_view, kSlots> h1b = {"head0.1.bias", "head1.1.bias", "head2.1.bias"};
        static constexpr std::array<std::string_view, kSlots> h2w = {"head0.2.weight", "head1.2.weight", "head2.2.weight"};
        static constexpr std::array<std::string_view, kSlots> h2b = {"head0.2.bias", "head1.2.bias", "head2.2.bias"};
        f("encoder.1.weight", s.encoder1.weight);
        f("encoder.1.bias", s.encoder1.bias);
        f("encoder.2.weight", s.encoder2.weight);
        f("encoder.2.bias", s.encoder2.bias);
        for (int i = 0; i < kSlots; ++i) {
            f(h1w[i], s.head1[i].weight);
            f(h1b[i], s.head1[i].bias);
            f(h2w[i], s.head2[i].weight);
            f(h2b[i], s.head2[i].bias);
        }
        f("critic.1.weight", s.critic1.weight);
        f("critic.1.bias", s.critic1.bias);
        f("critic.norm.gain", s.critic_norm.gain);
        f("critic.norm.bias", s.critic_norm.bias);
        f("critic.2.weight", s.critic2.weight);
        f("critic.2.bias", s.critic2.bias);
        f("critic.3.weight", s.critic3.weight);
        f("critic.3.bias", s.critic3.bias);
    }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> orthogonal(int rows, int cols, double gain, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    // Sign correction makes the distribution uniform over orthogonal matrices.
    Eigen::MatrixXd r = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
    return (gain * w).template cast<Scalar>();
}

}  // namespace detail

/// Orthogonal initialization with ReLU gain for hidden layers, 0.01 for the
/// final actor layers and 1.0 for the final critic layer; biases start at 0
/// and the layer-norm gain at 1.
template <typename Scalar>
NetParams<Scalar> init_params(const NetDims& d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double relu_gain = std::sqrt(2.0);
    auto p = NetParams<Scalar>::zeros(d);
    p.encoder1.weight = detail::orthogonal<Scalar>(d.encoder_hidden, 1, relu_gain, rng);
    p.encoder2.weight = detail::orthogonal<Scalar>(d.encoder_out, d.encoder_hidden, relu_gain, rng);
    for (int i = 0; i < kSlots; ++i) {
        p.head1[i].weight = detail::orthogonal<Scalar>(d.head_hidden, d.head_input(), relu_gain, rng);
        p.head2[i].weight = detail::orthogonal<Scalar>(kActions, d.head_hidden, 0.01, rng);
    }
    p.critic1.weight = detail::orthogonal<Scalar>(d.critic_hidden1, d.critic_input(), relu_gain, rng);
    p.critic_norm.gain.setOnes();
    p.critic2.weight = detail::orthogonal<Scalar>(d.critic_hidden2, d.critic_hidden1, relu_gain, rng);
    p.critic3.weight = detail::orthogonal<Scalar>(1, d.critic_hidden2, 1.0, rng);
    return p;
}

template <typename Scalar>
struct PolicyInput {
    SlotMatrix<Scalar> slots = SlotMatrix<Scalar>::Zero();
    Mask mask{};
    Globals<Scalar> globals = Globals<Scalar>::Zero();

    int valid_count() const { return static_cast<int>(mask[0]) + mask[1] + mask[2]; }
};

template <typename Scalar>
struct ForwardOut {
    Logits<Scalar> logits = Logits<Scalar>::Zero();
    Mask mask{};
    Scalar value = 0;
};

/// Intermediate activations kept for the backward pass.
template <typename Scalar>
struct ForwardCache {
    std::array<Vector<Scalar>, kSlots> enc_pre1, enc_h1, enc_pre2, enc;
    std::array<Vector<Scalar>, kSlots> head_in, head_pre1, head_h1;
    Vector<Scalar> critic_in, critic_pre1, critic_hat, critic_normed, critic_h1, critic_pre2, critic_h2;
    Scalar critic_inv_std = 0;
    bool with_critic = true;
};

namespace detail {

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
    return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
auto relu_mask(const Eigen::MatrixBase<Derived>& pre) {
    return (pre.array() > typename Derived::Scalar(0)).template cast<typename Derived::Scalar>().matrix();
}

}  // namespace detail

namespace detail {

template <typename Scalar>
Vector<Scalar> encode_slots(const NetParams<Scalar>& p, const PolicyInput<Scalar>& in, ForwardCache<Scalar>& c) {
    Vector<Scalar> enc_sum = Vector<Scalar>::Zero(p.dims.encoder_out);
    for (int j = 0; j < kSlots; ++j) {
        if (!in.mask[j]) continue;
        const Scalar v = in.slots(j, kTypeDims);
        c.enc_pre1[j] = p.encoder1.weight.col(0) * v + p.encoder1.bias;
        c.enc_h1[j] = relu(c.enc_pre1[j]);
        c.enc_pre2[j].noalias() = p.encoder2.weight * c.enc_h1[j];
        c.enc_pre2[j] += p.encoder2.bias;
        c.enc[j] = relu(c.enc_pre2[j]);
        enc_sum += c.enc[j];
    }
    return enc_sum;
}

template <typename Scalar>
Scalar critic_value(const NetParams<Scalar>& p, const PolicyInput<Scalar>& in, const Vector<Scalar>& enc_sum,
                    int valid, ForwardCache<Scalar>& c) {
    const int E = p.dims.encoder_out;
    c.critic_in.resize(p.dims.critic_input());
    c.critic_in.head(kGlobalFeatures) = in.globals;
    c.critic_in.tail(E) = enc_sum / Scalar(valid);
    c.critic_pre1.noalias() = p.critic1.weight * c.critic_in;
    c.critic_pre1 += p.critic1.bias;
    const Scalar mean = c.critic_pre1.mean();
    const Scalar var = (c.critic_pre1.array() - mean).square().mean();
    c.critic_inv_std = Scalar(1) / std::sqrt(var + Scalar(LayerNorm<Scalar>::kEps));
    c.critic_hat = (c.critic_pre1.array() - mean) * c.critic_inv_std;
    c.critic_normed = p.critic_norm.gain.cwiseProduct(c.critic_hat) + p.critic_norm.bias;
    c.critic_h1 = relu(c.critic_normed);
    c.critic_pre2.noalias() = p.critic2.weight * c.critic_h1;
    c.critic_pre2 += p.critic2.bias;
    c.critic_h2 = relu(c.critic_pre2);
    return (p.critic3.weight * c.critic_h2)(0) + p.critic3.bias(0);
}

}  // namespace detail

/// Forward pass. Masked heads are skipped and emit kMaskedLogit. When
/// `with_critic` is false the value is left at 0 (inference path only).
template <typename Scalar>
ForwardOut<Scalar> forward(const NetParams<Scalar>& p, const PolicyInput<Scalar>& in,
                           ForwardCache<Scalar>* cache = nullptr, bool with_critic = true) {
    const int valid = in.valid_count();
    if (valid == 0) throw std::invalid_argument("forward: mask has no valid slot");
    const int E = p.dims.encoder_out;

    ForwardCache<Scalar> local;
    ForwardCache<Scalar>& c = cache ? *cache : local;
    c.with_critic = with_critic;
    const Vector<Scalar> enc_sum = detail::encode_slots(p, in, c);

    ForwardOut<Scalar> out;
    out.mask = in.mask;
    const int H = p.dims.head_input();
    for (int i = 0; i < kSlots; ++i) {
        if (!in.mask[i]) {
            out.logits.row(i).setConstant(Scalar(kMaskedLogit));
            continue;
        }
        auto& x = c.head_in[i];
        x.resize(H);
        x.head(E) = c.enc[i];
        x.segment(E, kTypeDims) = in.slots.row(i).head(kTypeDims).transpose();
        x.segment(E + kTypeDims, kGlobalFeatures) = in.globals;
        if (valid > 1) {
            x.tail(E) = (enc_sum - c.enc[i]) / Scalar(valid - 1);
        } else {
            x.tail(E).setZero();
        }
        c.head_pre1[i].noalias() = p.head1[i].weight * x;
        c.head_pre1[i] += p.head1[i].bias;
        c.head_h1[i] = detail::relu(c.head_pre1[i]);
        Vector<Scalar> logits = p.head2[i].weight * c.head_h1[i] + p.head2[i].bias;
        out.logits.row(i) = logits.transpose();
    }

    if (with_critic) out.value = detail::critic_value(p, in, enc_sum, valid, c);
    return out;
}

/// Critic value only; the decision heads are not evaluated. A cache filled
/// here supports backward() with all-zero logit gradients.
template <typename Scalar>
Scalar forward_value(const NetParams<Scalar>& p, const PolicyInput<Scalar>& in, ForwardCache<Scalar>& cache) {
    const int valid = in.valid_count();
    if (valid == 0) throw std::invalid_argument("forward_value: mask has no valid slot");
    cache.with_critic = true;
    const Vector<Scalar> enc_sum = detail::encode_slots(p, in, cache);
    return detail::critic_value(p, in, enc_sum, valid, cache);
}

/// Accumulates into `grads` the gradient of a scalar loss whose partials with
/// respect to the logits and the value are `dlogits` and `dvalue`. Rows of
/// `dlogits` belonging to masked heads are ignored.
template <typename Scalar>
void backward(const NetParams<Scalar>& p, const PolicyInput<Scalar>& in, const ForwardCache<Scalar>& c,
              const Logits<Scalar>& dlogits, Scalar dvalue, NetParams<Scalar>& grads) {
    const int valid = in.valid_count();
    const int E = p.dims.encoder_out;
    std::array<Vector<Scalar>, kSlots> d_enc;
    for (int j = 0; j < kSlots; ++j) {
        if (in.mask[j]) d_enc[j] = Vector<Scalar>::Zero(E);
    }

    for (int i = 0; i < kSlots; ++i) {
        if (!in.mask[i]) continue;
        const Vector<Scalar> dl = dlogits.row(i).transpose();
        if (dl.isZero(0)) continue;
        grads.head2[i].weight.noalias() += dl * c.head_h1[i].transpose();
        grads.head2[i].bias += dl;
        Vector<Scalar> dz = (p.head2[i].weight.transpose() * dl).cwiseProduct(detail::relu_mask(c.head_pre1[i]));
        grads.head1[i].weight.noalias() += dz * c.head_in[i].transpose();
        grads.head1[i].bias += dz;
        const Vector<Scalar> dx = p.head1[i].weight.transpose() * dz;
        d_enc[i] += dx.head(E);
        if (valid > 1) {
            const Vector<Scalar> d_pool = dx.tail(E) / Scalar(valid - 1);
            for (int j = 0; j < kSlots; ++j) {
                if (j != i && in.mask[j]) d_enc[j] += d_pool;
            }
        }
    }

    if (c.with_critic && dvalue != Scalar(0)) {
        grads.critic3.weight.noalias() += dvalue * c.critic_h2.transpose();
        grads.critic3.bias(0) += dvalue;
        const Vector<Scalar> da2 =
            (p.critic3.weight.transpose() * dvalue).cwiseProduct(detail::relu_mask(c.critic_pre2));
        grads.critic2.weight.noalias() += da2 * c.critic_h1.transpose();
        grads.critic2.bias += da2;
        const Vector<Scalar> dy = (p.critic2.weight.transpose() * da2).cwiseProduct(detail::relu_mask(c.critic_normed));
        grads.critic_norm.gain += dy.cwiseProduct(c.critic_hat);
        grads.critic_norm.bias += dy;
        const Vector<Scalar> dhat = dy.cwiseProduct(p.critic_norm.gain);
        const Scalar mean_dhat = dhat.mean();
        const Scalar mean_dhat_hat = dhat.cwiseProduct(c.critic_hat).mean();
        const Vector<Scalar> da1 =
            c.critic_inv_std * (dhat.array() - mean_dhat - c.critic_hat.array() * mean_dhat_hat).matrix();
        grads.critic1.weight.noalias() += da1 * c.critic_in.transpose();
        grads.critic1.bias += da1;
        const Vector<Scalar> d_pool_all = (p.critic1.weight.transpose() * da1).tail(E) / Scalar(valid);
        for (int j = 0; j < kSlots; ++j) {
            if (in.mask[j]) d_enc[j] += d_pool_all;
        }
    }

    for (int j = 0; j < kSlots; ++j) {
        if (!in.mask[j]) continue;
        const Vector<Scalar> de2 = d_enc[j].cwiseProduct(detail::relu_mask(c.enc_pre2[j]));
        grads.encoder2.weight.noalias() += de2 * c.enc_h1[j].transpose();
        grads.encoder2.bias += de2;
        const Vector<Scalar> de1 = (p.encoder2.weight.transpose() * de2).cwiseProduct(detail::relu_mask(c.enc_pre1[j]));
        grads.encoder1.weight.col(0) += de1 * in.slots(j, kTypeDims);
        grads.encoder1.bias += de1;
    }
}

/// Softmax over one head's logits; invalid heads return the zero vector.
template <typename Scalar, typename Derived>
ActionProbs<Scalar> masked_softmax(const Eigen::MatrixBase<Derived>& logits, bool valid) {
    ActionProbs<Scalar> p = ActionProbs<Scalar>::Zero();
    if (!valid) return p;
    const Scalar m = logits.maxCoeff();
    for (int k = 0; k < kActions; ++k) p(k) = std::exp(logits(k) - m);
    return p / p.sum();
}

/// Log-probabilities of one valid head, computed stably.
template <typename Scalar, typename Derived>
ActionProbs<Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
    const Scalar m = logits.maxCoeff();
    Scalar sum = 0;
    for (int k = 0; k < kActions; ++k) sum += std::exp(logits(k) - m);
    const Scalar lse = m + std::log(sum);
    ActionProbs<Scalar> out;
    for (int k = 0; k < kActions; ++k) out(k) = logits(k) - lse;
    return out;
}

/// Joint log-probability of per-head actions over the valid heads.
template <typename Scalar>
Scalar joint_log_prob(const ForwardOut<Scalar>& out, const std::array<int, kSlots>& actions) {
    Scalar total = 0;
    for (int i = 0; i < kSlots; ++i) {
        if (!out.mask[i]) continue;
        total += log_softmax<Scalar>(out.logits.row(i).transpose())(actions[i]);
    }
    return total;
}

template <typename Scalar, typename Derived>
Scalar entropy(const Eigen::MatrixBase<Derived>& logits) {
    const auto lp = log_softmax<Scalar>(logits);
    Scalar h = 0;
    for (int k = 0; k < kActions; ++k) h -= std::exp(lp(k)) * lp(k);
    return h;
}

}  // namespace accord::nn

#endif  // ACCORD_NN_HPP
