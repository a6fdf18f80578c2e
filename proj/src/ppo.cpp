#include "accord/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace accord::ppo {

double advantage(const Transition& t) {
    if (!t.complete) throw std::invalid_argument("advantage: transition has no reward yet");
    return t.reward - t.value_est;
}

std::vector<double> normalize_advantages(std::span<const double> raw) {
    std::vector<double> out(raw.begin(), raw.end());
    if (out.empty()) return out;
    const double n = static_cast<double>(out.size());
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
    double var = 0.0;
    for (double a : out) var += (a - mean) * (a - mean);
    const double std = std::max(std::sqrt(var / n), 1e-8);
    for (double& a : out) a = (a - mean) / std;
    return out;
}

double clip_objective(double ratio, double adv, double eps) {
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * adv, clipped * adv);
}

double clip_objective_grad(double ratio, double adv, double eps) {
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return ratio * adv <= clipped * adv ? adv : 0.0;
}

double approx_kl(std::span<const double> logp_old, std::span<const double> logp_new) {
    if (logp_old.size() != logp_new.size()) throw std::invalid_argument("approx_kl: length mismatch");
    if (logp_old.empty()) throw std::invalid_argument("approx_kl: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < logp_old.size(); ++i) sum += logp_old[i] - logp_new[i];
    return sum / static_cast<double>(logp_old.size());
}

double huber(double y, double f, double delta) {
    const double r = std::abs(y - f);
    return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

double huber_grad(double y, double f, double delta) {
    const double r = f - y;
    return std::clamp(r, -delta, delta);
}

nlohmann::json to_json(const TrainStats& s) {
    return {{"ok", s.ok},
            {"error", s.error},
            {"samples", s.samples},
            {"epochs_run", s.epochs_run},
            {"minibatches", s.minibatches},
            {"early_stopped", s.early_stopped},
            {"lr_halvings", s.lr_halvings},
            {"actor_lr_start", s.actor_lr_start},
            {"actor_lr_final", s.actor_lr_final},
            {"critic_pretrain_loss_first", s.critic_pretrain_loss_first},
            {"critic_pretrain_loss_last", s.critic_pretrain_loss_last},
            {"policy_objective", s.policy_objective},
            {"value_loss", s.value_loss},
            {"entropy", s.entropy},
            {"clip_grad_norm", s.clip_grad_norm},
            {"entropy_grad_norm", s.entropy_grad_norm},
            {"kl_trace", s.kl_trace}};
}

Optimizer::Optimizer(std::string kind, double momentum, bool critic_group)
    : kind_(std::move(kind)), momentum_(momentum), critic_group_(critic_group) {
    if (kind_ != "sgd" && kind_ != "adam") throw std::invalid_argument("unknown optimizer " + kind_);
}

void Optimizer::step(Params& params, const Params& grads, double lr) {
    if (!initialized_) {
        m_ = Params::zeros(params.dims);
        v_ = Params::zeros(params.dims);
        initialized_ = true;
    }
    ++t_;
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));

    // All four parameter sets share the same visiting order.
    std::vector<Eigen::Map<Eigen::VectorXd>> p, m, v;
    std::vector<Eigen::Map<const Eigen::VectorXd>> g;
    std::vector<bool> mine;
    params.for_each([&](std::string_view name, auto& t) {
        p.emplace_back(t.data(), t.size());
        mine.push_back(Params::is_critic_tensor(name) == critic_group_);
    });
    m_.for_each([&](std::string_view, auto& t) { m.emplace_back(t.data(), t.size()); });
    v_.for_each([&](std::string_view, auto& t) { v.emplace_back(t.data(), t.size()); });
    grads.for_each([&](std::string_view, const auto& t) { g.emplace_back(t.data(), t.size()); });

    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!mine[k]) continue;
        if (kind_ == "sgd") {
            m[k] = momentum_ * m[k] + g[k];
            p[k] -= lr * m[k];
        } else {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k].cwiseAbs2();
            p[k].array() -= lr * (m[k].array() / bc1) / ((v[k].array() / bc2).sqrt() + eps);
        }
    }
}

namespace {

double grad_norm(const Params& g, bool critic) {
    double sq = 0.0;
    g.for_each([&](std::string_view name, const auto& t) {
        if (Params::is_critic_tensor(name) == critic) sq += t.squaredNorm();
    });
    return std::sqrt(sq);
}

// dlogits of -coef * mean-over-valid-heads entropy for one sample.
nn::Logits<double> entropy_logit_grad(const nn::ForwardOut<double>& out, double coef) {
    nn::Logits<double> d = nn::Logits<double>::Zero();
    int valid = 0;
    for (bool m : out.mask) valid += m;
    for (int i = 0; i < nn::kSlots; ++i) {
        if (!out.mask[i]) continue;
        const auto lp = nn::log_softmax<double>(out.logits.row(i).transpose());
        const auto p = lp.array().exp().matrix();
        const double h = -(p.array() * lp.array()).sum();
        // dH/dz_k = -p_k (log p_k + H)
        for (int k = 0; k < nn::kActions; ++k) d(i, k) = coef * p(k) * (lp(k) + h) / valid;
    }
    return d;
}

double mean_head_entropy(const nn::ForwardOut<double>& out) {
    double h = 0.0;
    int valid = 0;
    for (int i = 0; i < nn::kSlots; ++i) {
        if (!out.mask[i]) continue;
        h += nn::entropy<double>(out.logits.row(i).transpose());
        ++valid;
    }
    return h / valid;
}

}  // namespace

Trainer::Trainer(const PpoConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed), actor_opt_(cfg.optimizer, cfg.momentum, false),
      critic_opt_(cfg.optimizer, cfg.momentum, true) {}

TrainStats Trainer::update(std::vector<Transition>& buffer, Params& params) {
    std::vector<Transition> batch;
    std::vector<Transition> pending;
    for (auto& t : buffer) (t.complete ? batch : pending).push_back(std::move(t));
    buffer = std::move(pending);
    if (batch.empty()) throw std::invalid_argument("update: no complete transitions");

    TrainStats stats;
    stats.samples = batch.size();
    stats.actor_lr_start = cfg_.actor_lr;
    const Params backup = params;
    const std::size_t n = batch.size();

    auto abort = [&](const std::string& why) {
        params = backup;
        stats.ok = false;
        stats.error = why;
        return stats;
    };

    // Critic pretraining on the whole batch; return = reward for single-step episodes.
    nn::ForwardCache<double> cache;
    const nn::Logits<double> no_logit_grad = nn::Logits<double>::Zero();
    for (int step = 0; step < cfg_.critic_pretrain_steps; ++step) {
        auto grads = Params::zeros(params.dims);
        double loss = 0.0;
        for (const auto& t : batch) {
            const double v = nn::forward_value(params, t.state, cache);
            loss += huber(t.reward, v, cfg_.huber_delta);
            nn::backward(params, t.state, cache, no_logit_grad, huber_grad(t.reward, v, cfg_.huber_delta) / n, grads);
        }
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) return abort("non-finite critic pretraining loss");
        if (step == 0) stats.critic_pretrain_loss_first = loss;
        stats.critic_pretrain_loss_last = loss;
        critic_opt_.step(params, grads, cfg_.critic_lr);
    }

    std::vector<double> raw(n);
    for (std::size_t k = 0; k < n; ++k) {
        raw[k] = batch[k].reward - nn::forward_value(params, batch[k].state, cache);
    }
    const auto adv = normalize_advantages(raw);

    double actor_lr = cfg_.actor_lr;
    int consecutive_high = 0;
    double objective_sum = 0.0, value_loss_sum = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg_.minibatch_size), n);

    for (int epoch = 0; epoch < cfg_.epochs && !stats.early_stopped; ++epoch) {
        ++stats.epochs_run;
        std::shuffle(order.begin(), order.end(), rng_);
        for (std::size_t start = 0; start < n; start += mb) {
            const std::size_t end = std::min(start + mb, n);
            const double m = static_cast<double>(end - start);
            auto clip_grads = Params::zeros(params.dims);
            auto ent_grads = Params::zeros(params.dims);
            auto critic_grads = Params::zeros(params.dims);
            double objective = 0.0, ent = 0.0, vloss = 0.0;

            for (std::size_t k = start; k < end; ++k) {
                const auto& t = batch[order[k]];
                const double a = adv[order[k]];
                const auto out = nn::forward(params, t.state, &cache);
                const double logp = nn::joint_log_prob(out, t.actions);
                const double ratio = std::exp(logp - t.joint_logprob);
                objective += clip_objective(ratio, a, cfg_.clip);
                ent += mean_head_entropy(out);
                vloss += huber(t.reward, out.value, cfg_.huber_delta);

                // Loss = -(objective + c * entropy) / m + huber / m.
                const double dlogp = -clip_objective_grad(ratio, a, cfg_.clip) * ratio / m;
                nn::Logits<double> dclip = nn::Logits<double>::Zero();
                if (dlogp != 0.0) {
                    for (int i = 0; i < nn::kSlots; ++i) {
                        if (!out.mask[i]) continue;
                        const auto p = nn::masked_softmax<double>(out.logits.row(i).transpose(), true);
                        for (int j = 0; j < nn::kActions; ++j) {
                            dclip(i, j) = dlogp * ((j == t.actions[i] ? 1.0 : 0.0) - p(j));
                        }
                    }
                    nn::backward(params, t.state, cache, dclip, 0.0, clip_grads);
                }
                if (cfg_.entropy_coeff > 0.0) {
                    nn::backward(params, t.state, cache, entropy_logit_grad(out, cfg_.entropy_coeff / m), 0.0,
                                 ent_grads);
                }
                nn::backward(params, t.state, cache, no_logit_grad,
                             huber_grad(t.reward, out.value, cfg_.huber_delta) / m, critic_grads);
            }
            if (!std::isfinite(objective) || !std::isfinite(ent) || !std::isfinite(vloss)) {
                return abort("non-finite loss in minibatch");
            }
            objective_sum += objective;
            value_loss_sum += vloss;
            ++stats.minibatches;
            stats.clip_grad_norm = std::max(stats.clip_grad_norm, grad_norm(clip_grads, false));
            stats.entropy_grad_norm = std::max(stats.entropy_grad_norm, grad_norm(ent_grads, false));

            clip_grads += ent_grads;
            actor_opt_.step(params, clip_grads, actor_lr);
            critic_opt_.step(params, critic_grads, cfg_.critic_lr);

            std::vector<double> old_lp, new_lp;
            for (std::size_t k = start; k < end; ++k) {
                const auto& t = batch[order[k]];
                old_lp.push_back(t.joint_logprob);
                new_lp.push_back(nn::joint_log_prob(nn::forward(params, t.state, &cache, false), t.actions));
            }
            const double kl = approx_kl(old_lp, new_lp);
            if (!std::isfinite(kl)) return abort("non-finite KL estimate");
            stats.kl_trace.push_back(kl);
            if (kl > cfg_.kl_stop_factor * cfg_.target_kl) {
                stats.early_stopped = true;
                break;
            }
            if (kl > cfg_.kl_halve_factor * cfg_.target_kl) {
                if (++consecutive_high >= cfg_.kl_consecutive) {
                    actor_lr *= 0.5;
                    ++stats.lr_halvings;
                    consecutive_high = 0;
                }
            } else {
                consecutive_high = 0;
            }
        }
    }

    const double total = std::max(1.0, static_cast<double>(stats.minibatches) * static_cast<double>(mb));
    stats.policy_objective = objective_sum / total;
    stats.value_loss = value_loss_sum / total;
    double ent = 0.0;
    for (const auto& t : batch) ent += mean_head_entropy(nn::forward(params, t.state, &cache, false));
    stats.entropy = ent / static_cast<double>(n);
    stats.actor_lr_final = actor_lr;
    return stats;
}

}  // namespace accord::ppo
