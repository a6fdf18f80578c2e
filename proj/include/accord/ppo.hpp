// PPO-Clip training for the conflict-resolution network: single-step
// transitions, critic pretraining with Huber loss, clipped policy updates
// with an entropy bonus, and KL-triggered learning-rate halving / early stop.
#ifndef ACCORD_PPO_HPP
#define ACCORD_PPO_HPP

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "accord/config.hpp"
#include "accord/nn.hpp"

namespace accord::ppo {

using Params = nn::NetParams<double>;
using State = nn::PolicyInput<double>;

struct Transition {
    State state;
    std::array<int, nn::kSlots> actions{};
    double joint_logprob = 0.0;  // sum over valid heads of log pi(a_i | s)
    double value_est = 0.0;
    double reward = 0.0;
    bool complete = false;
};

/// Raw single-step advantage r - V(s). Throws std::invalid_argument if the
/// transition has no observed reward yet.
double advantage(const Transition& t);

/// Zero mean, unit (population) standard deviation; the std is floored at 1e-8.
std::vector<double> normalize_advantages(std::span<const double> raw);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clip_objective(double ratio, double adv, double eps);

/// d clip_objective / d ratio: A where the unclipped term is the active minimum, else 0.
double clip_objective_grad(double ratio, double adv, double eps);

/// Mean of logp_old - logp_new.
double approx_kl(std::span<const double> logp_old, std::span<const double> logp_new);

double huber(double y, double f, double delta);
/// d huber / d f.
double huber_grad(double y, double f, double delta);

struct TrainStats {
    bool ok = true;
    std::string error;
    std::size_t samples = 0;
    int epochs_run = 0;
    int minibatches = 0;
    bool early_stopped = false;
    int lr_halvings = 0;
    double actor_lr_start = 0.0;
    double actor_lr_final = 0.0;
    double critic_pretrain_loss_first = 0.0;
    double critic_pretrain_loss_last = 0.0;
    double policy_objective = 0.0;  // mean clipped surrogate over all minibatches
    double value_loss = 0.0;
    double entropy = 0.0;          // mean per-valid-head entropy after the update
    double clip_grad_norm = 0.0;    // max over minibatches, clipped term only
    double entropy_grad_norm = 0.0; // max over minibatches, entropy term only
    std::vector<double> kl_trace;
};

nlohmann::json to_json(const TrainStats& s);

/// First-moment (SGD with momentum) or Adam state for one parameter group.
class Optimizer {
public:
    Optimizer(std::string kind, double momentum, bool critic_group);
    void step(Params& params, const Params& grads, double lr);

private:
    std::string kind_;
    double momentum_;
    bool critic_group_;
    bool initialized_ = false;
    std::int64_t t_ = 0;
    Params m_, v_;
};

class Trainer {
public:
    Trainer(const PpoConfig& cfg, std::uint64_t seed);

    /// Runs one PPO update over the complete transitions of `buffer`, which
    /// are then removed from it. On a non-finite loss the parameters are
    /// restored and stats.ok is false. Throws std::invalid_argument if the
    /// buffer has no complete transition.
    TrainStats update(std::vector<Transition>& buffer, Params& params);

    const PpoConfig& config() const { return cfg_; }

private:
    PpoConfig cfg_;
    std::mt19937_64 rng_;
    Optimizer actor_opt_;
    Optimizer critic_opt_;
};

}  // namespace accord::ppo

#endif  // ACCORD_PPO_HPP
