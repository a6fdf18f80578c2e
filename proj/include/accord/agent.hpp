// Conflict-resolution agent: report encoding, policy and baseline resolvers,
// cooldown bookkeeping and delayed reward observation.
#ifndef ACCORD_AGENT_HPP
#define ACCORD_AGENT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "accord/config.hpp"
#include "accord/core.hpp"
#include "accord/nn.hpp"
#include "accord/ppo.hpp"
#include "accord/sim.hpp"

namespace accord::agent {

/// Per-head resolution actions; the numeric value is the logit index.
enum class CRAction : int { NoModification = 0, RejectWithCooldown = 1, Increase1 = 2, Decrease1 = 3 };

std::string_view to_string(CRAction a);

enum class Method { NoCm, PrioMro, PrioMlb, Accord };

std::string_view to_string(Method m);
/// Accepts no_cm, prio_mro, prio_mlb, accord; throws std::invalid_argument otherwise.
Method method_from_string(std::string_view s);

/// Slot of a parameter kind in the network input: CIO, TTT, hysteresis.
int slot_of(ParamKind kind);
ParamKind kind_of_slot(int slot);

class CooldownRegistry {
public:
    explicit CooldownRegistry(double duration) : duration_(duration) {}

    void add(XAppId issuer, CellId cell, double now);
    bool active(XAppId issuer, CellId cell, double now) const;
    std::optional<double> expiry(XAppId issuer, CellId cell) const;
    /// Drops entries whose expiry is at or before `now`.
    void purge(double now);
    /// Purges, then keeps only decisions whose (issuer, cell) pair is not cooling down.
    std::vector<ControlDecision> filter(std::span<const ControlDecision> decisions, double now);
    std::size_t size() const { return expiry_.size(); }
    double duration() const { return duration_; }

private:
    double duration_;
    std::map<std::pair<XAppId, CellId>, double> expiry_;
};

/// Network input for one report. `window` is the target cell's last closed KPI
/// window and `users` the aggregate of its attached UEs.
nn::PolicyInput<double> encode_report(const ConflictReport& report, const sim::CellState& cell,
                                      const sim::CellWindowStats& window, const sim::UserKpis& users);

enum class Mode { Sample, Argmax };

struct Resolution {
    std::vector<ControlDecision> applied;
    std::vector<ControlDecision> rejected;
    std::array<int, nn::kSlots> actions{-1, -1, -1};  // -1 for padded slots
    ppo::Transition transition;
};

/// Picks one action per valid head (sampled or argmax, ties to the lowest
/// index) and applies it to the report's decisions. Rejections register a
/// cooldown for (issuer, cell). Throws std::invalid_argument for an empty report.
Resolution resolve(const ConflictReport& report, const nn::PolicyInput<double>& state,
                   const nn::NetParams<double>& params, Mode mode, std::mt19937_64& rng,
                   CooldownRegistry& cooldowns, double now);

/// Applies already chosen per-slot actions; used by resolve and in tests.
Resolution apply_actions(const ConflictReport& report, const std::array<int, nn::kSlots>& actions,
                         CooldownRegistry& cooldowns, double now);

/// Rule-based resolution for no_cm, prio_mro and prio_mlb.
Resolution resolve_baseline(const ConflictReport& report, Method method, CooldownRegistry& cooldowns, double now);

/// Counts over a T_meas window normalized by C_norm and saturated at 1.
double normalized_count(std::int64_t count, double count_norm);

/// -(sum_x w_x * dC_x) / sum_x w_x from raw window counts at detection and at T_reward.
double reward_from_counts(const AgentConfig& cfg, const sim::WindowCounts& before, const sim::WindowCounts& after);

struct PendingReward {
    std::size_t transition = 0;  // index into the owner's transition store
    sim::WindowCounts at_detection;
    double detected_at = 0.0;
    double due = 0.0;
};

PendingReward schedule_reward(const AgentConfig& cfg, std::size_t transition, const sim::EventCounters& counters,
                              double detected_at);

/// Reward for a pending observation; requires now >= due (1e-9 tolerance),
/// otherwise throws std::logic_error.
double observe_reward(const AgentConfig& cfg, const PendingReward& pending, const sim::EventCounters& counters,
                      double now);

struct PolicyStats {
    std::size_t conflicts = 0;
    /// histogram[slot][action]: slot in CIO, TTT, hysteresis order.
    std::array<std::array<std::size_t, nn::kActions>, nn::kSlots> histogram{};
    std::size_t reject_all = 0;
    double reject_all_fraction = 0.0;
};

/// Throws std::invalid_argument when `masks` is empty or sizes differ.
PolicyStats policy_stats(std::span<const nn::Mask> masks, std::span<const std::array<int, nn::kSlots>> actions);

}  // namespace accord::agent

#endif  // ACCORD_AGENT_HPP
