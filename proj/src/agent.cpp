#include "accord/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace accord::agent {

std::string_view to_string(CRAction a) {
    switch (a) {
        case CRAction::NoModification: return "NO_MODIFICATION";
        case CRAction::RejectWithCooldown: return "REJECTION_WITH_COOLDOWN";
        case CRAction::Increase1: return "INCREASE_1";
        case CRAction::Decrease1: return "DECREASE_1";
    }
    return "?";
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::NoCm: return "no_cm";
        case Method::PrioMro: return "prio_mro";
        case Method::PrioMlb: return "prio_mlb";
        case Method::Accord: return "accord";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "no_cm") return Method::NoCm;
    if (s == "prio_mro") return Method::PrioMro;
    if (s == "prio_mlb") return Method::PrioMlb;
    if (s == "accord") return Method::Accord;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

int slot_of(ParamKind kind) {
    if (kind == ParamKind::None) throw std::invalid_argument("slot_of: kind None has no slot");
    return static_cast<int>(kind) - 1;
}

ParamKind kind_of_slot(int slot) {
    if (slot < 0 || slot >= nn::kSlots) throw std::out_of_range("kind_of_slot");
    return static_cast<ParamKind>(slot + 1);
}

void CooldownRegistry::add(XAppId issuer, CellId cell, double now) {
    auto& e = expiry_[{issuer, cell}];
    e = std::max(e, now + duration_);
}

bool CooldownRegistry::active(XAppId issuer, CellId cell, double now) const {
    auto it = expiry_.find({issuer, cell});
    return it != expiry_.end() && now < it->second - 1e-9;
}

std::optional<double> CooldownRegistry::expiry(XAppId issuer, CellId cell) const {
    auto it = expiry_.find({issuer, cell});
    if (it == expiry_.end()) return std::nullopt;
    return it->second;
}

void CooldownRegistry::purge(double now) {
    std::erase_if(expiry_, [&](const auto& kv) { return kv.second <= now + 1e-9; });
}

std::vector<ControlDecision> CooldownRegistry::filter(std::span<const ControlDecision> decisions, double now) {
    purge(now);
    std::vector<ControlDecision> out;
    for (const auto& d : decisions) {
        if (!active(d.issuer, d.target_cell, now)) out.push_back(d);
    }
    return out;
}

nn::PolicyInput<double> encode_report(const ConflictReport& report, const sim::CellState& cell,
                                      const sim::CellWindowStats& window, const sim::UserKpis& users) {
    nn::PolicyInput<double> in;
    for (int s = 0; s < nn::kSlots; ++s) in.slots(s, static_cast<int>(ParamKind::None)) = 1.0;
    for (const auto& d : report.decisions) {
        const int s = slot_of(d.kind);
        in.slots.row(s).setZero();
        in.slots(s, static_cast<int>(d.kind)) = 1.0;
        in.slots(s, nn::kTypeDims) = normalize_param(d.kind, d.value);
        in.mask[s] = true;
    }
    const auto k = sim::cell_kpis(window);
    in.globals << normalize_param(ParamKind::Hysteresis, cell.hysteresis_db), normalize_param(ParamKind::CIO, cell.cio_db),
        normalize_param(ParamKind::TTT, cell.ttt_ms), k.availability, k.ho_stability, k.throughput_norm,
        users.speed_norm, users.requested_bitrate_norm, users.satisfaction, users.connection_success,
        users.throughput_norm;
    return in;
}

Resolution apply_actions(const ConflictReport& report, const std::array<int, nn::kSlots>& actions,
                         CooldownRegistry& cooldowns, double now) {
    Resolution r;
    r.actions.fill(-1);
    for (const auto& d : report.decisions) {
        const int s = slot_of(d.kind);
        const int a = actions[s];
        if (a < 0 || a >= nn::kActions) throw std::invalid_argument("apply_actions: bad action for valid slot");
        r.actions[s] = a;
        ControlDecision out = d;
        switch (static_cast<CRAction>(a)) {
            case CRAction::NoModification: break;
            case CRAction::RejectWithCooldown:
                cooldowns.add(d.issuer, d.target_cell, now);
                r.rejected.push_back(d);
                continue;
            case CRAction::Increase1: out.value = ladder_step(d.kind, d.value, +1); break;
            case CRAction::Decrease1: out.value = ladder_step(d.kind, d.value, -1); break;
        }
        r.applied.push_back(out);
    }
    return r;
}

namespace {

int pick(const nn::ActionProbs<double>& p, Mode mode, std::mt19937_64& rng) {
    if (mode == Mode::Argmax) {
        int best = 0;
        for (int k = 1; k < nn::kActions; ++k) {
            if (p(k) > p(best)) best = k;
        }
        return best;
    }
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (int k = 0; k < nn::kActions; ++k) {
        acc += p(k);
        if (u < acc) return k;
    }
    // Rounding left u above the total mass: take the last action with mass.
    for (int k = nn::kActions - 1; k >= 0; --k) {
        if (p(k) > 0.0) return k;
    }
    return 0;
}

}  // namespace

Resolution resolve(const ConflictReport& report, const nn::PolicyInput<double>& state,
                   const nn::NetParams<double>& params, Mode mode, std::mt19937_64& rng,
                   CooldownRegistry& cooldowns, double now) {
    if (report.decisions.empty()) throw std::invalid_argument("resolve: empty report");
    const auto out = nn::forward(params, state, static_cast<nn::ForwardCache<double>*>(nullptr), true);
    std::array<int, nn::kSlots> actions{-1, -1, -1};
    for (int s = 0; s < nn::kSlots; ++s) {
        if (!state.mask[s]) continue;
        const auto p = nn::masked_softmax<double>(out.logits.row(s).transpose(), true);
        actions[s] = pick(p, mode, rng);
    }
    Resolution r = apply_actions(report, actions, cooldowns, now);
    r.transition.state = state;
    r.transition.actions = actions;
    for (auto& a : r.transition.actions) a = std::max(a, 0);
    r.transition.joint_logprob = nn::joint_log_prob(out, r.transition.actions);
    r.transition.value_est = out.value;
    return r;
}

Resolution resolve_baseline(const ConflictReport& report, Method method, CooldownRegistry& cooldowns, double now) {
    if (method == Method::Accord) throw std::invalid_argument("resolve_baseline: accord is not a baseline");
    std::array<int, nn::kSlots> actions{-1, -1, -1};
    for (const auto& d : report.decisions) {
        bool keep = true;
        if (method == Method::PrioMro) keep = d.issuer == XAppId::MRO;
        if (method == Method::PrioMlb) keep = d.issuer == XAppId::MLB;
        actions[slot_of(d.kind)] = static_cast<int>(keep ? CRAction::NoModification : CRAction::RejectWithCooldown);
    }
    return apply_actions(report, actions, cooldowns, now);
}

double normalized_count(std::int64_t count, double count_norm) {
    return std::min(static_cast<double>(count) / count_norm, 1.0);
}

double reward_from_counts(const AgentConfig& cfg, const sim::WindowCounts& before, const sim::WindowCounts& after) {
    const double n = cfg.count_norm;
    const double d_pp = normalized_count(after.ping_pong, n) - normalized_count(before.ping_pong, n);
    const double d_rlf = normalized_count(after.rlf, n) - normalized_count(before.rlf, n);
    const double d_cb = normalized_count(after.call_blockage, n) - normalized_count(before.call_blockage, n);
    return -(cfg.w_pp * d_pp + cfg.w_rlf * d_rlf + cfg.w_cb * d_cb) / (cfg.w_pp + cfg.w_rlf + cfg.w_cb);
}

PendingReward schedule_reward(const AgentConfig& cfg, std::size_t transition, const sim::EventCounters& counters,
                              double detected_at) {
    return {transition, sim::counters_in_window(counters, detected_at, cfg.t_meas), detected_at,
            detected_at + cfg.t_reward};
}

double observe_reward(const AgentConfig& cfg, const PendingReward& pending, const sim::EventCounters& counters,
                      double now) {
    if (now < pending.due - 1e-9) throw std::logic_error("observe_reward: reward window has not elapsed");
    return reward_from_counts(cfg, pending.at_detection, sim::counters_in_window(counters, pending.due, cfg.t_meas));
}

PolicyStats policy_stats(std::span<const nn::Mask> masks, std::span<const std::array<int, nn::kSlots>> actions) {
    if (masks.empty()) throw std::invalid_argument("policy_stats: no conflicts");
    if (masks.size() != actions.size()) throw std::invalid_argument("policy_stats: size mismatch");
    PolicyStats s;
    s.conflicts = masks.size();
    const int reject = static_cast<int>(CRAction::RejectWithCooldown);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        bool all_reject = true;
        for (int k = 0; k < nn::kSlots; ++k) {
            if (!masks[i][k]) continue;
            const int a = actions[i][k];
            if (a < 0 || a >= nn::kActions) throw std::invalid_argument("policy_stats: bad action");
            ++s.histogram[k][a];
            all_reject = all_reject && a == reject;
        }
        if (all_reject) ++s.reject_all;
    }
    s.reject_all_fraction = static_cast<double>(s.reject_all) / static_cast<double>(s.conflicts);
    return s;
}

}  // namespace accord::agent
