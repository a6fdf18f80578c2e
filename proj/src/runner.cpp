#include "accord/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "accord/detect.hpp"
#include "accord/eval.hpp"
#include "accord/xapps.hpp"

namespace accord {

namespace {

constexpr std::uint64_t kPolicySalt = 0x5bd1e995a3c4f2d1ULL;
constexpr std::uint64_t kSamplingSalt = 0x27d4eb2f165667c5ULL;
constexpr std::uint64_t kTrainerSalt = 0x85ebca77c2b2ae63ULL;

struct PendingConflict {
    agent::PendingReward reward;
    ppo::Transition transition;
    nlohmann::json audit;
};

nlohmann::json state_json(const nn::PolicyInput<double>& s) {
    std::vector<double> globals(s.globals.data(), s.globals.data() + s.globals.size());
    // SlotMatrix is column-major; store it row by row.
    std::vector<double> rows;
    for (int r = 0; r < nn::kSlots; ++r) {
        for (int c = 0; c < nn::kSlotFeatures; ++c) rows.push_back(s.slots(r, c));
    }
    return {{"slots", rows}, {"mask", s.mask}, {"globals", globals}};
}

void write_trace_row(std::ostream& out, const sim::World& w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", w.now());
    out << buf;
    for (const auto& c : w.cells()) {
        std::snprintf(buf, sizeof buf, ",%.6f", c.load);
        out << buf;
    }
    const auto& k = w.counters();
    out << ',' << k.ping_pong.size() << ',' << k.rlf.size() << ',' << k.call_blockage.size() << ','
        << k.handover.size() << '\n';
}

std::int64_t count_after(const std::vector<double>& times, double t) {
    return static_cast<std::int64_t>(times.end() - std::upper_bound(times.begin(), times.end(), t + 1e-9));
}

}  // namespace

nn::NetParams<double> initial_policy(std::uint64_t seed) {
    return nn::init_params<double>(nn::NetDims{}, seed ^ kPolicySalt);
}

void write_trace_header(std::ostream& out, std::size_t cells) {
    out << "t";
    for (std::size_t c = 0; c < cells; ++c) out << ",load_" << c;
    out << ",pp,rlf,cb,ho\n";
}

RunResult run(const Config& cfg, const RunOptions& opts) {
    const bool accord = opts.method == agent::Method::Accord;
    if (opts.train && !accord) throw std::invalid_argument("run: only the accord method can train");

    sim::World world = sim::World::build(cfg.sim);
    const std::uint64_t seed = cfg.sim.seed;
    nn::NetParams<double> params = accord ? (opts.params ? *opts.params : initial_policy(seed))
                                          : nn::NetParams<double>{};
    std::mt19937_64 sampling(seed ^ kSamplingSalt);
    std::optional<ppo::Trainer> trainer;
    if (opts.train) trainer.emplace(cfg.ppo, seed ^ kTrainerSalt);
    const agent::Mode mode = opts.train ? agent::Mode::Sample : agent::Mode::Argmax;

    agent::CooldownRegistry cooldowns(cfg.agent.cooldown);
    std::deque<PendingConflict> pending;
    std::vector<ppo::Transition> buffer;

    RunResult result;
    result.method = opts.method;
    result.seed = seed;
    result.deployment = cfg.sim.deployment;

    const double dt = cfg.sim.tick;
    const auto total_ticks = static_cast<std::int64_t>(std::llround(opts.duration / dt));
    const auto interval_ticks =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(cfg.xapps.control_interval / dt)));
    double next_update = cfg.ppo.rollout_seconds;
    int update_index = 0;

    if (opts.trace) write_trace_header(*opts.trace, world.cells().size());

    auto flush_audit = [&](nlohmann::json& rec) {
        if (opts.audit) *opts.audit << rec.dump() << '\n';
    };

    for (std::int64_t k = 1; k <= total_ticks; ++k) {
        world.step();
        if (opts.trace) write_trace_row(*opts.trace, world);
        if (k % interval_ticks != 0) continue;

        const double now = world.now();
        world.close_window();
        const auto& counters = world.counters();

        while (!pending.empty() && pending.front().reward.due <= now + 1e-9) {
            auto& p = pending.front();
            const double r = agent::observe_reward(cfg.agent, p.reward, counters, now);
            p.audit["reward"] = r;
            flush_audit(p.audit);
            if (opts.train) {
                p.transition.reward = r;
                p.transition.complete = true;
                buffer.push_back(std::move(p.transition));
            }
            pending.pop_front();
        }

        std::vector<xapp::MroObservation> mro_obs;
        std::vector<xapp::MlbObservation> mlb_obs;
        for (const auto& c : world.cells()) {
            mro_obs.push_back(xapp::observe_mro(c, world.last_window(c.id), dt));
            mlb_obs.push_back(xapp::observe_mlb(c, world.last_window(c.id)));
        }
        auto decisions = xapp::mro_decide(cfg.xapps, mro_obs, now);
        const auto mlb = xapp::mlb_decide(cfg.xapps, mlb_obs, now);
        decisions.insert(decisions.end(), mlb.begin(), mlb.end());
        decisions = cooldowns.filter(decisions, now);

        const auto detection = detect(decisions, now);
        for (const auto& d : detection.passthrough) world.apply(d);

        for (const auto& report : detection.reports) {
            agent::Resolution res;
            nn::PolicyInput<double> state;
            if (accord) {
                const auto& cell = world.cell(report.target_cell);
                state = agent::encode_report(report, cell, world.last_window(cell.id), world.user_kpis(cell.id));
                res = agent::resolve(report, state, params, mode, sampling, cooldowns, now);
            } else {
                res = agent::resolve_baseline(report, opts.method, cooldowns, now);
            }
            for (const auto& d : res.applied) world.apply(d);

            nn::Mask mask{};
            for (const auto& d : report.decisions) mask[agent::slot_of(d.kind)] = true;
            ++result.conflicts;
            if (now > opts.warmup + 1e-9) {
                result.masks.push_back(mask);
                result.actions.push_back(res.actions);
            }

            nlohmann::json actions = nlohmann::json::array();
            for (int a : res.actions) {
                actions.push_back(a < 0 ? nlohmann::json(nullptr)
                                        : nlohmann::json(agent::to_string(static_cast<agent::CRAction>(a))));
            }
            PendingConflict pc;
            pc.reward = agent::schedule_reward(cfg.agent, result.conflicts - 1, counters, now);
            pc.audit = {{"t", now},
                        {"cell", report.target_cell},
                        {"report", report},
                        {"actions", actions},
                        {"applied", res.applied},
                        {"rejected", res.rejected},
                        {"reward", nullptr},
                        {"counters",
                         {{"pp", counters.ping_pong.size()},
                          {"rlf", counters.rlf.size()},
                          {"cb", counters.call_blockage.size()},
                          {"ho", counters.handover.size()}}}};
            if (accord) {
                pc.audit["value"] = res.transition.value_est;
                pc.audit["logprob"] = res.transition.joint_logprob;
                pc.audit["state"] = state_json(state);
            }
            pc.transition = std::move(res.transition);
            pending.push_back(std::move(pc));
        }

        if (now > opts.warmup + 1e-9) {
            const auto c = sim::counts_between(counters, opts.warmup, now);
            result.per_second.push_back({now, c.ping_pong, c.rlf, c.call_blockage});
        }

        if (trainer && now >= next_update - 1e-9) {
            next_update += cfg.ppo.rollout_seconds;
            if (!buffer.empty()) {
                auto stats = trainer->update(buffer, params);
                if (opts.on_update) opts.on_update(update_index, params, stats);
                ++update_index;
                result.updates.push_back(std::move(stats));
            }
        }
    }

    for (auto& p : pending) flush_audit(p.audit);

    const double end = world.now();
    result.counts = sim::counts_between(world.counters(), opts.warmup, end);
    result.handovers = count_after(world.counters().handover, opts.warmup);
    result.penalty = penalty(cfg.campaign, result.counts);
    if (accord) result.final_params = std::move(params);
    return result;
}

}  // namespace accord
