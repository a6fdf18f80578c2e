// One simulation run with a chosen conflict-management method: simulator
// ticks, xApps, cooldown filter, detector, resolver, delayed rewards and, when
// training, periodic PPO updates.
#ifndef ACCORD_RUNNER_HPP
#define ACCORD_RUNNER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "accord/agent.hpp"
#include "accord/config.hpp"
#include "accord/nn.hpp"
#include "accord/ppo.hpp"
#include "accord/sim.hpp"

namespace accord {

struct RunOptions {
    agent::Method method = agent::Method::NoCm;
    double duration = 500.0;
    double warmup = 200.0;
    bool train = false;  // accord only: sample actions and run PPO updates
    std::optional<nn::NetParams<double>> params;  // accord policy; initial policy if empty

    std::ostream* trace = nullptr;  // per-tick CSV
    std::ostream* audit = nullptr;  // per-conflict JSON lines
    std::function<void(int update, const nn::NetParams<double>&, const ppo::TrainStats&)> on_update;
};

struct SecondSample {
    double t = 0.0;
    std::int64_t ping_pong = 0;  // cumulative since the end of warm-up
    std::int64_t rlf = 0;
    std::int64_t call_blockage = 0;
};

struct RunResult {
    agent::Method method = agent::Method::NoCm;
    std::uint64_t seed = 0;
    Deployment deployment = Deployment::Medium;
    sim::WindowCounts counts;  // after warm-up
    std::int64_t handovers = 0;
    double penalty = 0.0;
    std::vector<SecondSample> per_second;

    std::size_t conflicts = 0;
    std::vector<nn::Mask> masks;  // one per resolved conflict
    std::vector<std::array<int, nn::kSlots>> actions;
    std::vector<ppo::TrainStats> updates;
    std::optional<nn::NetParams<double>> final_params;
};

/// Policy parameters drawn for a run seed.
nn::NetParams<double> initial_policy(std::uint64_t seed);

RunResult run(const Config& cfg, const RunOptions& opts);

/// Header row of the per-tick trace.
void write_trace_header(std::ostream& out, std::size_t cells);

}  // namespace accord

#endif  // ACCORD_RUNNER_HPP
