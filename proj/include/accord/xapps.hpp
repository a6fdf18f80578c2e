// Rule-based MRO and MLB xApps. Both are pure functions of the last closed
// KPI window and the current cell configuration.
#ifndef ACCORD_XAPPS_HPP
#define ACCORD_XAPPS_HPP

#include <span>
#include <vector>

#include "accord/config.hpp"
#include "accord/core.hpp"
#include "accord/sim.hpp"

namespace accord::xapp {

/// Per-cell KPIs over one control interval as seen by MRO.
struct MroObservation {
    CellId cell = 0;
    double ping_pong_rate = 0.0;  // ping-pongs per handover
    double rlf_rate = 0.0;        // RLFs per attached-UE-second
    double hysteresis_db = 0.0;
    double ttt_ms = 0.0;
};

/// Per-cell state as seen by MLB.
struct MlbObservation {
    CellId cell = 0;
    double load = 0.0;
    double cio_db = 0.0;
    std::vector<CellId> neighbors;
};

MroObservation observe_mro(const sim::CellState& cell, const sim::CellWindowStats& window, double tick);
MlbObservation observe_mlb(const sim::CellState& cell, const sim::CellWindowStats& window);

/// Ping-pong branch first: above pp_rate_high both hysteresis and TTT go up one
/// step; otherwise above rlf_rate_high both go down one step.
std::vector<ControlDecision> mro_decide(const XAppConfig& cfg, std::span<const MroObservation> cells, double now);

/// Overloaded cells with a sufficiently underloaded neighbour get their CIO
/// lowered one step; starved cells next to an overloaded neighbour get it
/// raised one step.
std::vector<ControlDecision> mlb_decide(const XAppConfig& cfg, std::span<const MlbObservation> cells, double now);

}  // namespace accord::xapp

#endif  // ACCORD_XAPPS_HPP
