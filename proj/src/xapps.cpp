#include "accord/xapps.hpp"

#include <algorithm>
#include <unordered_map>

namespace accord::xapp {

MroObservation observe_mro(const sim::CellState& cell, const sim::CellWindowStats& w, double tick) {
    MroObservation o;
    o.cell = cell.id;
    o.ping_pong_rate = w.handovers > 0 ? static_cast<double>(w.ping_pongs) / w.handovers : 0.0;
    o.rlf_rate = w.rlfs > 0 ? w.rlfs / std::max(w.ue_seconds, tick) : 0.0;
    o.hysteresis_db = cell.hysteresis_db;
    o.ttt_ms = cell.ttt_ms;
    return o;
}

MlbObservation observe_mlb(const sim::CellState& cell, const sim::CellWindowStats& w) {
    return {cell.id, w.mean_load(), cell.cio_db, cell.neighbors};
}

std::vector<ControlDecision> mro_decide(const XAppConfig& cfg, std::span<const MroObservation> cells, double now) {
    std::vector<ControlDecision> out;
    for (const auto& c : cells) {
        int direction = 0;
        if (c.ping_pong_rate > cfg.pp_rate_high) {
            direction = +1;
        } else if (c.rlf_rate > cfg.rlf_rate_high) {
            direction = -1;
        }
        if (direction == 0) continue;
        out.push_back({XAppId::MRO, c.cell, ParamKind::Hysteresis,
                       ladder_step(ParamKind::Hysteresis, c.hysteresis_db, direction), now});
        out.push_back({XAppId::MRO, c.cell, ParamKind::TTT, ladder_step(ParamKind::TTT, c.ttt_ms, direction), now});
    }
    return out;
}

std::vector<ControlDecision> mlb_decide(const XAppConfig& cfg, std::span<const MlbObservation> cells, double now) {
    std::unordered_map<CellId, double> load;
    for (const auto& c : cells) load[c.cell] = c.load;

    std::vector<ControlDecision> out;
    for (const auto& c : cells) {
        const bool overloaded = c.load > cfg.load_high;
        const bool starved = c.load < cfg.load_low;
        if (!overloaded && !starved) continue;
        const bool relieve = std::any_of(c.neighbors.begin(), c.neighbors.end(), [&](CellId n) {
            auto it = load.find(n);
            if (it == load.end()) return false;
            const double other = it->second;
            if (overloaded) return other < cfg.load_low && c.load - other > cfg.neighbor_delta;
            return other > cfg.load_high && other - c.load > cfg.neighbor_delta;
        });
        if (!relieve) continue;
        const int direction = overloaded ? -1 : +1;
        out.push_back({XAppId::MLB, c.cell, ParamKind::CIO, ladder_step(ParamKind::CIO, c.cio_db, direction), now});
    }
    return out;
}

}  // namespace accord::xapp
