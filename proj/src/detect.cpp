#include "accord/detect.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>

namespace accord {

namespace {

constexpr std::array<ParamKind, 3> kSlotOrder = {ParamKind::CIO, ParamKind::TTT, ParamKind::Hysteresis};

}  // namespace

DetectionResult detect(std::span<const ControlDecision> window, double detected_at) {
    std::map<CellId, std::vector<std::size_t>> by_cell;
    for (std::size_t i = 0; i < window.size(); ++i) by_cell[window[i].target_cell].push_back(i);

    // Per input index: 0 = pass through, 1 = in a report, 2 = superseded.
    std::vector<int> fate(window.size(), 0);
    DetectionResult out;

    for (const auto& [cell, idx] : by_cell) {
        std::set<XAppId> issuers;
        for (auto i : idx) issuers.insert(window[i].issuer);
        if (issuers.size() < 2) continue;

        std::array<std::optional<std::size_t>, 4> latest{};
        for (auto i : idx) {
            auto& slot = latest[static_cast<std::size_t>(window[i].kind)];
            if (!slot || window[i].issued_at >= window[*slot].issued_at) {
                if (slot) fate[*slot] = 2;
                slot = i;
            } else {
                fate[i] = 2;
            }
        }

        std::set<XAppId> survivors;
        for (auto k : kSlotOrder) {
            if (auto& s = latest[static_cast<std::size_t>(k)]) survivors.insert(window[*s].issuer);
        }
        if (survivors.size() < 2) continue;

        ConflictReport report;
        report.target_cell = cell;
        report.detected_at = detected_at;
        for (auto k : kSlotOrder) {
            if (auto& s = latest[static_cast<std::size_t>(k)]) {
                report.decisions.push_back(window[*s]);
                fate[*s] = 1;
            }
        }
        out.reports.push_back(std::move(report));
    }

    for (std::size_t i = 0; i < window.size(); ++i) {
        if (fate[i] == 0) out.passthrough.push_back(window[i]);
        if (fate[i] == 2) out.superseded.push_back(window[i]);
    }
    return out;
}

}  // namespace accord
