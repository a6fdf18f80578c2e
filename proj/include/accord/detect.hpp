// Conflict detection over one control window.
#ifndef ACCORD_DETECT_HPP
#define ACCORD_DETECT_HPP

#include <span>
#include <vector>

#include "accord/core.hpp"

namespace accord {

struct DetectionResult {
    std::vector<ConflictReport> reports;          // ordered by target cell
    std::vector<ControlDecision> passthrough;     // unconflicted, input order
    std::vector<ControlDecision> superseded;      // dropped by latest-wins per kind
};

/// Flags indirect conflicts: for every cell whose handover parameters are
/// touched by two or more distinct xApps in the window, the latest decision per
/// parameter kind is bundled into one report (decisions ordered CIO, TTT,
/// hysteresis). If latest-wins leaves a single issuer, the survivors pass
/// through instead. Ties in `issued_at` go to the later input element.
DetectionResult detect(std::span<const ControlDecision> window, double detected_at);

}  // namespace accord

#endif  // ACCORD_DETECT_HPP
