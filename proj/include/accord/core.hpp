// Shared domain vocabulary: parameter kinds, value ladders, control decisions
// and conflict reports.
#ifndef ACCORD_CORE_HPP
#define ACCORD_CORE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace accord {

/// Maximum number of conflicting decisions handled per conflict (one per kind).
inline constexpr int kMaxConflictDecisions = 3;
/// Number of resolution actions per decision head.
inline constexpr int kNumActions = 4;

using CellId = int;

enum class ParamKind : std::uint8_t { None = 0, CIO = 1, TTT = 2, Hysteresis = 3 };

enum class XAppId : std::uint8_t { MRO = 0, MLB = 1 };

std::string_view to_string(ParamKind kind);
std::string_view to_string(XAppId id);
ParamKind param_kind_from_string(std::string_view s);
XAppId xapp_from_string(std::string_view s);

/// Legal discrete values of a parameter, strictly increasing.
/// TTT values are in milliseconds, CIO and hysteresis in dB.
std::span<const double> ladder(ParamKind kind);

/// Index of `value` on its ladder; throws std::invalid_argument when the value
/// is not a ladder member.
std::size_t ladder_index(ParamKind kind, double value);
bool on_ladder(ParamKind kind, double value);

/// Adjacent ladder value in `direction` (+1 / -1), saturating at the endpoints.
double ladder_step(ParamKind kind, double value, int direction);

/// Min-max scaling of a parameter value onto [0, 1]. None maps to 0.
double normalize_param(ParamKind kind, double value);

struct ControlDecision {
    XAppId issuer = XAppId::MRO;
    CellId target_cell = 0;
    ParamKind kind = ParamKind::None;
    double value = 0.0;
    double issued_at = 0.0;

    bool operator==(const ControlDecision&) const = default;
};

/// Throws std::invalid_argument if the decision breaks its invariants.
void validate(const ControlDecision& d);

struct ConflictReport {
    std::vector<ControlDecision> decisions;
    CellId target_cell = 0;
    double detected_at = 0.0;

    bool operator==(const ConflictReport&) const = default;
};

void validate(const ConflictReport& r);

void to_json(nlohmann::json& j, const ControlDecision& d);
void from_json(const nlohmann::json& j, ControlDecision& d);
void to_json(nlohmann::json& j, const ConflictReport& r);
void from_json(const nlohmann::json& j, ConflictReport& r);

}  // namespace accord

#endif  // ACCORD_CORE_HPP
