#include "accord/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace accord {

namespace {

constexpr std::array<double, 16> kTttLadder = {0,   40,  64,  80,  100, 128,  160,  256,
                                               320, 480, 512, 640, 1024, 1280, 2560, 5120};

template <std::size_t N>
constexpr std::array<double, N> linear_ladder(double lo, double step) {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = lo + step * static_cast<double>(i);
    return out;
}

constexpr auto kHysteresisLadder = linear_ladder<31>(0.0, 0.5);
constexpr auto kCioLadder = linear_ladder<49>(-24.0, 1.0);

constexpr double kLadderTol = 1e-9;

}  // namespace

std::string_view to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::None: return "none";
        case ParamKind::CIO: return "cio";
        case ParamKind::TTT: return "ttt";
        case ParamKind::Hysteresis: return "hysteresis";
    }
    return "?";
}

std::string_view to_string(XAppId id) {
    return id == XAppId::MRO ? "mro" : "mlb";
}

ParamKind param_kind_from_string(std::string_view s) {
    if (s == "none") return ParamKind::None;
    if (s == "cio") return ParamKind::CIO;
    if (s == "ttt") return ParamKind::TTT;
    if (s == "hysteresis") return ParamKind::Hysteresis;
    throw std::invalid_argument("unknown parameter kind: " + std::string(s));
}

XAppId xapp_from_string(std::string_view s) {
    if (s == "mro") return XAppId::MRO;
    if (s == "mlb") return XAppId::MLB;
    throw std::invalid_argument("unknown xApp: " + std::string(s));
}

std::span<const double> ladder(ParamKind kind) {
    switch (kind) {
        case ParamKind::CIO: return kCioLadder;
        case ParamKind::TTT: return kTttLadder;
        case ParamKind::Hysteresis: return kHysteresisLadder;
        case ParamKind::None: break;
    }
    throw std::invalid_argument("parameter kind 'none' has no ladder");
}

std::size_t ladder_index(ParamKind kind, double value) {
    auto values = ladder(kind);
    auto it = std::lower_bound(values.begin(), values.end(), value - kLadderTol);
    if (it == values.end() || std::abs(*it - value) > kLadderTol) {
        throw std::invalid_argument("value " + std::to_string(value) + " is not on the " +
                                    std::string(to_string(kind)) + " ladder");
    }
    return static_cast<std::size_t>(it - values.begin());
}

bool on_ladder(ParamKind kind, double value) {
    if (kind == ParamKind::None) return false;
    auto values = ladder(kind);
    auto it = std::lower_bound(values.begin(), values.end(), value - kLadderTol);
    return it != values.end() && std::abs(*it - value) <= kLadderTol;
}

double ladder_step(ParamKind kind, double value, int direction) {
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    auto values = ladder(kind);
    auto idx = static_cast<std::ptrdiff_t>(ladder_index(kind, value)) + direction;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
    return values[static_cast<std::size_t>(idx)];
}

double normalize_param(ParamKind kind, double value) {
    if (kind == ParamKind::None) return 0.0;
    auto values = ladder(kind);
    const double lo = values.front();
    const double hi = values.back();
    if (!(value >= lo - kLadderTol && value <= hi + kLadderTol)) {
        throw std::invalid_argument("value out of range for " + std::string(to_string(kind)));
    }
    return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

void validate(const ControlDecision& d) {
    if (d.kind == ParamKind::None) throw std::invalid_argument("decision kind must not be none");
    if (!on_ladder(d.kind, d.value)) throw std::invalid_argument("decision value is not on its ladder");
}

void validate(const ConflictReport& r) {
    if (r.decisions.empty() || r.decisions.size() > kMaxConflictDecisions) {
        throw std::invalid_argument("conflict report must hold 1..3 decisions");
    }
    std::set<ParamKind> kinds;
    std::set<XAppId> issuers;
    for (const auto& d : r.decisions) {
        validate(d);
        if (d.target_cell != r.target_cell) throw std::invalid_argument("decision targets another cell");
        if (!kinds.insert(d.kind).second) throw std::invalid_argument("duplicate parameter kind in report");
        issuers.insert(d.issuer);
    }
    if (issuers.size() < 2) throw std::invalid_argument("conflict report needs at least two issuers");
}

void to_json(nlohmann::json& j, const ControlDecision& d) {
    j = nlohmann::json{{"issuer", to_string(d.issuer)},
                       {"cell", d.target_cell},
                       {"kind", to_string(d.kind)},
                       {"value", d.value},
                       {"t", d.issued_at}};
}

void from_json(const nlohmann::json& j, ControlDecision& d) {
    d.issuer = xapp_from_string(j.at("issuer").get<std::string>());
    d.target_cell = j.at("cell").get<CellId>();
    d.kind = param_kind_from_string(j.at("kind").get<std::string>());
    d.value = j.at("value").get<double>();
    d.issued_at = j.at("t").get<double>();
}

void to_json(nlohmann::json& j, const ConflictReport& r) {
    j = nlohmann::json{{"cell", r.target_cell}, {"t", r.detected_at}, {"decisions", r.decisions}};
}

void from_json(const nlohmann::json& j, ConflictReport& r) {
    r.target_cell = j.at("cell").get<CellId>();
    r.detected_at = j.at("t").get<double>();
    r.decisions = j.at("decisions").get<std::vector<ControlDecision>>();
}

}  // namespace accord
