// Independent scalar reference implementations used by unit and acceptance
// tests. Written directly from the formulas, sharing no code with the library.
#ifndef ACCORD_TESTS_ORACLES_HPP
#define ACCORD_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "accord/core.hpp"
#include "accord/detect.hpp"

namespace oracle {

inline double clip(double ratio, double adv, double eps) {
    double clipped = ratio;
    if (clipped < 1.0 - eps) clipped = 1.0 - eps;
    if (clipped > 1.0 + eps) clipped = 1.0 + eps;
    const double a = ratio * adv;
    const double b = clipped * adv;
    return a < b ? a : b;
}

inline double approx_kl(const std::vector<double>& old_lp, const std::vector<double>& new_lp) {
    double s = 0.0;
    for (std::size_t i = 0; i < old_lp.size(); ++i) s += old_lp[i] - new_lp[i];
    return s / static_cast<double>(old_lp.size());
}

inline double huber(double y, double f, double delta) {
    const double e = std::fabs(y - f);
    if (e <= delta) return 0.5 * e * e;
    return delta * (e - 0.5 * delta);
}

inline double saturate(double count, double norm) {
    const double c = count / norm;
    return c > 1.0 ? 1.0 : c;
}

/// counts[x] = {before, after} for x in PP, RLF, CB.
inline double reward(const double before[3], const double after[3], const double w[3], double norm) {
    double num = 0.0, den = 0.0;
    for (int x = 0; x < 3; ++x) {
        num += w[x] * (saturate(after[x], norm) - saturate(before[x], norm));
        den += w[x];
    }
    return -num / den;
}

inline double penalty(double pp, double rlf, double cb) {
    return 0.05 * pp + 0.40 * rlf + 0.40 * cb;
}

inline std::vector<double> relative_penalty(const std::vector<double>& p) {
    double best = p[0];
    for (double v : p) best = v < best ? v : best;
    std::vector<double> out;
    for (double v : p) out.push_back(v / best * 100.0);
    return out;
}

/// Brute force: a decision is dropped when a same-cell, same-kind decision is
/// strictly later, or equally timed and later in the input. A cell reports when
/// its whole window has two issuers and its surviving decisions still do.
inline accord::DetectionResult detect(const std::vector<accord::ControlDecision>& w, double t) {
    using namespace accord;
    const std::size_t n = w.size();
    std::vector<bool> beaten(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || w[i].target_cell != w[j].target_cell || w[i].kind != w[j].kind) continue;
            if (w[j].issued_at > w[i].issued_at || (w[j].issued_at == w[i].issued_at && j > i)) beaten[i] = true;
        }
    }
    std::set<CellId> cells;
    for (const auto& d : w) cells.insert(d.target_cell);

    std::vector<int> fate(n, 0);
    DetectionResult out;
    for (CellId c : cells) {
        std::set<int> all_issuers, kept_issuers;
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i].target_cell != c) continue;
            all_issuers.insert(static_cast<int>(w[i].issuer));
            if (!beaten[i]) kept_issuers.insert(static_cast<int>(w[i].issuer));
        }
        if (all_issuers.size() < 2) continue;
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i].target_cell == c && beaten[i]) fate[i] = 2;
        }
        if (kept_issuers.size() < 2) continue;
        ConflictReport r;
        r.target_cell = c;
        r.detected_at = t;
        for (ParamKind k : {ParamKind::CIO, ParamKind::TTT, ParamKind::Hysteresis}) {
            for (std::size_t i = 0; i < n; ++i) {
                if (w[i].target_cell == c && w[i].kind == k && !beaten[i]) {
                    r.decisions.push_back(w[i]);
                    fate[i] = 1;
                }
            }
        }
        out.reports.push_back(r);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (fate[i] == 0) out.passthrough.push_back(w[i]);
        if (fate[i] == 2) out.superseded.push_back(w[i]);
    }
    return out;
}

/// Random window of up to `max_decisions` decisions on up to `max_cells` cells.
/// Issue times are drawn from a coarse grid so that ties occur.
inline std::vector<accord::ControlDecision> random_window(std::mt19937_64& rng, int max_decisions, int max_cells) {
    using namespace accord;
    std::uniform_int_distribution<int> count(0, max_decisions);
    std::uniform_int_distribution<int> cell(0, max_cells - 1);
    std::uniform_int_distribution<int> kind(1, 3);
    std::uniform_int_distribution<int> issuer(0, 1);
    std::uniform_int_distribution<int> tick(0, 4);
    std::vector<ControlDecision> w(static_cast<std::size_t>(count(rng)));
    for (auto& d : w) {
        d.issuer = static_cast<XAppId>(issuer(rng));
        d.target_cell = cell(rng);
        d.kind = static_cast<ParamKind>(kind(rng));
        const auto values = ladder(d.kind);
        std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
        d.value = values[pick(rng)];
        d.issued_at = 10.0 + 0.25 * tick(rng);
    }
    return w;
}

}  // namespace oracle

#endif  // ACCORD_TESTS_ORACLES_HPP
