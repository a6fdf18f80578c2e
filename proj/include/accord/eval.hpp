// Penalty metrics and multi-seed comparison campaigns.
#ifndef ACCORD_EVAL_HPP
#define ACCORD_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "accord/config.hpp"
#include "accord/sim.hpp"

namespace accord {

/// Severity-weighted sum of negative events.
double penalty(double pp, double rlf, double cb, double w_pp, double w_rlf, double w_cb);
double penalty(const CampaignConfig& cfg, const sim::WindowCounts& counts);

/// Percent of the best (lowest) penalty among methods evaluated on one seed.
/// Returns nullopt when the best penalty is 0, in which case the seed carries
/// no relative information.
std::optional<std::vector<double>> relative_penalty(std::span<const double> penalties);

/// Name used for the initial-policy evaluation of the learned method.
inline constexpr const char* kUntrainedMethod = "accord_untrained";

struct RunRecord {
    std::uint64_t seed = 0;
    Deployment deployment = Deployment::Medium;
    std::string method;
    bool ok = true;
    std::string error;
    sim::WindowCounts counts;
    std::int64_t handovers = 0;
    double penalty = 0.0;
    std::size_t conflicts = 0;
    double reject_all_fraction = 0.0;
    double seconds = 0.0;  // wall-clock
};

nlohmann::json to_json(const RunRecord& r);

struct MethodRow {
    std::string method;
    int rank = 0;
    std::size_t seeds = 0;
    double mean_penalty = 0.0;
    double mean_relative = 0.0;  // percent
    double delta_to_best = 0.0;  // percentage points of mean_relative
    double mean_pp = 0.0, mean_rlf = 0.0, mean_cb = 0.0;
};

struct DeploymentReport {
    Deployment deployment = Deployment::Medium;
    std::vector<MethodRow> rows;  // ranked by mean penalty, table methods only
    std::optional<MethodRow> untrained;
    std::vector<std::uint64_t> seeds_used;
    std::vector<std::uint64_t> seeds_failed;
    std::vector<std::uint64_t> seeds_zero_best;  // excluded from relative penalties
    std::vector<std::string> warnings;

    // Behavioural flags; nullopt when a required method was not run.
    std::optional<bool> accord_not_worse_than_no_cm;
    std::optional<bool> accord_not_worse_than_untrained;
    std::optional<bool> prioritizations_differ;
};

struct CampaignReport {
    std::vector<DeploymentReport> deployments;
    std::vector<RunRecord> runs;
    bool all_flags_pass() const;
};

/// Aggregates raw run records (any order) into ranked per-deployment tables.
CampaignReport aggregate(const CampaignConfig& cfg, std::vector<RunRecord> runs);

struct CampaignOptions {
    int jobs = 1;
    std::optional<std::filesystem::path> out_dir;  // per-run artifacts when set
    std::ostream* log = nullptr;
};

/// Every seed x deployment x method run, the learned method trained first for
/// t_train and then evaluated with the frozen argmax policy.
CampaignReport run_campaign(const Config& cfg, const CampaignOptions& opts);

std::string format_report(const CampaignReport& report);
nlohmann::json summary_json(const CampaignReport& report);

}  // namespace accord

#endif  // ACCORD_EVAL_HPP
