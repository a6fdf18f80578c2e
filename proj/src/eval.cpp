#include "accord/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "accord/agent.hpp"
#include "accord/checkpoint.hpp"
#include "accord/runner.hpp"

namespace accord {

double penalty(double pp, double rlf, double cb, double w_pp, double w_rlf, double w_cb) {
    return w_pp * pp + w_rlf * rlf + w_cb * cb;
}

double penalty(const CampaignConfig& cfg, const sim::WindowCounts& c) {
    return penalty(static_cast<double>(c.ping_pong), static_cast<double>(c.rlf),
                   static_cast<double>(c.call_blockage), cfg.w_pp, cfg.w_rlf, cfg.w_cb);
}

std::optional<std::vector<double>> relative_penalty(std::span<const double> penalties) {
    if (penalties.empty()) throw std::invalid_argument("relative_penalty: no methods");
    const double best = *std::min_element(penalties.begin(), penalties.end());
    if (best <= 0.0) return std::nullopt;
    std::vector<double> out;
    out.reserve(penalties.size());
    for (double p : penalties) out.push_back(p / best * 100.0);
    return out;
}

nlohmann::json to_json(const RunRecord& r) {
    return {{"seed", r.seed},
            {"deployment", to_string(r.deployment)},
            {"method", r.method},
            {"ok", r.ok},
            {"error", r.error},
            {"pp", r.counts.ping_pong},
            {"rlf", r.counts.rlf},
            {"cb", r.counts.call_blockage},
            {"handovers", r.handovers},
            {"penalty", r.penalty},
            {"conflicts", r.conflicts},
            {"reject_all_fraction", r.reject_all_fraction},
            {"seconds", r.seconds}};
}

bool CampaignReport::all_flags_pass() const {
    for (const auto& d : deployments) {
        for (const auto& f : {d.accord_not_worse_than_no_cm, d.accord_not_worse_than_untrained,
                              d.prioritizations_differ}) {
            if (f && !*f) return false;
        }
    }
    return true;
}

namespace {

MethodRow summarize(const std::string& method, const std::vector<const RunRecord*>& recs,
                    const std::vector<double>& relatives) {
    MethodRow row;
    row.method = method;
    row.seeds = recs.size();
    for (const auto* r : recs) {
        row.mean_penalty += r->penalty;
        row.mean_pp += static_cast<double>(r->counts.ping_pong);
        row.mean_rlf += static_cast<double>(r->counts.rlf);
        row.mean_cb += static_cast<double>(r->counts.call_blockage);
    }
    if (!recs.empty()) {
        const double n = static_cast<double>(recs.size());
        row.mean_penalty /= n;
        row.mean_pp /= n;
        row.mean_rlf /= n;
        row.mean_cb /= n;
    }
    if (!relatives.empty()) {
        row.mean_relative = std::accumulate(relatives.begin(), relatives.end(), 0.0) /
                            static_cast<double>(relatives.size());
    }
    return row;
}

}  // namespace

CampaignReport aggregate(const CampaignConfig& cfg, std::vector<RunRecord> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.deployment, a.seed, a.method) < std::tie(b.deployment, b.seed, b.method);
    });
    CampaignReport report;
    report.runs = runs;

    const auto& methods = cfg.methods;

    std::map<Deployment, std::map<std::uint64_t, std::map<std::string, const RunRecord*>>> index;
    for (const auto& r : report.runs) index[r.deployment][r.seed][r.method] = &r;

    for (const auto& [dep, seeds] : index) {
        DeploymentReport d;
        d.deployment = dep;
        std::map<std::string, std::vector<const RunRecord*>> per_method;
        std::map<std::string, std::vector<double>> rel;
        std::vector<const RunRecord*> untrained;
        std::vector<double> untrained_rel;

        for (const auto& [seed, by_method] : seeds) {
            bool ok = true;
            for (const auto& m : methods) {
                auto it = by_method.find(m);
                if (it == by_method.end() || !it->second->ok) ok = false;
            }
            auto u = by_method.find(kUntrainedMethod);
            if (u != by_method.end() && !u->second->ok) ok = false;
            if (!ok) {
                d.seeds_failed.push_back(seed);
                d.warnings.push_back("seed " + std::to_string(seed) + " excluded: a run failed");
                continue;
            }
            d.seeds_used.push_back(seed);
            std::vector<double> p;
            for (const auto& m : methods) {
                per_method[m].push_back(by_method.at(m));
                p.push_back(by_method.at(m)->penalty);
            }
            if (u != by_method.end()) untrained.push_back(u->second);
            const auto r = relative_penalty(p);
            if (!r) {
                d.seeds_zero_best.push_back(seed);
                d.warnings.push_back("seed " + std::to_string(seed) +
                                     " excluded from relative penalty: best penalty is 0");
                continue;
            }
            for (std::size_t k = 0; k < methods.size(); ++k) rel[methods[k]].push_back((*r)[k]);
            if (u != by_method.end()) {
                untrained_rel.push_back(u->second->penalty / *std::min_element(p.begin(), p.end()) * 100.0);
            }
        }

        for (const auto& m : methods) d.rows.push_back(summarize(m, per_method[m], rel[m]));
        std::stable_sort(d.rows.begin(), d.rows.end(),
                         [](const MethodRow& a, const MethodRow& b) { return a.mean_penalty < b.mean_penalty; });
        double best_rel = std::numeric_limits<double>::infinity();
        for (const auto& r : d.rows) best_rel = std::min(best_rel, r.mean_relative);
        for (std::size_t k = 0; k < d.rows.size(); ++k) {
            d.rows[k].rank = static_cast<int>(k) + 1;
            d.rows[k].delta_to_best = d.rows[k].mean_relative - best_rel;
        }
        if (!untrained.empty()) {
            d.untrained = summarize(kUntrainedMethod, untrained, untrained_rel);
            d.untrained->delta_to_best = d.untrained->mean_relative - best_rel;
        }

        auto mean_of = [&](const std::string& m) -> std::optional<double> {
            for (const auto& r : d.rows) {
                if (r.method == m && r.seeds > 0) return r.mean_penalty;
            }
            return std::nullopt;
        };
        if (!d.seeds_used.empty()) {
            const auto acc = mean_of("accord");
            const auto nocm = mean_of("no_cm");
            const auto mro = mean_of("prio_mro");
            const auto mlb = mean_of("prio_mlb");
            if (acc && nocm) d.accord_not_worse_than_no_cm = *acc <= *nocm;
            if (acc && d.untrained) d.accord_not_worse_than_untrained = *acc <= d.untrained->mean_penalty;
            if (mro && mlb) {
                const double scale = std::max(std::abs(*mro), std::abs(*mlb));
                d.prioritizations_differ = scale > 0.0 && std::abs(*mro - *mlb) > 0.01 * scale;
            }
        } else {
            d.warnings.push_back("no usable seeds");
        }
        report.deployments.push_back(std::move(d));
    }
    return report;
}

namespace {

struct Task {
    Deployment deployment;
    std::uint64_t seed;
    std::string method;
};

std::filesystem::path run_dir(const std::filesystem::path& root, const Task& t) {
    return root / "runs" / to_string(t.deployment) / ("seed_" + std::to_string(t.seed)) / t.method;
}

RunRecord record_of(const Task& t, const RunResult& r) {
    RunRecord rec;
    rec.seed = t.seed;
    rec.deployment = t.deployment;
    rec.method = t.method;
    rec.counts = r.counts;
    rec.handovers = r.handovers;
    rec.penalty = r.penalty;
    rec.conflicts = r.conflicts;
    if (!r.masks.empty()) rec.reject_all_fraction = agent::policy_stats(r.masks, r.actions).reject_all_fraction;
    return rec;
}

void write_series(const std::filesystem::path& path, const RunResult& r, const CampaignConfig& cc) {
    std::ofstream out(path);
    out << "t,pp,rlf,cb,penalty\n";
    char buf[160];
    for (const auto& s : r.per_second) {
        const double p = penalty(static_cast<double>(s.ping_pong), static_cast<double>(s.rlf),
                                 static_cast<double>(s.call_blockage), cc.w_pp, cc.w_rlf, cc.w_cb);
        std::snprintf(buf, sizeof buf, "%.1f,%lld,%lld,%lld,%.4f\n", s.t, static_cast<long long>(s.ping_pong),
                      static_cast<long long>(s.rlf), static_cast<long long>(s.call_blockage), p);
        out << buf;
    }
}

RunRecord execute(const Config& base, const Task& task, const CampaignOptions& opts) {
    Config cfg = base;
    cfg.sim.seed = task.seed;
    cfg.sim.deployment = task.deployment;
    const auto& cc = cfg.campaign;
    const auto start = std::chrono::steady_clock::now();

    std::optional<std::filesystem::path> dir;
    if (opts.out_dir) {
        dir = run_dir(*opts.out_dir, task);
        std::filesystem::create_directories(*dir);
    }

    RunOptions ro;
    ro.duration = cc.t_eval;
    ro.warmup = cc.warmup;
    if (task.method == kUntrainedMethod) {
        ro.method = agent::Method::Accord;
        ro.params = initial_policy(task.seed);
    } else {
        ro.method = agent::method_from_string(task.method);
    }

    std::vector<ppo::TrainStats> train_stats;
    if (task.method == "accord") {
        RunOptions tr;
        tr.method = agent::Method::Accord;
        tr.train = true;
        tr.duration = cc.t_train;
        tr.warmup = cc.warmup;
        std::ofstream stats_out;
        if (dir) stats_out.open(*dir / "train_stats.jsonl");
        tr.on_update = [&](int, const nn::NetParams<double>&, const ppo::TrainStats& s) {
            if (stats_out) stats_out << ppo::to_json(s).dump() << '\n';
        };
        auto trained = run(cfg, tr);
        for (const auto& s : trained.updates) {
            if (!s.ok) throw std::runtime_error("training update failed: " + s.error);
        }
        ro.params = std::move(trained.final_params);
        if (dir) save_checkpoint(*dir / "policy.json", *ro.params);
    }

    std::ofstream audit;
    if (dir) {
        audit.open(*dir / "audit.jsonl");
        ro.audit = &audit;
    }
    const auto result = run(cfg, ro);
    RunRecord rec = record_of(task, result);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (dir) {
        write_series(*dir / "series.csv", result, cc);
        std::ofstream(*dir / "result.json") << to_json(rec).dump(2) << '\n';
    }
    return rec;
}

}  // namespace

CampaignReport run_campaign(const Config& cfg, const CampaignOptions& opts) {
    const auto& cc = cfg.campaign;
    if (cc.methods.empty()) throw std::invalid_argument("run_campaign: no methods");
    if (cc.seeds < 1) throw std::invalid_argument("run_campaign: seeds must be >= 1");
    const bool has_accord = std::find(cc.methods.begin(), cc.methods.end(), "accord") != cc.methods.end();

    // Longest tasks first so parallel workers finish together.
    std::vector<Task> tasks;
    for (auto dep : cc.deployments) {
        for (int i = 0; i < cc.seeds; ++i) {
            const std::uint64_t seed = cc.seed_base + static_cast<std::uint64_t>(i);
            if (has_accord) tasks.push_back({dep, seed, "accord"});
        }
    }
    for (auto dep : cc.deployments) {
        for (int i = 0; i < cc.seeds; ++i) {
            const std::uint64_t seed = cc.seed_base + static_cast<std::uint64_t>(i);
            for (const auto& m : cc.methods) {
                if (m != "accord") tasks.push_back({dep, seed, m});
            }
            if (has_accord && cc.evaluate_untrained) tasks.push_back({dep, seed, kUntrainedMethod});
        }
    }

    std::vector<RunRecord> records(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto log = [&](const std::string& line) {
        if (!opts.log) return;
        std::lock_guard lock(log_mutex);
        *opts.log << line << std::endl;
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            const auto& t = tasks[k];
            try {
                records[k] = execute(cfg, t, opts);
                char buf[200];
                std::snprintf(buf, sizeof buf, "[%zu/%zu] %s seed %llu %s: penalty %.2f (%.1f s)", k + 1,
                              tasks.size(), to_string(t.deployment).c_str(), static_cast<unsigned long long>(t.seed),
                              t.method.c_str(), records[k].penalty, records[k].seconds);
                log(buf);
            } catch (const std::exception& e) {
                records[k].seed = t.seed;
                records[k].deployment = t.deployment;
                records[k].method = t.method;
                records[k].ok = false;
                records[k].error = e.what();
                log("run failed: " + to_string(t.deployment) + " seed " + std::to_string(t.seed) + " " + t.method +
                    ": " + e.what());
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    return aggregate(cc, std::move(records));
}

std::string format_report(const CampaignReport& report) {
    std::ostringstream out;
    char buf[256];
    auto row_line = [&](const MethodRow& r, const std::string& rank) {
        std::snprintf(buf, sizeof buf, "%-5s %-18s %12.2f %13.1f%% %+12.1f %9.1f %9.1f %9.1f\n", rank.c_str(),
                      r.method.c_str(), r.mean_penalty, r.mean_relative, r.delta_to_best, r.mean_pp, r.mean_rlf,
                      r.mean_cb);
        out << buf;
    };
    auto flag = [](const std::optional<bool>& f) { return !f ? "n/a" : (*f ? "PASS" : "FAIL"); };

    for (const auto& d : report.deployments) {
        out << "Deployment: " << to_string(d.deployment) << " (" << d.seeds_used.size() << " seeds";
        if (!d.seeds_failed.empty()) out << ", " << d.seeds_failed.size() << " failed";
        out << ")\n";
        std::snprintf(buf, sizeof buf, "%-5s %-18s %12s %14s %12s %9s %9s %9s\n", "Rank", "Method", "Avg penalty",
                      "Avg rel. pen.", "Delta [pp]", "PP", "RLF", "CB");
        out << buf;
        for (const auto& r : d.rows) row_line(r, std::to_string(r.rank));
        if (d.untrained) row_line(*d.untrained, "-");
        for (const auto& w : d.warnings) out << "warning: " << w << '\n';
        out << "flag accord <= no_cm:        " << flag(d.accord_not_worse_than_no_cm) << '\n';
        out << "flag accord <= untrained:    " << flag(d.accord_not_worse_than_untrained) << '\n';
        out << "flag prio_mro != prio_mlb:   " << flag(d.prioritizations_differ) << "\n\n";
    }
    return out.str();
}

nlohmann::json summary_json(const CampaignReport& report) {
    auto row_json = [](const MethodRow& r) {
        return nlohmann::json{{"method", r.method},         {"rank", r.rank},
                              {"seeds", r.seeds},           {"mean_penalty", r.mean_penalty},
                              {"mean_relative", r.mean_relative}, {"delta_to_best", r.delta_to_best},
                              {"mean_pp", r.mean_pp},       {"mean_rlf", r.mean_rlf},
                              {"mean_cb", r.mean_cb}};
    };
    auto flag = [](const std::optional<bool>& f) { return f ? nlohmann::json(*f) : nlohmann::json(nullptr); };
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& d : report.deployments) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : d.rows) rows.push_back(row_json(r));
        deps.push_back({{"deployment", to_string(d.deployment)},
                        {"rows", rows},
                        {"untrained", d.untrained ? row_json(*d.untrained) : nlohmann::json(nullptr)},
                        {"seeds_used", d.seeds_used},
                        {"seeds_failed", d.seeds_failed},
                        {"seeds_zero_best", d.seeds_zero_best},
                        {"warnings", d.warnings},
                        {"flags",
                         {{"accord_not_worse_than_no_cm", flag(d.accord_not_worse_than_no_cm)},
                          {"accord_not_worse_than_untrained", flag(d.accord_not_worse_than_untrained)},
                          {"prioritizations_differ", flag(d.prioritizations_differ)}}}});
    }
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.runs) runs.push_back(to_json(r));
    return {{"deployments", deps}, {"runs", runs}, {"all_flags_pass", report.all_flags_pass()}};
}

}  // namespace accord
