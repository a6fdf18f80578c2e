// accord: simulate | train | evaluate | compare | inspect-policy
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "accord/agent.hpp"
#include "accord/checkpoint.hpp"
#include "accord/config.hpp"
#include "accord/eval.hpp"
#include "accord/runner.hpp"

namespace fs = std::filesystem;
using namespace accord;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

Config load(const Globals& g) {
    Config cfg = g.config.empty() ? Config{} : load_config(g.config);
    if (g.seed) cfg.sim.seed = *g.seed;
    validate(cfg);
    return cfg;
}

fs::path prepare_out(const Globals& g, const std::string& fallback, const Config& cfg) {
    fs::path dir = g.out.empty() ? fs::path("runs") / fallback : fs::path(g.out);
    fs::create_directories(dir);
    std::ofstream(dir / "config.ini") << dump_config(cfg);
    return dir;
}

nlohmann::json result_json(const RunResult& r, const Config& cfg) {
    nlohmann::json j = {{"method", agent::to_string(r.method)},
                        {"seed", r.seed},
                        {"deployment", to_string(r.deployment)},
                        {"pp", r.counts.ping_pong},
                        {"rlf", r.counts.rlf},
                        {"cb", r.counts.call_blockage},
                        {"handovers", r.handovers},
                        {"penalty", r.penalty},
                        {"conflicts", r.conflicts},
                        {"warmup", cfg.campaign.warmup}};
    if (!r.masks.empty()) j["reject_all_fraction"] = agent::policy_stats(r.masks, r.actions).reject_all_fraction;
    return j;
}

void write_series(const fs::path& path, const RunResult& r, const CampaignConfig& cc) {
    std::ofstream out(path);
    out << "t,pp,rlf,cb,penalty\n";
    char buf[160];
    for (const auto& s : r.per_second) {
        std::snprintf(buf, sizeof buf, "%.1f,%lld,%lld,%lld,%.4f\n", s.t, static_cast<long long>(s.ping_pong),
                      static_cast<long long>(s.rlf), static_cast<long long>(s.call_blockage),
                      penalty(static_cast<double>(s.ping_pong), static_cast<double>(s.rlf),
                              static_cast<double>(s.call_blockage), cc.w_pp, cc.w_rlf, cc.w_cb));
        out << buf;
    }
}

void print_result(const RunResult& r) {
    std::printf("%s seed %llu (%s): PP %lld  RLF %lld  CB %lld  HO %lld  penalty %.2f  conflicts %zu\n",
                std::string(agent::to_string(r.method)).c_str(), static_cast<unsigned long long>(r.seed),
                to_string(r.deployment).c_str(), static_cast<long long>(r.counts.ping_pong),
                static_cast<long long>(r.counts.rlf), static_cast<long long>(r.counts.call_blockage),
                static_cast<long long>(r.handovers), r.penalty, r.conflicts);
}

// Runs one evaluation-style simulation and writes trace, audit, series and result.
int single_run(const Config& cfg, const fs::path& dir, RunOptions ro) {
    std::ofstream trace(dir / "trace.csv");
    std::ofstream audit(dir / "audit.jsonl");
    ro.trace = &trace;
    ro.audit = &audit;
    const auto r = run(cfg, ro);
    write_series(dir / "series.csv", r, cfg.campaign);
    std::ofstream(dir / "result.json") << result_json(r, cfg).dump(2) << '\n';
    print_result(r);
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& method, const std::string& checkpoint,
                 std::optional<double> duration) {
    const Config cfg = load(g);
    const fs::path dir = prepare_out(g, "simulate", cfg);
    RunOptions ro;
    ro.method = agent::method_from_string(method);
    ro.duration = duration.value_or(cfg.sim.duration);
    ro.warmup = std::min(cfg.campaign.warmup, ro.duration);
    if (!checkpoint.empty()) ro.params = load_checkpoint(checkpoint);
    return single_run(cfg, dir, ro);
}

int cmd_evaluate(const Globals& g, const std::string& method, const std::string& checkpoint) {
    const Config cfg = load(g);
    const fs::path dir = prepare_out(g, "evaluate", cfg);
    RunOptions ro;
    ro.method = agent::method_from_string(method);
    ro.duration = cfg.campaign.t_eval;
    ro.warmup = cfg.campaign.warmup;
    if (!checkpoint.empty()) ro.params = load_checkpoint(checkpoint);
    return single_run(cfg, dir, ro);
}

int cmd_train(const Globals& g, const std::string& checkpoint) {
    const Config cfg = load(g);
    const fs::path dir = prepare_out(g, "train", cfg);
    fs::create_directories(dir / "checkpoints");
    std::ofstream trace(dir / "trace.csv");
    std::ofstream audit(dir / "audit.jsonl");
    std::ofstream stats(dir / "train_stats.jsonl");

    RunOptions ro;
    ro.method = agent::Method::Accord;
    ro.train = true;
    ro.duration = cfg.campaign.t_train;
    ro.warmup = cfg.campaign.warmup;
    ro.trace = &trace;
    ro.audit = &audit;
    if (!checkpoint.empty()) ro.params = load_checkpoint(checkpoint);
    bool failed = false;
    ro.on_update = [&](int k, const nn::NetParams<double>& p, const ppo::TrainStats& s) {
        auto j = ppo::to_json(s);
        j["update"] = k;
        stats << j.dump() << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "update_%03d.json", k);
        save_checkpoint(dir / "checkpoints" / name, p);
        std::printf("update %d: samples %zu epochs %d kl_last %.4g entropy %.4f%s\n", k, s.samples, s.epochs_run,
                    s.kl_trace.empty() ? 0.0 : s.kl_trace.back(), s.entropy, s.ok ? "" : " (aborted)");
        failed = failed || !s.ok;
    };
    const auto r = run(cfg, ro);
    save_checkpoint(dir / "policy.json", *r.final_params);
    std::ofstream(dir / "result.json") << result_json(r, cfg).dump(2) << '\n';
    print_result(r);
    return failed ? 1 : 0;
}

int cmd_compare(const Globals& g, std::optional<int> jobs) {
    Config cfg = load(g);
    if (jobs) cfg.campaign.jobs = *jobs;
    if (g.seed) cfg.campaign.seed_base = *g.seed;
    const fs::path dir = prepare_out(g, "compare", cfg);
    CampaignOptions opts;
    opts.jobs = cfg.campaign.jobs;
    opts.out_dir = dir;
    opts.log = &std::cerr;
    const auto report = run_campaign(cfg, opts);
    const std::string table = format_report(report);
    std::cout << table;
    std::ofstream(dir / "report.txt") << table;
    std::ofstream(dir / "summary.json") << summary_json(report).dump(2) << '\n';
    return report.all_flags_pass() ? 0 : 3;
}

int cmd_inspect(const Globals& g, const std::string& log_path, const std::string& checkpoint, double bin) {
    const Config cfg = load(g);
    const fs::path dir = prepare_out(g, "inspect", cfg);
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot read " + log_path);

    std::optional<nn::NetParams<double>> params;
    if (!checkpoint.empty()) params = load_checkpoint(checkpoint);

    std::vector<nn::Mask> masks;
    std::vector<std::array<int, nn::kSlots>> logged, replayed;
    std::ofstream penalty_out(dir / "penalty_over_time.csv");
    penalty_out << "t,pp,rlf,cb,penalty\n";
    std::map<long long, std::array<std::size_t, nn::kActions>> mix;
    const auto& cc = cfg.campaign;

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const double t = j.at("t").get<double>();
        const auto& k = j.at("counters");
        const auto pp = k.at("pp").get<long long>(), rlf = k.at("rlf").get<long long>(),
                   cb = k.at("cb").get<long long>();
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.1f,%lld,%lld,%lld,%.4f\n", t, pp, rlf, cb,
                      penalty(static_cast<double>(pp), static_cast<double>(rlf), static_cast<double>(cb), cc.w_pp,
                              cc.w_rlf, cc.w_cb));
        penalty_out << buf;

        nn::Mask mask{};
        std::array<int, nn::kSlots> acts{-1, -1, -1};
        const auto& a = j.at("actions");
        for (int s = 0; s < nn::kSlots; ++s) {
            if (a.at(s).is_null()) continue;
            mask[s] = true;
            const auto name = a.at(s).get<std::string>();
            for (int c = 0; c < nn::kActions; ++c) {
                if (agent::to_string(static_cast<agent::CRAction>(c)) == name) acts[s] = c;
            }
            ++mix[static_cast<long long>(t / bin)][acts[s]];
        }
        masks.push_back(mask);
        logged.push_back(acts);

        if (params && j.contains("state")) {
            nn::PolicyInput<double> st;
            const auto& js = j.at("state");
            const auto rows = js.at("slots").get<std::vector<double>>();
            for (int r = 0; r < nn::kSlots; ++r) {
                for (int c = 0; c < nn::kSlotFeatures; ++c) st.slots(r, c) = rows.at(r * nn::kSlotFeatures + c);
            }
            st.mask = js.at("mask").get<nn::Mask>();
            const auto gl = js.at("globals").get<std::vector<double>>();
            for (int c = 0; c < nn::kGlobalFeatures; ++c) st.globals(c) = gl.at(c);
            const auto out = nn::forward(*params, st, static_cast<nn::ForwardCache<double>*>(nullptr), false);
            std::array<int, nn::kSlots> best{-1, -1, -1};
            for (int s = 0; s < nn::kSlots; ++s) {
                if (!st.mask[s]) continue;
                best[s] = 0;
                for (int c = 1; c < nn::kActions; ++c) {
                    if (out.logits(s, c) > out.logits(s, best[s])) best[s] = c;
                }
            }
            replayed.push_back(best);
        }
    }
    if (masks.empty()) throw std::runtime_error("no conflict records in " + log_path);

    std::ofstream mix_out(dir / "action_mix.csv");
    mix_out << "t";
    for (int c = 0; c < nn::kActions; ++c) mix_out << ',' << agent::to_string(static_cast<agent::CRAction>(c));
    mix_out << '\n';
    for (const auto& [b, counts] : mix) {
        std::size_t total = 0;
        for (auto n : counts) total += n;
        mix_out << static_cast<double>(b) * bin;
        for (auto n : counts) mix_out << ',' << static_cast<double>(n) / static_cast<double>(total);
        mix_out << '\n';
    }

    auto describe = [&](const char* title, const agent::PolicyStats& s) {
        static const char* kinds[] = {"CIO", "TTT", "Hysteresis"};
        std::printf("%s: %zu conflicts, reject-all fraction %.3f\n", title, s.conflicts, s.reject_all_fraction);
        std::printf("  %-11s %16s %24s %11s %11s\n", "kind", "NO_MODIFICATION", "REJECTION_WITH_COOLDOWN",
                    "INCREASE_1", "DECREASE_1");
        nlohmann::json hist;
        for (int k = 0; k < nn::kSlots; ++k) {
            const auto& h = s.histogram[k];
            std::printf("  %-11s %16zu %24zu %11zu %11zu\n", kinds[k], h[0], h[1], h[2], h[3]);
            hist[kinds[k]] = h;
        }
        return nlohmann::json{{"conflicts", s.conflicts}, {"reject_all_fraction", s.reject_all_fraction},
                              {"histogram", hist}};
    };
    nlohmann::json summary;
    summary["logged"] = describe("logged actions", agent::policy_stats(masks, logged));
    if (!replayed.empty()) {
        summary["checkpoint_argmax"] = describe("checkpoint argmax on logged states", agent::policy_stats(masks, replayed));
    }
    std::ofstream(dir / "policy_stats.json") << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conflict-mitigation laboratory: simulator, xApps, learned and rule-based resolvers"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Scenario INI file (defaults apply when omitted)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the scenario seed (compare: first campaign seed)");
    app.add_option("--out", g.out, "Output directory");
    app.fallthrough();

    const std::vector<std::string> methods = {"no_cm", "prio_mro", "prio_mlb", "accord"};

    std::string method = "no_cm";
    std::string checkpoint;
    std::optional<double> duration;
    auto* sim = app.add_subcommand("simulate", "One run with a chosen conflict-management method");
    sim->add_option("--method", method, "no_cm | prio_mro | prio_mlb | accord")->check(CLI::IsMember(methods));
    sim->add_option("--checkpoint", checkpoint, "Policy checkpoint for accord")->check(CLI::ExistingFile);
    sim->add_option("--duration", duration, "Simulated seconds (default scenario.duration)")
        ->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "Online PPO training of the learned resolver");
    train->add_option("--checkpoint", checkpoint, "Start from this checkpoint")->check(CLI::ExistingFile);

    std::string eval_method = "accord";
    auto* evaluate = app.add_subcommand("evaluate", "Evaluation run with a frozen policy (argmax)");
    evaluate->add_option("--method", eval_method, "no_cm | prio_mro | prio_mlb | accord")
        ->check(CLI::IsMember(methods));
    evaluate->add_option("--checkpoint", checkpoint, "Policy checkpoint (initial policy if omitted)")
        ->check(CLI::ExistingFile);

    std::optional<int> jobs;
    auto* compare = app.add_subcommand("compare", "Multi-seed campaign over all methods");
    compare->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    std::string log_path;
    double bin = 50.0;
    auto* inspect = app.add_subcommand("inspect-policy", "Action histograms and plot-ready series from an audit log");
    inspect->add_option("--log", log_path, "audit.jsonl from an accord run")->required()->check(CLI::ExistingFile);
    inspect->add_option("--checkpoint", checkpoint, "Replay this policy on the logged states")
        ->check(CLI::ExistingFile);
    inspect->add_option("--bin", bin, "Action-mix bin width in seconds")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(g, method, checkpoint, duration);
        if (train->parsed()) return cmd_train(g, checkpoint);
        if (evaluate->parsed()) return cmd_evaluate(g, eval_method, checkpoint);
        if (compare->parsed()) return cmd_compare(g, jobs);
        if (inspect->parsed()) return cmd_inspect(g, log_path, checkpoint, bin);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
