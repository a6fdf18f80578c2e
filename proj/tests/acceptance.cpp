// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "accord/agent.hpp"
#include "accord/config.hpp"
#include "accord/detect.hpp"
#include "accord/eval.hpp"
#include "accord/nn.hpp"
#include "accord/ppo.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "ppo_fixtures.hpp"

namespace fs = std::filesystem;
using namespace accord;

namespace {

constexpr double kFormulaTol = 1e-12;
constexpr double kFormulaSeconds = 1.0;
constexpr int kFormulaSamples = 1000;
constexpr std::int64_t kMacBound = 3'232'332;
constexpr int kMaxWidth = 519;
constexpr int kDepth = 4;
constexpr int kGradNets = 7;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 30.0;
constexpr double kSumTol = 1e-9;
constexpr double kSimulateSeconds = 300.0;
constexpr int kDetectWindows = 500;
constexpr int kDetectMaxDecisions = 20;
constexpr int kDetectMaxCells = 5;
constexpr int kLatencyCalls = 10'000;
constexpr double kLatencyMs = 1.0;
constexpr double kCampaignSeconds = 1800.0;
constexpr int kCampaignJobs = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
int only = 0;  // 0 runs every criterion

bool selected(int id) { return only == 0 || only == id; }

void report(int id, bool pass, const std::string& name, const std::string& detail) {
    if (!selected(id)) return;
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void formula_oracles() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> pos(0.0, 3.0);
    std::uniform_real_distribution<double> w(0.0, 2.0);
    std::uniform_int_distribution<int> count(0, 12);
    double worst[6] = {};
    auto track = [&](int k, double a, double b) { worst[k] = std::max(worst[k], std::abs(a - b)); };

    for (int n = 0; n < kFormulaSamples; ++n) {
        const double ratio = pos(rng), adv = u(rng), eps = 0.3 * std::abs(u(rng)) / 3.0;
        track(0, ppo::clip_objective(ratio, adv, eps), oracle::clip(ratio, adv, eps));

        std::vector<double> lo(1 + n % 64), ln(lo.size());
        for (std::size_t i = 0; i < lo.size(); ++i) lo[i] = u(rng) - 3.0, ln[i] = u(rng) - 3.0;
        track(1, ppo::approx_kl(lo, ln), oracle::approx_kl(lo, ln));

        const double y = u(rng), f = u(rng), delta = pos(rng) + 0.01;
        track(2, ppo::huber(y, f, delta), oracle::huber(y, f, delta));

        AgentConfig ac;
        ac.w_pp = w(rng);
        ac.w_rlf = w(rng);
        ac.w_cb = w(rng) + 0.01;
        ac.count_norm = 1.0 + count(rng);
        const sim::WindowCounts b{count(rng), count(rng), count(rng)}, a{count(rng), count(rng), count(rng)};
        const double before[3] = {double(b.ping_pong), double(b.rlf), double(b.call_blockage)};
        const double after[3] = {double(a.ping_pong), double(a.rlf), double(a.call_blockage)};
        const double ws[3] = {ac.w_pp, ac.w_rlf, ac.w_cb};
        track(3, agent::reward_from_counts(ac, b, a), oracle::reward(before, after, ws, ac.count_norm));

        const double pp = 50.0 * pos(rng), rlf = 10.0 * pos(rng), cb = 10.0 * pos(rng);
        track(4, penalty(pp, rlf, cb, 0.05, 0.40, 0.40), oracle::penalty(pp, rlf, cb));

        std::vector<double> pen(2 + n % 5);
        for (auto& v : pen) v = 0.1 + 100.0 * pos(rng);
        const auto got = *relative_penalty(pen);
        const auto want = oracle::relative_penalty(pen);
        for (std::size_t i = 0; i < pen.size(); ++i) track(5, got[i], want[i]);
    }
    const double elapsed = seconds_since(t0);
    const double max_err = *std::max_element(std::begin(worst), std::end(worst));
    report(1, max_err <= kFormulaTol && elapsed < kFormulaSeconds, "formula oracles",
           fmt("max abs error clip %.1e kl %.1e huber %.1e reward %.1e penalty %.1e relative %.1e "
               "(tol %.0e), %d inputs each, %.3f s (limit %.0f s)",
               worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], kFormulaTol, kFormulaSamples, elapsed,
               kFormulaSeconds));
}

void complexity_anchor() {
    const nn::NetDims d;
    const auto mac = nn::mac_bound(nn::kSlots, d.inference_depth(), d.max_width());
    const bool pass = mac == kMacBound && d.max_width() == kMaxWidth && d.inference_depth() == kDepth;
    report(2, pass, "complexity anchor",
           fmt("mac_bound = %lld (want %lld), d = %d (want %d), L = %d (want %d)", static_cast<long long>(mac),
               static_cast<long long>(kMacBound), d.max_width(), kMaxWidth, d.inference_depth(), kDepth));
}

void gradient_check() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string where;
    std::int64_t checked = 0;
    for (int k = 0; k < kGradNets; ++k) {
        // Cycles through every nonempty mask so pooling over 1, 2 and 3 slots is covered.
        const auto r = gradcheck::check(gradcheck::make_problem(900 + k, gradcheck::mask_from_bits(1 + k % 7)),
                                        kGradStep);
        checked += r.checked;
        if (r.max_rel_error >= worst) worst = r.max_rel_error, where = r.worst_tensor;
    }
    const double elapsed = seconds_since(t0);
    report(3, worst < kGradTol && elapsed < kGradSeconds, "gradient correctness",
           fmt("%d nets, %lld parameters, max relative error %.2e at %s (tol %.0e), %.2f s (limit %.0f s)",
               kGradNets, static_cast<long long>(checked), worst, where.c_str(), kGradTol, elapsed, kGradSeconds));
}

void masking_contract() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> g(0.0, 3.0);
    bool zero_prob = true, zero_grad = true, same_grad = true;
    double worst_sum = 0.0;
    int patterns = 0;
    for (int bits = 1; bits < 8; ++bits, ++patterns) {
        const nn::Mask mask = gradcheck::mask_from_bits(bits);
        auto prob = gradcheck::make_problem(500 + bits, mask);
        for (int trial = 0; trial < 20; ++trial) {
            nn::Logits<double> logits;
            for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
            for (int s = 0; s < nn::kSlots; ++s) {
                const auto p = nn::masked_softmax<double>(logits.row(s), mask[s]);
                if (!mask[s]) {
                    zero_prob = zero_prob && (p.array() == 0.0).all();
                } else {
                    worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
                }
            }
        }
        // Probabilities from the network itself, where masked heads emit the sentinel logit.
        const auto out = nn::forward(prob.params, prob.input);
        for (int s = 0; s < nn::kSlots; ++s) {
            const auto p = nn::masked_softmax<double>(out.logits.row(s), mask[s]);
            if (!mask[s]) zero_prob = zero_prob && (p.array() == 0.0).all();
            else worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
        }

        nn::ForwardCache<double> cache;
        nn::forward(prob.params, prob.input, &cache);
        auto with_noise = nn::NetParams<double>::zeros(prob.params.dims);
        nn::backward(prob.params, prob.input, cache, prob.coeffs, prob.value_coeff, with_noise);
        nn::Logits<double> clean = prob.coeffs;
        for (int s = 0; s < nn::kSlots; ++s) {
            if (!mask[s]) clean.row(s).setZero();
        }
        auto without = nn::NetParams<double>::zeros(prob.params.dims);
        nn::backward(prob.params, prob.input, cache, clean, prob.value_coeff, without);
        for (int s = 0; s < nn::kSlots; ++s) {
            if (mask[s]) continue;
            zero_grad = zero_grad && (with_noise.head1[s].weight.array() == 0.0).all() &&
                        (with_noise.head1[s].bias.array() == 0.0).all() &&
                        (with_noise.head2[s].weight.array() == 0.0).all() &&
                        (with_noise.head2[s].bias.array() == 0.0).all();
        }
        std::vector<const double*> a, b;
        std::vector<Eigen::Index> sizes;
        with_noise.for_each([&](std::string_view, const auto& t) { a.push_back(t.data()), sizes.push_back(t.size()); });
        without.for_each([&](std::string_view, const auto& t) { b.push_back(t.data()); });
        for (std::size_t k = 0; k < a.size(); ++k) {
            same_grad = same_grad && std::equal(a[k], a[k] + sizes[k], b[k]);
        }
    }
    const bool pass = zero_prob && worst_sum <= kSumTol && zero_grad && same_grad;
    report(4, pass, "masking contract",
           fmt("%d nonempty masks: invalid prob exactly 0 %s, max |sum-1| %.1e (tol %.0e), invalid head "
               "grads zero %s, masked upstream grads ignored %s",
               patterns, zero_prob ? "yes" : "no", worst_sum, kSumTol, zero_grad ? "yes" : "no",
               same_grad ? "yes" : "no"));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(const fs::path& work) {
    const fs::path config = fs::path(ACCORD_SOURCE_DIR) / "configs" / "desk.ini";
    int status[2] = {};
    for (int k = 0; k < 2; ++k) {
        const fs::path out = work / ("simulate_" + std::to_string(k));
        fs::remove_all(out);
        const std::string cmd = fmt("\"%s\" --config \"%s\" --seed 3 --out \"%s\" simulate --method accord "
                                    "--duration %.0f > \"%s\"",
                                    ACCORD_CLI_PATH, config.c_str(), out.c_str(), kSimulateSeconds,
                                    (work / ("simulate_" + std::to_string(k) + ".log")).c_str());
        status[k] = std::system(cmd.c_str());
    }
    const auto t0 = slurp(work / "simulate_0" / "trace.csv"), t1 = slurp(work / "simulate_1" / "trace.csv");
    const auto a0 = slurp(work / "simulate_0" / "audit.jsonl"), a1 = slurp(work / "simulate_1" / "audit.jsonl");
    const bool pass = status[0] == 0 && status[1] == 0 && !t0.empty() && !a0.empty() && t0 == t1 && a0 == a1;
    report(5, pass, "determinism",
           fmt("two simulate runs (seed 3, %.0f s): exit %d/%d, trace %zu bytes %s, audit %zu bytes %s",
               kSimulateSeconds, status[0], status[1], t0.size(), t0 == t1 ? "identical" : "DIFFER", a0.size(),
               a0 == a1 ? "identical" : "DIFFER"));
}

void detector_oracle() {
    std::mt19937_64 rng(606);
    int mismatches = 0, reports = 0;
    for (int n = 0; n < kDetectWindows; ++n) {
        const auto w = oracle::random_window(rng, kDetectMaxDecisions, kDetectMaxCells);
        const auto got = detect(w, 11.0);
        const auto want = oracle::detect(w, 11.0);
        reports += static_cast<int>(got.reports.size());
        if (got.reports != want.reports || got.passthrough != want.passthrough || got.superseded != want.superseded) {
            ++mismatches;
        }
    }
    report(6, mismatches == 0, "detector oracle",
           fmt("%d windows (<= %d decisions, <= %d cells), %d reports, %d mismatches", kDetectWindows,
               kDetectMaxDecisions, kDetectMaxCells, reports, mismatches));
}

void inference_latency() {
    const nn::NetDims d;
    const auto params = nn::init_params<double>(d, 7);
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<nn::PolicyInput<double>> inputs(64);
    for (auto& in : inputs) {
        in.mask = {true, true, true};
        for (int s = 0; s < nn::kSlots; ++s) {
            in.slots(s, 1 + s) = 1.0;
            in.slots(s, nn::kTypeDims) = unit(rng);
        }
        for (int g = 0; g < nn::kGlobalFeatures; ++g) in.globals(g) = unit(rng);
    }
    nn::ForwardCache<double>* no_cache = nullptr;
    double sink = 0.0;
    for (int k = 0; k < 100; ++k) sink += nn::forward(params, inputs[k % inputs.size()], no_cache, false).logits(0, 0);
    const auto t0 = Clock::now();
    for (int k = 0; k < kLatencyCalls; ++k) {
        sink += nn::forward(params, inputs[k % inputs.size()], no_cache, false).logits(0, 0);
    }
    const double mean_ms = 1e3 * seconds_since(t0) / kLatencyCalls;
    report(7, std::isfinite(sink) && mean_ms < kLatencyMs, "inference latency",
           fmt("mean forward %.4f ms over %d calls, 3 valid slots (limit %.1f ms)", mean_ms, kLatencyCalls,
               kLatencyMs));
}

const DeploymentReport* medium_report(const CampaignReport& rep) {
    for (const auto& d : rep.deployments) {
        if (d.deployment == Deployment::Medium) return &d;
    }
    return nullptr;
}

double mean_penalty(const DeploymentReport& d, const std::string& method) {
    for (const auto& r : d.rows) {
        if (r.method == method) return r.mean_penalty;
    }
    return std::nan("");
}

void desk_campaign(const fs::path& work) {
    const Config cfg = load_config(fs::path(ACCORD_SOURCE_DIR) / "configs" / "desk.ini");
    CampaignOptions opts;
    opts.jobs = kCampaignJobs;
    opts.out_dir = work / "desk_campaign";
    fs::remove_all(*opts.out_dir);
    const auto t0 = Clock::now();
    const auto rep = run_campaign(cfg, opts);
    const double elapsed = seconds_since(t0);
    std::ofstream(work / "desk_campaign" / "report.txt") << format_report(rep);
    std::ofstream(work / "desk_campaign" / "summary.json") << summary_json(rep).dump(2) << '\n';

    const auto* d = medium_report(rep);
    const bool shape = d && cfg.campaign.seeds == 5 && cfg.campaign.t_train == 2000.0 &&
                       cfg.campaign.t_eval == 500.0 && cfg.campaign.warmup == 200.0 && d->seeds_failed.empty();
    const double acc = d ? mean_penalty(*d, "accord") : std::nan("");
    const double nocm = d ? mean_penalty(*d, "no_cm") : std::nan("");
    const double untrained = d && d->untrained ? d->untrained->mean_penalty : std::nan("");
    const bool a = shape && d->accord_not_worse_than_no_cm.value_or(false);
    const bool b = shape && d->accord_not_worse_than_untrained.value_or(false);
    report(8, a && b && elapsed < kCampaignSeconds, "desk-scale behaviour",
           fmt("(a) accord %.2f <= no_cm %.2f %s, (b) accord %.2f <= untrained %.2f %s, %d seeds, %.0f s at "
               "--jobs %d (limit %.0f s)",
               acc, nocm, a ? "ok" : "VIOLATED", acc, untrained, b ? "ok" : "VIOLATED",
               d ? static_cast<int>(d->seeds_used.size()) : 0, elapsed, kCampaignJobs, kCampaignSeconds));

    const double mro = d ? mean_penalty(*d, "prio_mro") : std::nan("");
    const double mlb = d ? mean_penalty(*d, "prio_mlb") : std::nan("");
    const bool differ = shape && d->prioritizations_differ.value_or(false);
    report(9, differ, "baseline sanity",
           fmt("prio_mro %.2f vs prio_mlb %.2f, relative gap %.1f%% (must exceed 1%%)", mro, mlb,
               100.0 * std::abs(mro - mlb) / std::max(std::abs(mro), std::abs(mlb))));
}

void training_guards() {
    PpoConfig cfg;
    const nn::NetDims d;
    const auto init = nn::init_params<double>(d, 11);

    auto params = init;
    auto high_kl = fixtures::make_buffer(init, 128, 12, fixtures::RewardKind::Random,
                                         (cfg.kl_stop_factor + 1.0) * cfg.target_kl);
    const auto s1 = ppo::Trainer(cfg, 1).update(high_kl, params);
    const bool stop = s1.ok && s1.early_stopped && s1.epochs_run == 1 && s1.minibatches == 1;

    params = init;
    auto matched = fixtures::make_buffer(init, 128, 13, fixtures::RewardKind::EqualsValue);
    const auto s2 = ppo::Trainer(cfg, 1).update(matched, params);
    const bool entropy_only = s2.ok && s2.clip_grad_norm == 0.0 && s2.entropy_grad_norm > 0.0;

    report(10, stop && entropy_only, "training-loop guards",
           fmt("high-KL buffer: first KL %.4f (stop above %.4f), early_stopped %s after %d epoch(s); "
               "reward == value: clip grad norm %.1e, entropy grad norm %.2e",
               s1.kl_trace.empty() ? 0.0 : s1.kl_trace.front(), cfg.kl_stop_factor * cfg.target_kl,
               s1.early_stopped ? "yes" : "no", s1.epochs_run, s2.clip_grad_norm, s2.entropy_grad_norm));
}

}  // namespace

// Usage: acceptance [work_dir] [criterion]
int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "accord_acceptance";
    if (argc > 2) only = std::atoi(argv[2]);
    if (only < 0 || only > 10) {
        std::fprintf(stderr, "criterion must be 1..10\n");
        return 2;
    }
    fs::create_directories(work);
    if (selected(1)) formula_oracles();
    if (selected(2)) complexity_anchor();
    if (selected(3)) gradient_check();
    if (selected(4)) masking_contract();
    if (selected(5)) determinism(work);
    if (selected(6)) detector_oracle();
    if (selected(7)) inference_latency();
    if (selected(8) || selected(9)) desk_campaign(work);
    if (selected(10)) training_guards();
    std::printf("%d of %d criteria failed; artifacts in %s\n", failures, only == 0 ? 10 : 1, work.c_str());
    return failures == 0 ? 0 : 1;
}
