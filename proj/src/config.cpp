#include "accord/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace accord {

std::string to_string(Deployment d) {
    switch (d) {
        case Deployment::Small: return "small";
        case Deployment::Medium: return "medium";
        case Deployment::Large: return "large";
    }
    return "?";
}

Deployment deployment_from_string(const std::string& s) {
    if (s == "small") return Deployment::Small;
    if (s == "medium") return Deployment::Medium;
    if (s == "large") return Deployment::Large;
    throw std::invalid_argument("unknown deployment '" + s + "' (expected small|medium|large)");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt_double(double v) {
    // Shortest form that parses back to the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).size() != 0) throw std::invalid_argument("trailing characters");
    return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
    Int v{};
    auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) throw std::invalid_argument("not an integer");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("not a boolean");
}

struct Field {
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

// Ordered so that dump_config emits sections together.
using Schema = std::vector<std::pair<std::string, Field>>;

#define ACCORD_DOUBLE(key, member)                                                      \
    {key, Field{[](Config& c, const std::string& v) { c.member = parse_double(v); },    \
                [](const Config& c) { return fmt_double(c.member); }}}
#define ACCORD_INT(key, member)                                                                      \
    {key, Field{[](Config& c, const std::string& v) { c.member = parse_int<decltype(c.member)>(v); }, \
                [](const Config& c) { return std::to_string(c.member); }}}

const Schema& schema() {
    static const Schema s = {
        ACCORD_INT("scenario.seed", sim.seed),
        {"scenario.deployment",
         Field{[](Config& c, const std::string& v) { c.sim.deployment = deployment_from_string(v); },
               [](const Config& c) { return to_string(c.sim.deployment); }}},
        ACCORD_DOUBLE("scenario.tick", sim.tick),
        ACCORD_DOUBLE("scenario.duration", sim.duration),

        ACCORD_DOUBLE("topology.area_radius_m", sim.topology.area_radius_m),
        ACCORD_DOUBLE("topology.ring_radius_m", sim.topology.ring_radius_m),
        ACCORD_DOUBLE("topology.neighbor_distance_m", sim.topology.neighbor_distance_m),
        ACCORD_DOUBLE("topology.macro_ue_radius_m", sim.topology.macro_ue_radius_m),
        ACCORD_DOUBLE("topology.micro_ue_radius_m", sim.topology.micro_ue_radius_m),

        ACCORD_DOUBLE("radio.macro_eirp_dbm", sim.radio.macro_eirp_dbm),
        ACCORD_DOUBLE("radio.micro_eirp_dbm", sim.radio.micro_eirp_dbm),
        ACCORD_DOUBLE("radio.pathloss_1km_db", sim.radio.pathloss_1km_db),
        ACCORD_DOUBLE("radio.pathloss_exponent", sim.radio.pathloss_exponent),
        ACCORD_DOUBLE("radio.shadowing_std_db", sim.radio.shadowing_std_db),
        ACCORD_DOUBLE("radio.sector_beamwidth_deg", sim.radio.sector_beamwidth_deg),
        ACCORD_DOUBLE("radio.sector_max_atten_db", sim.radio.sector_max_atten_db),
        ACCORD_DOUBLE("radio.noise_dbm", sim.radio.noise_dbm),
        ACCORD_DOUBLE("radio.min_interferer_activity", sim.radio.min_interferer_activity),
        {"radio.cochannel_layers",
         Field{[](Config& c, const std::string& v) { c.sim.radio.cochannel_layers = parse_bool(v); },
               [](const Config& c) { return std::string(c.sim.radio.cochannel_layers ? "true" : "false"); }}},
        ACCORD_DOUBLE("radio.macro_capacity_mbps", sim.radio.macro_capacity_mbps),
        ACCORD_DOUBLE("radio.micro_capacity_mbps", sim.radio.micro_capacity_mbps),

        ACCORD_DOUBLE("mobility.pedestrian_speed", sim.mobility.pedestrian_speed),
        ACCORD_DOUBLE("mobility.vehicular_speed", sim.mobility.vehicular_speed),
        ACCORD_DOUBLE("mobility.vehicular_fraction", sim.mobility.vehicular_fraction),

        ACCORD_DOUBLE("traffic.voice_mbps", sim.traffic.voice_mbps),
        ACCORD_DOUBLE("traffic.data_medium_mbps", sim.traffic.data_medium_mbps),
        ACCORD_DOUBLE("traffic.data_high_mbps", sim.traffic.data_high_mbps),
        ACCORD_DOUBLE("traffic.voice_fraction", sim.traffic.voice_fraction),
        ACCORD_DOUBLE("traffic.data_medium_fraction", sim.traffic.data_medium_fraction),

        ACCORD_DOUBLE("handover.ping_pong_window", sim.handover.ping_pong_window),
        ACCORD_DOUBLE("handover.rlf_timer", sim.handover.rlf_timer),
        ACCORD_DOUBLE("handover.q_out_db", sim.handover.q_out_db),
        ACCORD_DOUBLE("handover.reattach_delay", sim.handover.reattach_delay),
        ACCORD_DOUBLE("handover.retry_backoff", sim.handover.retry_backoff),
        ACCORD_DOUBLE("handover.initial_hysteresis_db", sim.handover.initial_hysteresis_db),
        ACCORD_DOUBLE("handover.initial_ttt_ms", sim.handover.initial_ttt_ms),
        ACCORD_DOUBLE("handover.initial_cio_db", sim.handover.initial_cio_db),

        ACCORD_DOUBLE("xapps.control_interval", xapps.control_interval),
        ACCORD_DOUBLE("xapps.pp_rate_high", xapps.pp_rate_high),
        ACCORD_DOUBLE("xapps.rlf_rate_high", xapps.rlf_rate_high),
        ACCORD_DOUBLE("xapps.load_high", xapps.load_high),
        ACCORD_DOUBLE("xapps.load_low", xapps.load_low),
        ACCORD_DOUBLE("xapps.neighbor_delta", xapps.neighbor_delta),

        ACCORD_INT("accord.n_conf_dec", agent.n_conf_dec),
        ACCORD_INT("accord.n_actions", agent.n_actions),
        ACCORD_DOUBLE("accord.t_meas", agent.t_meas),
        ACCORD_DOUBLE("accord.cooldown", agent.cooldown),
        ACCORD_DOUBLE("accord.t_reward", agent.t_reward),
        ACCORD_DOUBLE("accord.count_norm", agent.count_norm),
        ACCORD_DOUBLE("accord.w_pp", agent.w_pp),
        ACCORD_DOUBLE("accord.w_rlf", agent.w_rlf),
        ACCORD_DOUBLE("accord.w_cb", agent.w_cb),

        ACCORD_INT("ppo.epochs", ppo.epochs),
        ACCORD_DOUBLE("ppo.clip", ppo.clip),
        ACCORD_DOUBLE("ppo.target_kl", ppo.target_kl),
        ACCORD_DOUBLE("ppo.actor_lr", ppo.actor_lr),
        ACCORD_DOUBLE("ppo.critic_lr", ppo.critic_lr),
        ACCORD_INT("ppo.critic_pretrain_steps", ppo.critic_pretrain_steps),
        ACCORD_DOUBLE("ppo.huber_delta", ppo.huber_delta),
        ACCORD_DOUBLE("ppo.entropy_coeff", ppo.entropy_coeff),
        ACCORD_DOUBLE("ppo.rollout_seconds", ppo.rollout_seconds),
        ACCORD_INT("ppo.minibatch_size", ppo.minibatch_size),
        ACCORD_DOUBLE("ppo.gamma", ppo.gamma),
        {"ppo.optimizer", Field{[](Config& c, const std::string& v) {
                                    if (v != "adam" && v != "sgd") throw std::invalid_argument("expected adam|sgd");
                                    c.ppo.optimizer = v;
                                },
                                [](const Config& c) { return c.ppo.optimizer; }}},
        ACCORD_DOUBLE("ppo.momentum", ppo.momentum),
        ACCORD_DOUBLE("ppo.kl_halve_factor", ppo.kl_halve_factor),
        ACCORD_DOUBLE("ppo.kl_stop_factor", ppo.kl_stop_factor),
        ACCORD_INT("ppo.kl_consecutive", ppo.kl_consecutive),

        ACCORD_INT("campaign.seeds", campaign.seeds),
        ACCORD_INT("campaign.seed_base", campaign.seed_base),
        {"campaign.deployments",
         Field{[](Config& c, const std::string& v) {
                   c.campaign.deployments.clear();
                   for (const auto& s : split_list(v)) c.campaign.deployments.push_back(deployment_from_string(s));
               },
               [](const Config& c) {
                   std::string out;
                   for (auto d : c.campaign.deployments) out += (out.empty() ? "" : ",") + to_string(d);
                   return out;
               }}},
        {"campaign.methods",
         Field{[](Config& c, const std::string& v) { c.campaign.methods = split_list(v); },
               [](const Config& c) {
                   std::string out;
                   for (const auto& m : c.campaign.methods) out += (out.empty() ? "" : ",") + m;
                   return out;
               }}},
        ACCORD_DOUBLE("campaign.t_train", campaign.t_train),
        ACCORD_DOUBLE("campaign.t_eval", campaign.t_eval),
        ACCORD_DOUBLE("campaign.warmup", campaign.warmup),
        ACCORD_INT("campaign.jobs", campaign.jobs),
        ACCORD_DOUBLE("campaign.w_pp", campaign.w_pp),
        ACCORD_DOUBLE("campaign.w_rlf", campaign.w_rlf),
        ACCORD_DOUBLE("campaign.w_cb", campaign.w_cb),
        {"campaign.evaluate_untrained",
         Field{[](Config& c, const std::string& v) { c.campaign.evaluate_untrained = parse_bool(v); },
               [](const Config& c) { return std::string(c.campaign.evaluate_untrained ? "true" : "false"); }}},
    };
    return s;
}

#undef ACCORD_DOUBLE
#undef ACCORD_INT

const Field* find_field(const std::string& key) {
    for (const auto& [k, f] : schema()) {
        if (k == key) return &f;
    }
    return nullptr;
}

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
}

}  // namespace

Config parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("<file>", e.what());
    }
    Config cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(section, "top-level keys must live in a [section]");
        for (const auto& [name, value] : body) {
            const std::string key = section + "." + name;
            const Field* field = find_field(key);
            if (field == nullptr) throw ConfigError(key, "unknown configuration key");
            try {
                field->set(cfg, trim(value.get_value<std::string>()));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(key, std::string("invalid value: ") + e.what());
            }
        }
    }
    validate(cfg);
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const Config& cfg) {
    std::ostringstream out;
    std::string current;
    for (const auto& [key, field] : schema()) {
        auto dot = key.find('.');
        auto section = key.substr(0, dot);
        if (section != current) {
            if (!current.empty()) out << '\n';
            out << '[' << section << "]\n";
            current = section;
        }
        out << key.substr(dot + 1) << " = " << field.get(cfg) << '\n';
    }
    return out.str();
}

void validate(const Config& c) {
    require(c.sim.tick > 0, "scenario.tick", "must be positive");
    require(c.sim.duration > 0, "scenario.duration", "must be positive");
    require(c.sim.topology.area_radius_m > 0, "topology.area_radius_m", "must be positive");
    require(c.sim.topology.ring_radius_m > 0 && c.sim.topology.ring_radius_m < c.sim.topology.area_radius_m,
            "topology.ring_radius_m", "must lie inside the area");
    require(c.sim.radio.pathloss_exponent > 0, "radio.pathloss_exponent", "must be positive");
    require(c.sim.radio.shadowing_std_db >= 0, "radio.shadowing_std_db", "must be non-negative");
    require(c.sim.radio.macro_capacity_mbps > 0, "radio.macro_capacity_mbps", "must be positive");
    require(c.sim.radio.micro_capacity_mbps > 0, "radio.micro_capacity_mbps", "must be positive");
    require(c.sim.mobility.vehicular_fraction >= 0 && c.sim.mobility.vehicular_fraction <= 1,
            "mobility.vehicular_fraction", "must be in [0,1]");
    require(c.sim.traffic.voice_mbps > 0 && c.sim.traffic.data_medium_mbps > 0 && c.sim.traffic.data_high_mbps > 0,
            "traffic.voice_mbps", "requested bitrates must be positive");
    require(c.sim.traffic.voice_fraction + c.sim.traffic.data_medium_fraction <= 1.0 + 1e-12,
            "traffic.data_medium_fraction", "class fractions exceed 1");
    require(c.sim.handover.ping_pong_window > 0, "handover.ping_pong_window", "must be positive");
    require(c.sim.handover.rlf_timer > 0, "handover.rlf_timer", "must be positive");
    require(c.xapps.control_interval > 0, "xapps.control_interval", "must be positive");
    for (auto [v, key] : {std::pair{c.xapps.pp_rate_high, "xapps.pp_rate_high"},
                          std::pair{c.xapps.rlf_rate_high, "xapps.rlf_rate_high"},
                          std::pair{c.xapps.load_high, "xapps.load_high"},
                          std::pair{c.xapps.load_low, "xapps.load_low"},
                          std::pair{c.xapps.neighbor_delta, "xapps.neighbor_delta"}}) {
        require(v > 0 && v < 1, key, "threshold must be in (0,1)");
    }
    require(c.agent.n_conf_dec == 3, "accord.n_conf_dec", "only 3 decision slots are supported");
    require(c.agent.n_actions == 4, "accord.n_actions", "only 4 resolution actions are supported");
    require(c.agent.t_meas > 0, "accord.t_meas", "must be positive");
    require(c.agent.cooldown >= 0, "accord.cooldown", "must be non-negative");
    require(c.agent.t_reward >= 0, "accord.t_reward", "must be non-negative");
    require(c.agent.count_norm > 0, "accord.count_norm", "must be positive");
    require(c.agent.w_pp + c.agent.w_rlf + c.agent.w_cb > 0, "accord.w_pp", "reward weights must not all be 0");
    require(c.ppo.epochs > 0, "ppo.epochs", "must be positive");
    require(c.ppo.clip > 0 && c.ppo.clip < 1, "ppo.clip", "must be in (0,1)");
    require(c.ppo.target_kl > 0, "ppo.target_kl", "must be positive");
    require(c.ppo.actor_lr > 0, "ppo.actor_lr", "must be positive");
    require(c.ppo.critic_lr > 0, "ppo.critic_lr", "must be positive");
    require(c.ppo.critic_pretrain_steps >= 0, "ppo.critic_pretrain_steps", "must be non-negative");
    require(c.ppo.huber_delta > 0, "ppo.huber_delta", "must be positive");
    require(c.ppo.entropy_coeff >= 0, "ppo.entropy_coeff", "must be non-negative");
    require(c.ppo.rollout_seconds > 0, "ppo.rollout_seconds", "must be positive");
    require(c.ppo.minibatch_size > 0, "ppo.minibatch_size", "must be positive");
    require(c.campaign.seeds >= 1, "campaign.seeds", "need at least one seed");
    require(!c.campaign.methods.empty(), "campaign.methods", "need at least one method");
    for (const auto& m : c.campaign.methods) {
        require(m == "no_cm" || m == "prio_mro" || m == "prio_mlb" || m == "accord", "campaign.methods",
                "unknown method (expected no_cm|prio_mro|prio_mlb|accord)");
    }
    require(!c.campaign.deployments.empty(), "campaign.deployments", "need at least one deployment");
    require(c.campaign.t_eval > c.campaign.warmup, "campaign.t_eval", "must exceed the warm-up");
    require(c.campaign.warmup >= 0, "campaign.warmup", "must be non-negative");
    require(c.campaign.jobs >= 1, "campaign.jobs", "must be at least 1");
}

}  // namespace accord
