// Scenario configuration. Every constant the simulator, the xApps, the agent and
// the trainer use lives here so that runs are fully described by one file.
#ifndef ACCORD_CONFIG_HPP
#define ACCORD_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace accord {

enum class Deployment { Small, Medium, Large };

std::string to_string(Deployment d);
Deployment deployment_from_string(const std::string& s);

struct RadioConfig {
    double macro_eirp_dbm = 46.0;
    double micro_eirp_dbm = 36.0;
    double pathloss_1km_db = 128.1;  // loss at 1 km
    double pathloss_exponent = 3.76;
    double shadowing_std_db = 6.0;
    double sector_beamwidth_deg = 65.0;
    double sector_max_atten_db = 20.0;
    double noise_dbm = -94.0;
    double min_interferer_activity = 0.2;
    bool cochannel_layers = false;  // macro and micro layers share one carrier
    double macro_capacity_mbps = 200.0;
    double micro_capacity_mbps = 100.0;
};

struct TopologyConfig {
    double area_radius_m = 450.0;
    double ring_radius_m = 260.0;
    double neighbor_distance_m = 400.0;
    double macro_ue_radius_m = 200.0;
    double micro_ue_radius_m = 100.0;
};

struct MobilityConfig {
    double pedestrian_speed = 1.4;
    double vehicular_speed = 14.0;
    double vehicular_fraction = 0.3;
};

struct TrafficConfig {
    double voice_mbps = 0.1;
    double data_medium_mbps = 5.0;
    double data_high_mbps = 50.0;
    double voice_fraction = 0.4;
    double data_medium_fraction = 0.4;  // remainder is data-high
};

struct HandoverConfig {
    double ping_pong_window = 3.0;  // T_pp, s
    double rlf_timer = 0.5;         // T_rlf, s
    double q_out_db = -8.0;
    double reattach_delay = 1.0;
    double retry_backoff = 5.0;  // after a blocked handover to the same target
    double initial_hysteresis_db = 2.0;
    double initial_ttt_ms = 256.0;
    double initial_cio_db = 0.0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    Deployment deployment = Deployment::Medium;
    double tick = 0.1;
    double duration = 500.0;
    TopologyConfig topology;
    RadioConfig radio;
    MobilityConfig mobility;
    TrafficConfig traffic;
    HandoverConfig handover;
};

struct XAppConfig {
    double control_interval = 1.0;
    double pp_rate_high = 0.2;    // ping-pongs per handover
    double rlf_rate_high = 0.05;  // RLFs per attached-UE-second
    double load_high = 0.9;
    double load_low = 0.5;
    double neighbor_delta = 0.3;
};

struct AgentConfig {
    int n_conf_dec = 3;
    int n_actions = 4;
    double t_meas = 1.0;
    double cooldown = 10.0;  // t_CR
    double t_reward = 10.0;
    double count_norm = 5.0;  // C_norm, events per T_meas window
    double w_pp = 1.0;
    double w_rlf = 1.0;
    double w_cb = 1.0;
};

struct PpoConfig {
    int epochs = 3;
    double clip = 0.10;
    double target_kl = 0.015;
    double actor_lr = 1e-5;
    double critic_lr = 1e-4;
    int critic_pretrain_steps = 12;
    double huber_delta = 1.0;
    double entropy_coeff = 0.007;
    double rollout_seconds = 400.0;
    int minibatch_size = 64;
    double gamma = 0.99;
    std::string optimizer = "adam";  // "adam" | "sgd"
    double momentum = 0.9;
    double kl_halve_factor = 1.5;
    double kl_stop_factor = 3.0;
    int kl_consecutive = 2;
};

struct CampaignConfig {
    int seeds = 5;
    std::uint64_t seed_base = 1;
    std::vector<Deployment> deployments = {Deployment::Medium};
    std::vector<std::string> methods = {"no_cm", "prio_mro", "prio_mlb", "accord"};
    double t_train = 2000.0;
    double t_eval = 500.0;
    double warmup = 200.0;
    int jobs = 4;
    double w_pp = 0.05;
    double w_rlf = 0.40;
    double w_cb = 0.40;
    bool evaluate_untrained = true;
};

struct Config {
    SimConfig sim;
    XAppConfig xapps;
    AgentConfig agent;
    PpoConfig ppo;
    CampaignConfig campaign;
};

/// Raised for malformed or unknown configuration entries; `key()` names the
/// offending `section.key`.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& text);
/// Serializes every key with its current value; parse_config(dump_config(c)) == c.
std::string dump_config(const Config& cfg);
void validate(const Config& cfg);

}  // namespace accord

#endif  // ACCORD_CONFIG_HPP
