// Fixed-tick cellular network simulator: topology, UE mobility and traffic,
// log-distance radio model, A3 handover state machine and negative-event
// counters.
#ifndef ACCORD_SIM_HPP
#define ACCORD_SIM_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "accord/config.hpp"
#include "accord/core.hpp"

namespace accord::sim {

enum class StationKind { Macro, Micro };
enum class MobilityClass { Pedestrian, Vehicular };
enum class TrafficClass { Voice, DataMedium, DataHigh };
enum class MobilityMode { Waypoint, Shuttle, Stationary };

struct BaseStation {
    StationKind kind = StationKind::Micro;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct CellState {
    CellId id = 0;
    int station = 0;
    bool omni = false;
    double azimuth_deg = 0.0;  // sector boresight, ignored for omni cells
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double eirp_dbm = 0.0;
    double capacity_bps = 0.0;

    double hysteresis_db = 2.0;
    double cio_db = 0.0;
    double ttt_ms = 256.0;
    double load = 0.0;  // requested / capacity, may exceed 1
    std::vector<CellId> neighbors;

    double param(ParamKind kind) const;
};

struct Topology {
    std::vector<BaseStation> stations;
    std::vector<CellState> cells;
    double area_radius = 450.0;
};

struct Ue {
    int id = 0;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    MobilityClass mobility_class = MobilityClass::Pedestrian;
    MobilityMode mode = MobilityMode::Waypoint;
    Eigen::Vector2d waypoint = Eigen::Vector2d::Zero();
    Eigen::Vector2d shuttle_a = Eigen::Vector2d::Zero();
    Eigen::Vector2d shuttle_b = Eigen::Vector2d::Zero();
    double speed = 0.0;
    TrafficClass traffic_class = TrafficClass::Voice;
    double requested_bps = 1e5;
    bool is_reference = false;

    std::optional<CellId> serving;
    std::vector<int> a3_held_ticks;     // per cell, -1 while the A3 condition is false
    std::vector<double> retry_after;    // per cell, blocked-handover backoff
    int low_sinr_ticks = 0;
    double reattach_at = 0.0;
    double last_ho_time = -1e9;
    std::optional<CellId> last_ho_source;
    double achieved_bps = 0.0;
    double sinr_db = 0.0;
    int conn_attempts = 0;   // within the current KPI window
    int conn_successes = 0;
    int last_conn_attempts = 0;  // within the last closed window
    int last_conn_successes = 0;
};

enum class EventType { Handover, PingPong, RadioLinkFailure, CallBlockage, Reattach };

struct Event {
    double time = 0.0;
    EventType type = EventType::Handover;
    int ue = 0;
    CellId cell = 0;   // source / serving / blocked target
    CellId other = -1; // handover target or ping-pong partner
};

/// Time-stamped event streams. Timestamps are nondecreasing.
struct EventCounters {
    std::vector<double> ping_pong;
    std::vector<double> rlf;
    std::vector<double> call_blockage;
    std::vector<double> handover;
    std::int64_t connection_attempts = 0;
    std::int64_t connection_successes = 0;

    void record(const Event& e);
};

struct WindowCounts {
    std::int64_t ping_pong = 0;
    std::int64_t rlf = 0;
    std::int64_t call_blockage = 0;

    bool operator==(const WindowCounts&) const = default;
};

/// Network-wide counts of events with timestamps in (t_end - t_meas, t_end].
/// Window edges are compared with a 1e-9 s tolerance.
WindowCounts counters_in_window(const EventCounters& counters, double t_end, double t_meas);

/// Counts over an arbitrary half-open interval (t_begin, t_end].
WindowCounts counts_between(const EventCounters& counters, double t_begin, double t_end);

/// Per-cell accumulators over one KPI window.
struct CellWindowStats {
    int ticks = 0;
    int ticks_available = 0;
    double load_sum = 0.0;
    double throughput_sum = 0.0;  // bit/s summed over ticks
    int handovers = 0;
    int ping_pongs = 0;
    int rlfs = 0;
    double ue_seconds = 0.0;

    double mean_load() const { return ticks > 0 ? load_sum / ticks : 0.0; }
    double mean_throughput() const { return ticks > 0 ? throughput_sum / ticks : 0.0; }
};

struct CellKpis {
    double availability = 1.0;
    double ho_stability = 1.0;
    double throughput_norm = 0.0;
};

struct UserKpis {
    double speed_norm = 0.0;
    double requested_bitrate_norm = 0.0;
    double satisfaction = 0.0;
    double connection_success = 0.0;
    double throughput_norm = 0.0;
};

CellKpis cell_kpis(const CellWindowStats& window);

/// Received power in dBm from `cell` at `position`: EIRP minus log-distance
/// path loss minus antenna attenuation plus a fixed shadowing term. Distances
/// below 1 m are clamped.
double rsrp_dbm(const RadioConfig& radio, const CellState& cell, const Eigen::Vector2d& position,
                double shadowing_db);

/// Horizontal sector attenuation in dB (>= 0) for an azimuth offset in degrees.
double sector_attenuation_db(const RadioConfig& radio, double offset_deg);

Topology build_topology(const SimConfig& cfg);

/// UEs attached to the macro site and to each micro site for a deployment,
/// excluding the reference UE.
struct DeploymentSize {
    int per_macro = 0;
    int per_micro = 0;
    int total() const { return per_macro + 7 * per_micro; }
};
DeploymentSize deployment_size(Deployment d);

class World {
public:
    World(const SimConfig& cfg, Topology topology, std::vector<Ue> ues, std::uint64_t seed,
          bool random_shadowing = true);

    /// Full scenario: topology, UE placement and traffic drawn from cfg.seed.
    static World build(const SimConfig& cfg);

    /// Advances one tick and returns the events it produced.
    std::vector<Event> step();

    /// Applies a control decision to its target cell.
    void apply(const ControlDecision& d);

    /// Closes the current KPI window; the closed window becomes `last_window`.
    void close_window();

    double now() const { return static_cast<double>(tick_count_) * cfg_.tick; }
    std::int64_t tick_count() const { return tick_count_; }
    double tick() const { return cfg_.tick; }

    const Topology& topology() const { return topology_; }
    const std::vector<CellState>& cells() const { return topology_.cells; }
    const CellState& cell(CellId id) const { return topology_.cells.at(static_cast<std::size_t>(id)); }
    const std::vector<Ue>& ues() const { return ues_; }
    const EventCounters& counters() const { return counters_; }
    const CellWindowStats& last_window(CellId id) const { return last_window_.at(static_cast<std::size_t>(id)); }
    const std::vector<CellWindowStats>& last_windows() const { return last_window_; }

    double rsrp(int ue, CellId cell) const;
    double cell_throughput(CellId id) const { return cell_throughput_.at(static_cast<std::size_t>(id)); }

    /// Means over the UEs currently attached to `cell`; zeros if none.
    UserKpis user_kpis(CellId cell) const;

    Eigen::MatrixXd& shadowing() { return shadowing_; }

private:
    void move_ues();
    void refresh_rsrp();
    void refresh_loads();
    void handover_and_rlf(std::vector<Event>& events);
    void reattach(std::vector<Event>& events);
    void allocate_throughput();
    double sinr_db(int ue, CellId serving) const;
    void attach(Ue& ue, CellId cell);
    void detach(Ue& ue);
    Eigen::Vector2d random_point_in_area();
    void emit(std::vector<Event>& events, const Event& e);

    SimConfig cfg_;
    Topology topology_;
    std::vector<Ue> ues_;
    std::mt19937_64 rng_;
    Eigen::MatrixXd shadowing_;   // ue x cell, dB
    Eigen::MatrixXd rsrp_dbm_;    // ue x cell
    Eigen::MatrixXd rsrp_mw_;     // ue x cell
    std::vector<double> requested_sum_;
    std::vector<double> cell_throughput_;
    EventCounters counters_;
    std::vector<CellWindowStats> window_;
    std::vector<CellWindowStats> last_window_;
    std::int64_t tick_count_ = 0;
    int ttt_ticks_for(double ttt_ms) const;
    int rlf_ticks_ = 0;
};

}  // namespace accord::sim

#endif  // ACCORD_SIM_HPP
