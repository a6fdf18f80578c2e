#include "accord/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace accord::sim {

namespace {

constexpr double kWindowEps = 1e-9;

double wrap_deg(double a) {
    a = std::fmod(a + 180.0, 360.0);
    if (a < 0) a += 360.0;
    return a - 180.0;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

std::int64_t count_in(const std::vector<double>& times, double lo, double hi) {
    auto first = std::upper_bound(times.begin(), times.end(), lo + kWindowEps);
    auto last = std::upper_bound(times.begin(), times.end(), hi + kWindowEps);
    return last > first ? last - first : 0;
}

}  // namespace

double CellState::param(ParamKind kind) const {
    switch (kind) {
        case ParamKind::CIO: return cio_db;
        case ParamKind::TTT: return ttt_ms;
        case ParamKind::Hysteresis: return hysteresis_db;
        case ParamKind::None: break;
    }
    throw std::invalid_argument("cell has no 'none' parameter");
}

void EventCounters::record(const Event& e) {
    switch (e.type) {
        case EventType::Handover: handover.push_back(e.time); break;
        case EventType::PingPong: ping_pong.push_back(e.time); break;
        case EventType::RadioLinkFailure: rlf.push_back(e.time); break;
        case EventType::CallBlockage: call_blockage.push_back(e.time); break;
        case EventType::Reattach: break;
    }
}

WindowCounts counts_between(const EventCounters& c, double t_begin, double t_end) {
    return {count_in(c.ping_pong, t_begin, t_end), count_in(c.rlf, t_begin, t_end),
            count_in(c.call_blockage, t_begin, t_end)};
}

WindowCounts counters_in_window(const EventCounters& c, double t_end, double t_meas) {
    return counts_between(c, t_end - t_meas, t_end);
}

CellKpis cell_kpis(const CellWindowStats& w) {
    CellKpis k;
    k.availability = w.ticks > 0 ? static_cast<double>(w.ticks_available) / w.ticks : 1.0;
    k.ho_stability = 1.0 - static_cast<double>(w.ping_pongs) / std::max(w.handovers, 1);
    k.throughput_norm = std::min(w.mean_throughput() / 100e6, 1.0);
    return k;
}

double sector_attenuation_db(const RadioConfig& radio, double offset_deg) {
    const double ratio = wrap_deg(offset_deg) / radio.sector_beamwidth_deg;
    return std::min(12.0 * ratio * ratio, radio.sector_max_atten_db);
}

double rsrp_dbm(const RadioConfig& radio, const CellState& cell, const Eigen::Vector2d& position,
                double shadowing_db) {
    const Eigen::Vector2d d = position - cell.position;
    const double dist = std::max(d.norm(), 1.0);
    const double pathloss = radio.pathloss_1km_db + 10.0 * radio.pathloss_exponent * std::log10(dist / 1000.0);
    double antenna = 0.0;
    if (!cell.omni && d.norm() > 0.0) {
        const double bearing = std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
        antenna = sector_attenuation_db(radio, bearing - cell.azimuth_deg);
    }
    return cell.eirp_dbm - pathloss - antenna + shadowing_db;
}

DeploymentSize deployment_size(Deployment d) {
    switch (d) {
        case Deployment::Small: return {15, 6};
        case Deployment::Medium: return {20, 8};
        case Deployment::Large: return {30, 10};
    }
    return {};
}

Topology build_topology(const SimConfig& cfg) {
    Topology topo;
    topo.area_radius = cfg.topology.area_radius_m;
    topo.stations.push_back({StationKind::Macro, Eigen::Vector2d::Zero()});
    topo.stations.push_back({StationKind::Micro, Eigen::Vector2d::Zero()});
    for (int k = 0; k < 6; ++k) {
        const double a = k * std::numbers::pi / 3.0;
        topo.stations.push_back(
            {StationKind::Micro, cfg.topology.ring_radius_m * Eigen::Vector2d(std::cos(a), std::sin(a))});
    }

    auto init_params = [&](CellState& c) {
        c.hysteresis_db = cfg.handover.initial_hysteresis_db;
        c.ttt_ms = cfg.handover.initial_ttt_ms;
        c.cio_db = cfg.handover.initial_cio_db;
    };

    CellState macro;
    macro.id = 0;
    macro.station = 0;
    macro.omni = true;
    macro.position = topo.stations[0].position;
    macro.eirp_dbm = cfg.radio.macro_eirp_dbm;
    macro.capacity_bps = cfg.radio.macro_capacity_mbps * 1e6;
    init_params(macro);
    topo.cells.push_back(macro);

    for (int s = 1; s < static_cast<int>(topo.stations.size()); ++s) {
        for (int k = 0; k < 3; ++k) {
            CellState c;
            c.id = static_cast<CellId>(topo.cells.size());
            c.station = s;
            c.azimuth_deg = 30.0 + 120.0 * k;
            c.position = topo.stations[static_cast<std::size_t>(s)].position;
            c.eirp_dbm = cfg.radio.micro_eirp_dbm;
            c.capacity_bps = cfg.radio.micro_capacity_mbps * 1e6;
            init_params(c);
            topo.cells.push_back(c);
        }
    }

    for (auto& c : topo.cells) {
        for (const auto& o : topo.cells) {
            if (o.id != c.id && (o.position - c.position).norm() <= cfg.topology.neighbor_distance_m) {
                c.neighbors.push_back(o.id);
            }
        }
    }
    return topo;
}

World::World(const SimConfig& cfg, Topology topology, std::vector<Ue> ues, std::uint64_t seed,
             bool random_shadowing)
    : cfg_(cfg), topology_(std::move(topology)), ues_(std::move(ues)), rng_(seed) {
    const auto n_cells = topology_.cells.size();
    for (const auto& c : topology_.cells) {
        if (!on_ladder(ParamKind::Hysteresis, c.hysteresis_db) || !on_ladder(ParamKind::TTT, c.ttt_ms) ||
            !on_ladder(ParamKind::CIO, c.cio_db)) {
            throw std::invalid_argument("cell parameters must lie on their ladders");
        }
    }
    shadowing_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ues_.size()), static_cast<Eigen::Index>(n_cells));
    if (random_shadowing && cfg_.radio.shadowing_std_db > 0) {
        std::normal_distribution<double> shadow(0.0, cfg_.radio.shadowing_std_db);
        for (Eigen::Index u = 0; u < shadowing_.rows(); ++u) {
            for (Eigen::Index c = 0; c < shadowing_.cols(); ++c) shadowing_(u, c) = shadow(rng_);
        }
    }
    rsrp_dbm_.resize(shadowing_.rows(), shadowing_.cols());
    rsrp_mw_.resize(shadowing_.rows(), shadowing_.cols());
    requested_sum_.assign(n_cells, 0.0);
    cell_throughput_.assign(n_cells, 0.0);
    window_.assign(n_cells, {});
    last_window_.assign(n_cells, {});
    rlf_ticks_ = std::max(1, static_cast<int>(std::ceil(cfg_.handover.rlf_timer / cfg_.tick - 1e-9)));

    for (auto& ue : ues_) {
        ue.a3_held_ticks.assign(n_cells, -1);
        ue.retry_after.assign(n_cells, -1e9);
    }
    refresh_rsrp();
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        auto& ue = ues_[u];
        if (ue.serving) {
            const CellId c = *ue.serving;
            ue.serving.reset();
            attach(ue, c);
            continue;
        }
        Eigen::Index best = 0;
        rsrp_dbm_.row(static_cast<Eigen::Index>(u)).maxCoeff(&best);
        attach(ue, static_cast<CellId>(best));
    }
    refresh_loads();
    allocate_throughput();
}

Eigen::Vector2d World::random_point_in_area() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = topology_.area_radius * std::sqrt(unit(rng_));
    const double a = 2.0 * std::numbers::pi * unit(rng_);
    return {r * std::cos(a), r * std::sin(a)};
}

World World::build(const SimConfig& cfg) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Topology topo = build_topology(cfg);
    const auto size = deployment_size(cfg.deployment);

    auto point_near = [&](const Eigen::Vector2d& centre, double radius) {
        for (;;) {
            const double r = radius * std::sqrt(unit(rng));
            const double a = 2.0 * std::numbers::pi * unit(rng);
            Eigen::Vector2d p = centre + r * Eigen::Vector2d(std::cos(a), std::sin(a));
            if (p.norm() <= topo.area_radius) return p;
        }
    };
    auto random_in_area = [&]() { return point_near(Eigen::Vector2d::Zero(), topo.area_radius); };

    std::vector<Ue> ues;
    auto make_ue = [&](const Eigen::Vector2d& pos) {
        Ue ue;
        ue.id = static_cast<int>(ues.size());
        ue.position = pos;
        ue.mobility_class =
            unit(rng) < cfg.mobility.vehicular_fraction ? MobilityClass::Vehicular : MobilityClass::Pedestrian;
        ue.speed = ue.mobility_class == MobilityClass::Vehicular ? cfg.mobility.vehicular_speed
                                                                 : cfg.mobility.pedestrian_speed;
        const double t = unit(rng);
        if (t < cfg.traffic.voice_fraction) {
            ue.traffic_class = TrafficClass::Voice;
            ue.requested_bps = cfg.traffic.voice_mbps * 1e6;
        } else if (t < cfg.traffic.voice_fraction + cfg.traffic.data_medium_fraction) {
            ue.traffic_class = TrafficClass::DataMedium;
            ue.requested_bps = cfg.traffic.data_medium_mbps * 1e6;
        } else {
            ue.traffic_class = TrafficClass::DataHigh;
            ue.requested_bps = cfg.traffic.data_high_mbps * 1e6;
        }
        ue.mode = MobilityMode::Waypoint;
        ue.waypoint = random_in_area();
        ues.push_back(ue);
    };

    for (int i = 0; i < size.per_macro; ++i) make_ue(point_near(topo.stations[0].position, cfg.topology.macro_ue_radius_m));
    for (std::size_t s = 1; s < topo.stations.size(); ++s) {
        for (int i = 0; i < size.per_micro; ++i) make_ue(point_near(topo.stations[s].position, cfg.topology.micro_ue_radius_m));
    }
    make_ue(random_in_area());
    auto& ref = ues.back();
    ref.is_reference = true;
    ref.mobility_class = MobilityClass::Vehicular;
    ref.speed = cfg.mobility.vehicular_speed;
    ref.traffic_class = TrafficClass::DataMedium;
    ref.requested_bps = cfg.traffic.data_medium_mbps * 1e6;

    return World(cfg, std::move(topo), std::move(ues), rng());
}

double World::rsrp(int ue, CellId cell) const { return rsrp_dbm_(ue, cell); }

int World::ttt_ticks_for(double ttt_ms) const {
    return static_cast<int>(std::ceil(ttt_ms / 1000.0 / cfg_.tick - 1e-9));
}

void World::move_ues() {
    const double dt = cfg_.tick;
    const double R = topology_.area_radius;
    for (auto& ue : ues_) {
        if (ue.mode == MobilityMode::Stationary || ue.speed <= 0.0) {
            ue.velocity.setZero();
            continue;
        }
        Eigen::Vector2d to_target = ue.waypoint - ue.position;
        const double dist = to_target.norm();
        const double travel = ue.speed * dt;
        if (dist <= travel) {
            ue.position = ue.waypoint;
            if (ue.mode == MobilityMode::Shuttle) {
                ue.waypoint = (ue.waypoint - ue.shuttle_a).norm() < 1e-12 ? ue.shuttle_b : ue.shuttle_a;
            } else {
                ue.waypoint = random_point_in_area();
            }
            to_target = ue.waypoint - ue.position;
            ue.velocity = to_target.norm() > 0 ? Eigen::Vector2d(ue.speed * to_target.normalized()) : Eigen::Vector2d::Zero();
            continue;
        }
        ue.velocity = ue.speed * to_target / dist;
        ue.position += ue.velocity * dt;
        const double r = ue.position.norm();
        if (r > R) {
            const Eigen::Vector2d n = ue.position / r;
            ue.position = n * (2.0 * R - r);
            ue.velocity -= 2.0 * ue.velocity.dot(n) * n;
        }
    }
}

void World::refresh_rsrp() {
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        for (std::size_t c = 0; c < topology_.cells.size(); ++c) {
            const auto ui = static_cast<Eigen::Index>(u);
            const auto ci = static_cast<Eigen::Index>(c);
            const double p = rsrp_dbm(cfg_.radio, topology_.cells[c], ues_[u].position, shadowing_(ui, ci));
            rsrp_dbm_(ui, ci) = p;
            rsrp_mw_(ui, ci) = dbm_to_mw(p);
        }
    }
}

void World::refresh_loads() {
    for (std::size_t c = 0; c < topology_.cells.size(); ++c) {
        topology_.cells[c].load = requested_sum_[c] / topology_.cells[c].capacity_bps;
    }
}

void World::attach(Ue& ue, CellId cell) {
    ue.serving = cell;
    requested_sum_[static_cast<std::size_t>(cell)] += ue.requested_bps;
    std::fill(ue.a3_held_ticks.begin(), ue.a3_held_ticks.end(), -1);
    ue.low_sinr_ticks = 0;
    refresh_loads();
}

void World::detach(Ue& ue) {
    if (!ue.serving) return;
    auto& sum = requested_sum_[static_cast<std::size_t>(*ue.serving)];
    sum = std::max(0.0, sum - ue.requested_bps);
    ue.serving.reset();
    ue.achieved_bps = 0.0;
    std::fill(ue.a3_held_ticks.begin(), ue.a3_held_ticks.end(), -1);
    ue.low_sinr_ticks = 0;
    refresh_loads();
}

double World::sinr_db(int u, CellId serving) const {
    double interference = dbm_to_mw(cfg_.radio.noise_dbm);
    const bool serving_macro = topology_.cells[static_cast<std::size_t>(serving)].omni;
    for (const auto& c : topology_.cells) {
        if (c.id == serving) continue;
        if (!cfg_.radio.cochannel_layers && c.omni != serving_macro) continue;
        const double activity = std::clamp(c.load, cfg_.radio.min_interferer_activity, 1.0);
        interference += activity * rsrp_mw_(u, c.id);
    }
    return 10.0 * std::log10(rsrp_mw_(u, serving) / interference);
}

void World::emit(std::vector<Event>& events, const Event& e) {
    events.push_back(e);
    counters_.record(e);
    auto& w = window_[static_cast<std::size_t>(e.cell)];
    switch (e.type) {
        case EventType::Handover: ++w.handovers; break;
        case EventType::PingPong: ++w.ping_pongs; break;
        case EventType::RadioLinkFailure: ++w.rlfs; break;
        default: break;
    }
}

void World::handover_and_rlf(std::vector<Event>& events) {
    const double t = now();
    const auto& cells = topology_.cells;
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        auto& ue = ues_[u];
        if (!ue.serving) continue;
        const auto ui = static_cast<Eigen::Index>(u);
        const CellId s = *ue.serving;
        const auto& sc = cells[static_cast<std::size_t>(s)];
        const double serving_metric = rsrp_dbm_(ui, s) + sc.cio_db + sc.hysteresis_db;
        const int required = ttt_ticks_for(sc.ttt_ms);

        // A3 entering condition and time-to-trigger per neighbour.
        std::optional<CellId> target;
        double best_metric = -1e300;
        for (const auto& n : cells) {
            auto& held = ue.a3_held_ticks[static_cast<std::size_t>(n.id)];
            if (n.id == s) {
                held = -1;
                continue;
            }
            const double metric = rsrp_dbm_(ui, n.id) + n.cio_db;
            if (metric > serving_metric) {
                held = held < 0 ? 0 : held + 1;
            } else {
                held = -1;
            }
            if (held >= required && t >= ue.retry_after[static_cast<std::size_t>(n.id)] && metric > best_metric) {
                best_metric = metric;
                target = n.id;
            }
        }

        if (target) {
            const auto ti = static_cast<std::size_t>(*target);
            ++ue.conn_attempts;
            ++counters_.connection_attempts;
            if (cells[ti].load >= 1.0) {
                emit(events, {t, EventType::CallBlockage, ue.id, *target, s});
                ue.a3_held_ticks[ti] = -1;
                ue.retry_after[ti] = t + cfg_.handover.retry_backoff;
            } else {
                ++ue.conn_successes;
                ++counters_.connection_successes;
                emit(events, {t, EventType::Handover, ue.id, s, *target});
                if (ue.last_ho_source && *ue.last_ho_source == *target &&
                    t - ue.last_ho_time <= cfg_.handover.ping_pong_window + kWindowEps) {
                    emit(events, {t, EventType::PingPong, ue.id, s, *target});
                }
                ue.last_ho_source = s;
                ue.last_ho_time = t;
                detach(ue);
                attach(ue, *target);
                continue;
            }
        }

        if (sinr_db(static_cast<int>(u), s) < cfg_.handover.q_out_db) {
            if (++ue.low_sinr_ticks >= rlf_ticks_) {
                emit(events, {t, EventType::RadioLinkFailure, ue.id, s, -1});
                detach(ue);
                ue.last_ho_source.reset();
                ue.reattach_at = t + cfg_.handover.reattach_delay;
            }
        } else {
            ue.low_sinr_ticks = 0;
        }
    }
}

void World::reattach(std::vector<Event>& events) {
    const double t = now();
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        auto& ue = ues_[u];
        if (ue.serving || t + kWindowEps < ue.reattach_at) continue;
        Eigen::Index best = 0;
        rsrp_dbm_.row(static_cast<Eigen::Index>(u)).maxCoeff(&best);
        const auto cell = static_cast<CellId>(best);
        ++ue.conn_attempts;
        ++counters_.connection_attempts;
        if (topology_.cells[static_cast<std::size_t>(cell)].load >= 1.0) {
            emit(events, {t, EventType::CallBlockage, ue.id, cell, -1});
            ue.reattach_at = t + cfg_.handover.reattach_delay;
            continue;
        }
        ++ue.conn_successes;
        ++counters_.connection_successes;
        attach(ue, cell);
        emit(events, {t, EventType::Reattach, ue.id, cell, -1});
    }
}

void World::allocate_throughput() {
    std::fill(cell_throughput_.begin(), cell_throughput_.end(), 0.0);
    for (auto& ue : ues_) {
        if (!ue.serving) {
            ue.achieved_bps = 0.0;
            continue;
        }
        const auto c = static_cast<std::size_t>(*ue.serving);
        const double cap = topology_.cells[c].capacity_bps;
        const double share = requested_sum_[c] <= cap ? 1.0 : cap / requested_sum_[c];
        ue.achieved_bps = ue.requested_bps * share;
        cell_throughput_[c] += ue.achieved_bps;
    }
}

std::vector<Event> World::step() {
    ++tick_count_;
    std::vector<Event> events;
    move_ues();
    refresh_rsrp();
    refresh_loads();
    handover_and_rlf(events);
    reattach(events);
    allocate_throughput();

    std::vector<int> attached(topology_.cells.size(), 0);
    for (auto& ue : ues_) {
        if (ue.serving) ++attached[static_cast<std::size_t>(*ue.serving)];
    }
    for (std::size_t c = 0; c < topology_.cells.size(); ++c) {
        auto& w = window_[c];
        const auto& cell = topology_.cells[c];
        ++w.ticks;
        if (cell.load < 1.0) ++w.ticks_available;
        w.load_sum += cell.load;
        w.throughput_sum += cell_throughput_[c];
        w.ue_seconds += attached[c] * cfg_.tick;
    }
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        if (ues_[u].serving) ues_[u].sinr_db = sinr_db(static_cast<int>(u), *ues_[u].serving);
    }
    return events;
}

void World::apply(const ControlDecision& d) {
    validate(d);
    auto& c = topology_.cells.at(static_cast<std::size_t>(d.target_cell));
    switch (d.kind) {
        case ParamKind::CIO: c.cio_db = d.value; break;
        case ParamKind::TTT: c.ttt_ms = d.value; break;
        case ParamKind::Hysteresis: c.hysteresis_db = d.value; break;
        case ParamKind::None: break;
    }
}

void World::close_window() {
    last_window_ = window_;
    window_.assign(topology_.cells.size(), {});
    for (auto& ue : ues_) {
        ue.last_conn_attempts = std::exchange(ue.conn_attempts, 0);
        ue.last_conn_successes = std::exchange(ue.conn_successes, 0);
    }
}

UserKpis World::user_kpis(CellId cell) const {
    UserKpis k;
    int n = 0;
    for (const auto& ue : ues_) {
        if (!ue.serving || *ue.serving != cell) continue;
        ++n;
        k.speed_norm += std::min(ue.velocity.norm() / 100.0, 1.0);
        k.requested_bitrate_norm += std::min(ue.requested_bps / 1e9, 1.0);
        k.satisfaction += std::min(ue.achieved_bps / ue.requested_bps, 1.0);
        k.connection_success +=
            ue.last_conn_attempts > 0 ? static_cast<double>(ue.last_conn_successes) / ue.last_conn_attempts : 1.0;
        k.throughput_norm += std::min(ue.achieved_bps / 1e6, 1.0);
    }
    if (n == 0) return {};
    k.speed_norm /= n;
    k.requested_bitrate_norm /= n;
    k.satisfaction /= n;
    k.connection_success /= n;
    k.throughput_norm /= n;
    return k;
}

}  // namespace accord::sim
