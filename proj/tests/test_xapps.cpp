#include <doctest.h>

#include <cmath>
#include <random>

#include "accord/xapps.hpp"

using namespace accord;
using namespace accord::xapp;

namespace {

MroObservation mro_cell(CellId id, double pp_rate, double rlf_rate, double hyst = 2.0, double ttt = 256.0) {
    return {id, pp_rate, rlf_rate, hyst, ttt};
}

}  // namespace

TEST_CASE("MRO: quiet cell emits nothing") {
    XAppConfig cfg;
    const std::vector<MroObservation> cells = {mro_cell(0, 0.0, 0.0)};
    CHECK(mro_decide(cfg, cells, 1.0).empty());
}

TEST_CASE("MRO: ping-pong branch raises hysteresis and TTT one step") {
    XAppConfig cfg;
    const std::vector<MroObservation> cells = {mro_cell(3, 0.5, 0.0)};
    const auto d = mro_decide(cfg, cells, 7.0);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == ControlDecision{XAppId::MRO, 3, ParamKind::Hysteresis, 2.5, 7.0});
    CHECK(d[1] == ControlDecision{XAppId::MRO, 3, ParamKind::TTT, 320, 7.0});
}

TEST_CASE("MRO: RLF branch lowers both; ping-pong wins when both fire") {
    XAppConfig cfg;
    const std::vector<MroObservation> rlf = {mro_cell(1, 0.0, 0.2)};
    const auto d = mro_decide(cfg, rlf, 1.0);
    REQUIRE(d.size() == 2);
    CHECK(d[0].value == 1.5);
    CHECK(d[1].value == 160);
    const std::vector<MroObservation> both = {mro_cell(1, 0.5, 0.2)};
    const auto e = mro_decide(cfg, both, 1.0);
    REQUIRE(e.size() == 2);
    CHECK(e[0].value == 2.5);
    CHECK(e[1].value == 320);
}

TEST_CASE("MLB: balanced loads emit nothing") {
    XAppConfig cfg;
    const std::vector<MlbObservation> cells = {{0, 0.7, 0, {1}}, {1, 0.7, 0, {0}}};
    CHECK(mlb_decide(cfg, cells, 1.0).empty());
}

TEST_CASE("MLB: overloaded cell next to an idle one lowers its CIO") {
    XAppConfig cfg;
    const std::vector<MlbObservation> cells = {{0, 1.1, 0, {1}}, {1, 0.2, 0, {0}}};
    const auto d = mlb_decide(cfg, cells, 4.0);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == ControlDecision{XAppId::MLB, 0, ParamKind::CIO, -1, 4.0});
    CHECK(d[1] == ControlDecision{XAppId::MLB, 1, ParamKind::CIO, 1, 4.0});
}

TEST_CASE("MLB: CIO saturates at the ladder end and non-neighbours are ignored") {
    XAppConfig cfg;
    const std::vector<MlbObservation> clamp = {{0, 1.1, -24, {1}}, {1, 0.2, 24, {0}}};
    const auto d = mlb_decide(cfg, clamp, 1.0);
    REQUIRE(d.size() == 2);
    CHECK(d[0].value == -24);
    CHECK(d[1].value == 24);
    const std::vector<MlbObservation> apart = {{0, 1.1, 0, {}}, {1, 0.2, 0, {}}};
    CHECK(mlb_decide(cfg, apart, 1.0).empty());
}

TEST_CASE("xApps are pure and every decision is one ladder step from the current value") {
    XAppConfig cfg;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> rate(0.0, 0.4);
    std::uniform_real_distribution<double> load(0.0, 1.5);
    const auto hyst = ladder(ParamKind::Hysteresis);
    const auto ttt = ladder(ParamKind::TTT);
    const auto cio = ladder(ParamKind::CIO);
    for (int round = 0; round < 200; ++round) {
        std::vector<MroObservation> mro;
        std::vector<MlbObservation> mlb;
        for (CellId c = 0; c < 6; ++c) {
            mro.push_back(mro_cell(c, rate(rng), rate(rng), hyst[rng() % hyst.size()], ttt[rng() % ttt.size()]));
            mlb.push_back({c, load(rng), cio[rng() % cio.size()], {(c + 1) % 6, (c + 5) % 6}});
        }
        const auto a = mro_decide(cfg, mro, 1.0);
        CHECK(a == mro_decide(cfg, mro, 1.0));
        const auto b = mlb_decide(cfg, mlb, 1.0);
        CHECK(b == mlb_decide(cfg, mlb, 1.0));
        for (const auto& d : a) {
            const auto& o = mro[static_cast<std::size_t>(d.target_cell)];
            const double cur = d.kind == ParamKind::TTT ? o.ttt_ms : o.hysteresis_db;
            const auto diff = static_cast<long>(ladder_index(d.kind, d.value)) - static_cast<long>(ladder_index(d.kind, cur));
            CHECK(std::labs(diff) <= 1);
        }
        for (const auto& d : b) {
            const auto& o = mlb[static_cast<std::size_t>(d.target_cell)];
            const auto diff = static_cast<long>(ladder_index(d.kind, d.value)) - static_cast<long>(ladder_index(d.kind, o.cio_db));
            CHECK(std::labs(diff) <= 1);
        }
    }
}

TEST_CASE("observations from a KPI window") {
    sim::CellState cell;
    cell.id = 2;
    cell.hysteresis_db = 3.0;
    cell.ttt_ms = 480;
    cell.cio_db = -2;
    cell.neighbors = {1, 3};
    sim::CellWindowStats w;
    w.ticks = 10;
    w.load_sum = 9.0;
    w.handovers = 4;
    w.ping_pongs = 1;
    w.rlfs = 2;
    w.ue_seconds = 20.0;
    const auto m = observe_mro(cell, w, 0.1);
    CHECK(m.ping_pong_rate == 0.25);
    CHECK(m.rlf_rate == 0.1);
    CHECK(m.hysteresis_db == 3.0);
    CHECK(m.ttt_ms == 480);
    const auto l = observe_mlb(cell, w);
    CHECK(l.load == doctest::Approx(0.9));
    CHECK(l.cio_db == -2);
    CHECK(l.neighbors == std::vector<CellId>{1, 3});
}
