#include <doctest.h>

#include <random>

#include "accord/detect.hpp"
#include "oracles.hpp"

using namespace accord;

namespace {

ControlDecision dec(XAppId who, CellId cell, ParamKind kind, double value, double t = 10.0) {
    return {who, cell, kind, value, t};
}

}  // namespace

TEST_CASE("single-issuer window passes through") {
    const std::vector<ControlDecision> w = {dec(XAppId::MRO, 5, ParamKind::Hysteresis, 2.5),
                                            dec(XAppId::MRO, 5, ParamKind::TTT, 320)};
    const auto r = detect(w, 11.0);
    CHECK(r.reports.empty());
    CHECK(r.passthrough == w);
    CHECK(r.superseded.empty());
}

TEST_CASE("MRO TTT and MLB CIO on one cell form a two-decision report") {
    const std::vector<ControlDecision> w = {dec(XAppId::MRO, 5, ParamKind::TTT, 320),
                                            dec(XAppId::MLB, 5, ParamKind::CIO, -1)};
    const auto r = detect(w, 11.0);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].target_cell == 5);
    CHECK(r.reports[0].detected_at == 11.0);
    REQUIRE(r.reports[0].decisions.size() == 2);
    CHECK(r.reports[0].decisions[0].kind == ParamKind::CIO);
    CHECK(r.reports[0].decisions[1].kind == ParamKind::TTT);
    CHECK(r.passthrough.empty());
    CHECK_NOTHROW(validate(r.reports[0]));
}

TEST_CASE("three kinds fill every slot; other cells pass through") {
    const std::vector<ControlDecision> w = {dec(XAppId::MRO, 5, ParamKind::Hysteresis, 2.5),
                                            dec(XAppId::MRO, 5, ParamKind::TTT, 320),
                                            dec(XAppId::MLB, 5, ParamKind::CIO, -1),
                                            dec(XAppId::MLB, 6, ParamKind::CIO, 1)};
    const auto r = detect(w, 11.0);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].decisions.size() == 3);
    REQUIRE(r.passthrough.size() == 1);
    CHECK(r.passthrough[0].target_cell == 6);
}

TEST_CASE("duplicate kinds resolve latest-wins") {
    const std::vector<ControlDecision> w = {dec(XAppId::MLB, 2, ParamKind::CIO, -1, 10.5),
                                            dec(XAppId::MRO, 2, ParamKind::CIO, 3, 10.2),
                                            dec(XAppId::MRO, 2, ParamKind::TTT, 320, 10.2)};
    const auto r = detect(w, 11.0);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].decisions[0] == w[0]);
    CHECK(r.superseded == std::vector<ControlDecision>{w[1]});
}

TEST_CASE("latest-wins leaving one issuer passes the survivors through") {
    const std::vector<ControlDecision> w = {dec(XAppId::MRO, 2, ParamKind::CIO, 3, 10.2),
                                            dec(XAppId::MLB, 2, ParamKind::CIO, -1, 10.5)};
    const auto r = detect(w, 11.0);
    CHECK(r.reports.empty());
    CHECK(r.passthrough == std::vector<ControlDecision>{w[1]});
    CHECK(r.superseded == std::vector<ControlDecision>{w[0]});
}

TEST_CASE("detector matches the brute-force reference on random windows") {
    std::mt19937_64 rng(2024);
    for (int n = 0; n < 300; ++n) {
        const auto w = oracle::random_window(rng, 20, 5);
        const auto got = detect(w, 11.0);
        const auto want = oracle::detect(w, 11.0);
        CHECK(got.reports == want.reports);
        CHECK(got.passthrough == want.passthrough);
        CHECK(got.superseded == want.superseded);
        for (const auto& r : got.reports) CHECK_NOTHROW(validate(r));
        CHECK(got.passthrough.size() + got.superseded.size() +
                  [&] {
                      std::size_t k = 0;
                      for (const auto& r : got.reports) k += r.decisions.size();
                      return k;
                  }() ==
              w.size());
    }
}
