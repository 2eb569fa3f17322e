#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "agora/market.hpp"

using namespace agora;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinULP;

namespace {

MarketParams params(double m_s = 0.5, double m_d = 0.5) {
    MarketParams mp;
    mp.m_s = m_s;
    mp.m_d = m_d;
    return mp;
}

}  // namespace

TEST_CASE("expectation formation", "[market]") {
    SECTION("rest point: flat prices, no revisions, no signal") {
        const MarketState st = initial_market_state(1000.0);
        const FocalExpectations e = focal_expectations(st, params(), 0.0);
        REQUIRE(e.spec_s == 1000.0);
        REQUIRE(e.fund_s == 1000.0);
        REQUIRE(e.spec_d == 1000.0);
        REQUIRE(e.fund_d == 1000.0);
    }

    SECTION("hand evaluation with trend, revision and signal") {
        MarketState st;
        st.p = 1000.0;
        st.p_prev = 990.0;
        st.rev_spec_s = st.rev_fund_s = st.rev_spec_d = st.rev_fund_d = 2.0;
        const FocalExpectations e = focal_expectations(st, params(), 1.0);
        // 1000 + 0.5*10 - 0.5*2 (+ F for the fundamentalist)
        REQUIRE_THAT(e.spec_s, WithinULP(1004.0, 2));
        REQUIRE_THAT(e.fund_s, WithinULP(1005.0, 2));
        REQUIRE_THAT(e.spec_d, WithinULP(1004.0, 2));
        REQUIRE_THAT(e.fund_d, WithinULP(1005.0, 2));
    }

    SECTION("plus sign flips the revision term") {
        MarketState st = initial_market_state(1000.0);
        st.rev_spec_s = 4.0;
        MarketParams mp = params();
        mp.delta_sign = DeltaSign::plus;
        REQUIRE_THAT(focal_expectations(st, mp, 0.0).spec_s, WithinULP(1002.0, 2));
        mp.delta_sign = DeltaSign::minus;
        REQUIRE_THAT(focal_expectations(st, mp, 0.0).spec_s, WithinULP(998.0, 2));
    }

    SECTION("fundamentalist minus speculator equals gamma * F when revisions match") {
        RngStream rng(31);
        for (int i = 0; i < 10'000; ++i) {
            MarketState st;
            st.p = 500.0 + 1000.0 * rng.next_double();
            st.p_prev = st.p + 20.0 * (rng.next_double() - 0.5);
            const double rev = 10.0 * (rng.next_double() - 0.5);
            st.rev_spec_s = st.rev_fund_s = rev;
            st.rev_spec_d = st.rev_fund_d = -rev;
            MarketParams mp = params(rng.next_double(), rng.next_double());
            mp.gamma = 2.0 * rng.next_double();
            const double flow = 4.0 * (rng.next_double() - 0.5);
            const FocalExpectations e = focal_expectations(st, mp, flow);
            REQUIRE_THAT(e.fund_s - e.spec_s, WithinAbs(mp.gamma * flow, 1e-9));
            REQUIRE_THAT(e.fund_d - e.spec_d, WithinAbs(mp.gamma * flow, 1e-9));
        }
    }
}

TEST_CASE("side bounds", "[market]") {
    const FocalExpectations e{110.0, 100.0, 95.0, 105.0};
    const SideBounds b = side_bounds(e);
    REQUIRE(b.lo_s == 100.0);
    REQUIRE(b.hi_s == 110.0);
    REQUIRE(b.lo_d == 95.0);
    REQUIRE(b.hi_d == 105.0);

    SECTION("swapping the two investors leaves bounds unchanged") {
        const SideBounds swapped =
            side_bounds(FocalExpectations{e.fund_s, e.spec_s, e.fund_d, e.spec_d});
        REQUIRE(swapped.lo_s == b.lo_s);
        REQUIRE(swapped.hi_s == b.hi_s);
        REQUIRE(swapped.lo_d == b.lo_d);
        REQUIRE(swapped.hi_d == b.hi_d);
    }

    SECTION("equal expectations give a degenerate interval") {
        const SideBounds d = side_bounds(FocalExpectations{100.0, 100.0, 90.0, 90.0});
        REQUIRE(d.lo_s == d.hi_s);
        REQUIRE(d.width_d() == 0.0);
    }
}

TEST_CASE("clearing rule hand cases", "[market]") {
    const MarketParams mp = params();

    SECTION("identical intervals clear at the midpoint") {
        const SideBounds b{900.0, 1100.0, 900.0, 1100.0};
        const ClearingOutcome oc = clear_with_tick(b, 1000.0, mp, 0.0);
        REQUIRE(oc.branch == ClearingBranch::interior);
        REQUIRE_THAT(oc.price, WithinULP(1000.0, 2));
        REQUIRE_THAT(oc.frac_s, WithinULP(0.5, 2));
        REQUIRE_THAT(oc.frac_d, WithinULP(0.5, 2));
        REQUIRE_THAT(oc.overlap_ratio, WithinULP(1.0, 2));
    }

    SECTION("overlapping intervals") {
        const SideBounds b{90.0, 110.0, 100.0, 120.0};
        const ClearingOutcome oc = clear_with_tick(b, 100.0, mp, 0.0);
        REQUIRE(oc.branch == ClearingBranch::interior);
        REQUIRE_THAT(oc.price, WithinULP(105.0, 2));
        REQUIRE_THAT(oc.frac_s, WithinULP(0.75, 2));
        REQUIRE_THAT(oc.frac_d, WithinULP(0.75, 2));
        REQUIRE_THAT(oc.overlap_ratio, WithinAbs(10.0 / 30.0, 1e-12));
    }

    SECTION("supply above demand posts a price with zero matched mass") {
        const SideBounds b{110.0, 120.0, 90.0, 100.0};
        const ClearingOutcome oc = clear_with_tick(b, 100.0, mp, 0.0);
        REQUIRE(oc.branch == ClearingBranch::interior);
        REQUIRE_THAT(oc.price, WithinULP(105.0, 2));
        REQUIRE(oc.frac_s == 0.0);
        REQUIRE(oc.frac_d == 0.0);
        REQUIRE(oc.overlap_ratio == 0.0);
    }

    SECTION("supply below demand is the fallback branch") {
        const SideBounds b{85.0, 95.0, 100.0, 120.0};
        RngStream rng(9);
        for (int i = 0; i < 1000; ++i) {
            const ClearingOutcome oc = clear(b, 1000.0, mp, rng);
            REQUIRE(oc.branch == ClearingBranch::fallback);
            REQUIRE(oc.price >= 1000.0);
            REQUIRE(oc.price < 1000.01);
            REQUIRE(oc.frac_s == 0.0);
            REQUIRE(oc.frac_d == 0.0);
        }
    }

    SECTION("gaussian tick mode stays within a hundredth") {
        MarketParams g = mp;
        g.tick_mode = TickMode::gaussian;
        const SideBounds b{85.0, 95.0, 100.0, 120.0};
        RngStream rng(10);
        for (int i = 0; i < 1000; ++i) {
            const ClearingOutcome oc = clear(b, 1000.0, g, rng);
            REQUIRE(oc.price >= 1000.0);
            REQUIRE(oc.price <= 1000.01);
        }
    }

    SECTION("degenerate intervals on both sides fall back") {
        const SideBounds b{100.0, 100.0, 90.0, 90.0};  // supply above demand
        const ClearingOutcome oc = clear_with_tick(b, 100.0, mp, 0.005);
        REQUIRE(oc.branch == ClearingBranch::fallback);
        REQUIRE_THAT(oc.price, WithinULP(100.005, 2));
    }

    SECTION("zero-width side trades fully when the price reaches it") {
        const SideBounds b{100.0, 100.0, 90.0, 110.0};
        const ClearingOutcome oc = clear_with_tick(b, 100.0, mp, 0.0);
        REQUIRE(oc.branch == ClearingBranch::interior);
        REQUIRE_THAT(oc.price, WithinULP(100.0, 2));
        REQUIRE(oc.frac_s == 1.0);
        REQUIRE_THAT(oc.frac_d, WithinULP(0.5, 2));
    }

    SECTION("non-positive price is floored and flagged") {
        const SideBounds b{-200.0, -100.0, -150.0, -50.0};
        const ClearingOutcome oc = clear_with_tick(b, 1.0, mp, 0.0);
        REQUIRE(oc.floored);
        REQUIRE(oc.price == mp.price_floor);
    }

    SECTION("non-finite bounds are rejected") {
        const SideBounds b{0.0, std::numeric_limits<double>::infinity(), 0.0, 1.0};
        REQUIRE_THROWS_AS(clear_with_tick(b, 1.0, mp, 0.0), std::invalid_argument);
    }
}

TEST_CASE("clearing properties over random bounds", "[market]") {
    RngStream rng(77);
    const MarketParams mp = params();
    int interior_seen = 0;
    for (int i = 0; i < 100'000; ++i) {
        SideBounds b;
        b.lo_s = uniform(rng, 500.0, 1500.0);
        b.lo_d = uniform(rng, 500.0, 1500.0);
        b.hi_s = b.lo_s + uniform(rng, 0.01, 100.0);
        b.hi_d = b.lo_d + uniform(rng, 0.01, 100.0);
        const ClearingOutcome oc = clear_with_tick(b, 1000.0, mp, 0.0);
        if (oc.branch != ClearingBranch::interior) continue;
        ++interior_seen;
        // unclipped matched masses agree (algebraic identity of the rule)
        REQUIRE_THAT(oc.frac_s_raw, WithinAbs(oc.frac_d_raw, 1e-9));
        // the posted price stays within the envelope of the two intervals
        REQUIRE(oc.price >= std::min(b.lo_s, b.lo_d) - 1e-9);
        REQUIRE(oc.price <= std::max(b.hi_s, b.hi_d) + 1e-9);
    }
    REQUIRE(interior_seen > 10'000);
}

TEST_CASE("translation covariance of the interior price", "[market]") {
    RngStream rng(78);
    const MarketParams mp = params();
    for (int i = 0; i < 10'000; ++i) {
        SideBounds b;
        b.lo_s = uniform(rng, 900.0, 1100.0);
        b.lo_d = uniform(rng, 900.0, 1100.0);
        b.hi_s = b.lo_s + uniform(rng, 0.1, 50.0);
        b.hi_d = b.lo_d + uniform(rng, 0.1, 50.0);
        const double c = uniform(rng, -200.0, 200.0);
        const SideBounds shifted{b.lo_s + c, b.hi_s + c, b.lo_d + c, b.hi_d + c};
        const ClearingOutcome base = clear_with_tick(b, 1000.0, mp, 0.0);
        const ClearingOutcome moved = clear_with_tick(shifted, 1000.0 + c, mp, 0.0);
        REQUIRE(base.branch == moved.branch);
        if (base.branch == ClearingBranch::interior)
            REQUIRE_THAT(moved.price, WithinAbs(base.price + c, 1e-8));
    }
}

TEST_CASE("near-consensus interior price collapses to the current price",
          "[market]") {
    // exact consensus hits the fallback branch; shrinking intervals around
    // p keep the interior price pinned at p
    const MarketParams mp = params();
    for (double w : {1e-3, 1e-6, 1e-9}) {
        const SideBounds b{1000.0 - w, 1000.0 + w, 1000.0 - w, 1000.0 + w};
        const ClearingOutcome oc = clear_with_tick(b, 1000.0, mp, 0.0);
        REQUIRE(oc.branch == ClearingBranch::interior);
        REQUIRE_THAT(oc.price, WithinAbs(1000.0, 1e-6));
    }
    const SideBounds exact{1000.0, 1000.0, 1000.0, 1000.0};
    REQUIRE(clear_with_tick(exact, 1000.0, mp, 0.0).branch ==
            ClearingBranch::fallback);
}

TEST_CASE("revision update", "[market]") {
    MarketState st = initial_market_state(1000.0);

    SECTION("perfect foresight zeroes every revision") {
        const FocalExpectations e{1000.0, 1000.0, 1000.0, 1000.0};
        const MarketState next = update_deltas(st, e, 1000.0);
        REQUIRE(next.rev_spec_s == 0.0);
        REQUIRE(next.rev_fund_s == 0.0);
        REQUIRE(next.rev_spec_d == 0.0);
        REQUIRE(next.rev_fund_d == 0.0);
    }

    SECTION("definition and price shift") {
        const FocalExpectations e{1005.0, 1002.0, 998.0, 1001.0};
        const MarketState next = update_deltas(st, e, 1000.0);
        REQUIRE(next.rev_spec_s == 5.0);
        REQUIRE(next.rev_fund_s == 2.0);
        REQUIRE(next.rev_spec_d == -2.0);
        REQUIRE(next.rev_fund_d == 1.0);
        REQUIRE(next.p == 1000.0);
        REQUIRE(next.p_prev == 1000.0);
    }

    SECTION("two-step hand trace") {
        MarketState s = initial_market_state(100.0);
        const FocalExpectations e1{101.0, 102.0, 99.0, 100.0};
        s = update_deltas(s, e1, 101.5);
        REQUIRE(s.p == 101.5);
        REQUIRE(s.p_prev == 100.0);
        REQUIRE_THAT(s.rev_fund_s, WithinULP(0.5, 2));
        const FocalExpectations e2{103.0, 104.0, 101.0, 102.0};
        s = update_deltas(s, e2, 102.0);
        REQUIRE(s.p == 102.0);
        REQUIRE(s.p_prev == 101.5);
        REQUIRE_THAT(s.rev_spec_s, WithinULP(1.0, 2));
    }
}

TEST_CASE("market parameter validation", "[market]") {
    MarketParams mp;
    mp.m_s = 1.5;
    REQUIRE_THROWS_AS(mp.validate(), std::invalid_argument);
    mp = MarketParams{};
    mp.beta = -0.5;
    REQUIRE_THROWS_AS(mp.validate(), std::invalid_argument);
    mp = MarketParams{};
    mp.price_floor = 0.0;
    REQUIRE_THROWS_AS(mp.validate(), std::invalid_argument);
}
