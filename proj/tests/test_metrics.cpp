#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "agora/metrics.hpp"
#include "agora/rng.hpp"
#include "oracles.hpp"

using namespace agora;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("volatility as coefficient of variation", "[metrics]") {
    SECTION("constant series has zero volatility") {
        const std::vector<double> flat(100, 1000.0);
        REQUIRE(volatility_cv(flat) == 0.0);
    }

    SECTION("published cross-checks from alternating series") {
        // alternating mu +/- sigma realizes the population moments exactly
        std::vector<double> hrt(500), tras(500);
        for (std::size_t i = 0; i < 500; ++i) {
            hrt[i] = 1000.25 + (i % 2 ? 3.6688 : -3.6688);
            tras[i] = 1000.16 + (i % 2 ? 1.7446 : -1.7446);
        }
        REQUIRE_THAT(volatility_cv(hrt), WithinRel(3.6688 / 1000.25, 1e-9));
        REQUIRE_THAT(volatility_cv(hrt), WithinAbs(0.0036, 0.0002));
        REQUIRE_THAT(volatility_cv(tras), WithinRel(1.7446 / 1000.16, 1e-9));
        REQUIRE_THAT(volatility_cv(tras), WithinAbs(0.0017, 0.0002));
    }

    SECTION("scale invariance") {
        RngStream rng(21);
        std::vector<double> xs(300);
        for (double& x : xs) x = 900.0 + 200.0 * rng.next_double();
        const double base = volatility_cv(xs);
        for (double& x : xs) x *= 7.5;
        REQUIRE_THAT(volatility_cv(xs), WithinRel(base, 1e-12));
    }

    SECTION("log form emits log10(mu/sigma)") {
        std::vector<double> xs(100);
        for (std::size_t i = 0; i < 100; ++i) xs[i] = 1000.0 + (i % 2 ? 10.0 : -10.0);
        REQUIRE_THAT(volatility_cv(xs, VolatilityForm::log10),
                     WithinRel(std::log10(100.0), 1e-9));
    }

    SECTION("non-positive mean is undefined") {
        const std::vector<double> xs{-1.0, 1.0, -1.0, 1.0};
        REQUIRE(std::isnan(volatility_cv(xs)));
    }
}

TEST_CASE("exuberance measures", "[metrics]") {
    SECTION("perfect tracking gives zero everywhere") {
        const std::vector<double> prices(200, 1000.0);
        const std::vector<double> levels(200, 1000.0);
        const Exuberance ex = exuberance(prices, levels, 1000.0);
        REQUIRE(ex.q3_dt == 0.0);
        REQUIRE(ex.exub_range == 0.0);
    }

    SECTION("linear ramp of relative distances") {
        // constant level 1000, prices sweep d over [-0.01, 0.01]
        const std::size_t n = 500;
        std::vector<double> prices(n), levels(n, 1000.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = -0.01 + 0.02 * static_cast<double>(i) / (n - 1);
            prices[i] = 1000.0 * (1.0 + d);
        }
        const Exuberance ex = exuberance(prices, levels, 1000.0);
        REQUIRE_THAT(ex.exub_range, WithinRel(0.02 / 500.0, 1e-9));
        REQUIRE_THAT(ex.q3_dt, WithinAbs(0.005, 1e-6));
    }

    SECTION("first period is anchored at s0") {
        const std::vector<double> prices{1010.0, 1010.0};
        const std::vector<double> levels{1010.0, 1010.0};
        // d_1 = (1010 - 1000) / 1000, d_2 = 0
        const Exuberance ex = exuberance(prices, levels, 1000.0);
        REQUIRE_THAT(ex.exub_range, WithinRel(0.01 / 2.0, 1e-9));
    }
}

TEST_CASE("dissociation episode scanner", "[metrics]") {
    SECTION("constant gap never dissociates") {
        std::vector<double> prices(500), levels(500);
        for (std::size_t i = 0; i < 500; ++i) {
            prices[i] = 1000.0 + static_cast<double>(i % 7);
            levels[i] = prices[i] - 3.0;
        }
        const Dissociation d = dissociation(prices, levels, 2.0, 10);
        REQUIRE(d.pct == 0.0);
        REQUIRE(d.mean_len == 0.0);
    }

    SECTION("hand-built single excursion") {
        std::vector<double> prices(500, 1000.0), levels(500, 1000.0);
        for (std::size_t i = 100; i < 112; ++i) prices[i] = 1100.0;  // 12 periods
        const Dissociation d = dissociation(prices, levels, 2.0, 10);
        REQUIRE_THAT(d.pct, WithinRel(12.0 / 500.0, 1e-12));
        REQUIRE_THAT(d.mean_len, WithinRel(12.0, 1e-12));
    }

    SECTION("nine-period excursions fall below the duration threshold") {
        std::vector<double> prices(500, 1000.0), levels(500, 1000.0);
        for (std::size_t i = 100; i < 109; ++i) prices[i] = 1100.0;
        const Dissociation d = dissociation(prices, levels, 2.0, 10);
        REQUIRE(d.pct == 0.0);
        REQUIRE(d.mean_len == 0.0);
    }

    SECTION("agrees exactly with the quadratic-time oracle") {
        RngStream rng(31);
        for (int trial = 0; trial < 10'000; ++trial) {
            const std::size_t n = 30 + rng.next_u64() % 120;
            std::vector<double> prices(n), levels(n);
            double walk = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                walk += truncated_gaussian(rng, -1.0, 1.0);
                prices[i] = 1000.0 + walk;
                levels[i] = 1000.0 + 0.4 * walk + truncated_gaussian(rng, -1.0, 1.0);
            }
            const double sig = 0.5 + 2.0 * rng.next_double();
            const int min_run = 2 + static_cast<int>(rng.next_u64() % 12);
            const Dissociation got = dissociation(prices, levels, sig, min_run);
            const oracle::Episodes want =
                oracle::dissociation(prices, levels, sig, min_run);
            REQUIRE(got.pct == want.pct);
            REQUIRE(got.mean_len == want.mean_len);
        }
    }
}

TEST_CASE("liquidity summary", "[metrics]") {
    std::vector<StepRecord> records(40);
    SECTION("uniform matched mass") {
        for (auto& r : records) {
            r.branch = ClearingBranch::interior;
            r.frac_s = r.frac_d = 0.75;
            r.overlap_ratio = 0.6;
        }
        const LiquidityStats ls = liquidity(records);
        REQUIRE_THAT(ls.matched_frac, WithinRel(0.75, 1e-12));
        REQUIRE_THAT(ls.satisfied_supply, WithinRel(0.75, 1e-12));
        REQUIRE_THAT(ls.clearing_ratio, WithinRel(0.6, 1e-12));
    }
    SECTION("all fallback steps clear nothing") {
        for (auto& r : records) {
            r.branch = ClearingBranch::fallback;
            r.frac_s = r.frac_d = 0.0;
            r.overlap_ratio = 0.0;
        }
        const LiquidityStats ls = liquidity(records);
        REQUIRE(ls.matched_frac == 0.0);
        REQUIRE(ls.satisfied_supply == 0.0);
    }
}

TEST_CASE("cell aggregation", "[metrics]") {
    SECTION("single replication collapses mean and median") {
        SeriesMetrics m;
        m.mean_price = 1000.5;
        m.cv = 0.002;
        const CellAggregate cell = aggregate_cell(1, 2, 0.05, 0.10, {&m, 1});
        REQUIRE(cell.mean_price_mean == 1000.5);
        REQUIRE(cell.mean_price_median == 1000.5);
        REQUIRE(cell.reps == 1);
    }

    SECTION("volatility width from the cv quartiles") {
        std::vector<SeriesMetrics> reps(3);
        reps[0].cv = 1.0;
        reps[1].cv = 2.0;
        reps[2].cv = 3.0;
        const CellAggregate cell = aggregate_cell(0, 0, 0.0, 0.0, reps);
        REQUIRE_THAT(cell.cv_q3, WithinRel(2.5, 1e-12));
        REQUIRE_THAT(cell.cv_width, WithinRel((2.5 - 1.5) / 2.0, 1e-12));
    }

    SECTION("undefined markers are excluded and counted") {
        std::vector<SeriesMetrics> reps(4);
        for (auto& m : reps) m.corr_cross = 0.5;
        reps[2].corr_cross = k_nan;
        const CellAggregate cell = aggregate_cell(0, 0, 0.0, 0.0, reps);
        REQUIRE(cell.corr_cross_na == 1);
        REQUIRE_THAT(cell.corr_cross_mean, WithinRel(0.5, 1e-12));
    }

    SECTION("reordering replications leaves aggregates unchanged") {
        RngStream rng(5);
        std::vector<SeriesMetrics> reps(64);
        for (auto& m : reps) {
            m.mean_price = 995.0 + 10.0 * rng.next_double();
            m.cv = 0.001 + 0.01 * rng.next_double();
            m.dissoc_pct = rng.next_double();
            m.bf_pass = rng.next_double() < 0.9 ? 1.0 : 0.0;
        }
        const CellAggregate a = aggregate_cell(0, 0, 0.0, 0.0, reps);
        std::shuffle(reps.begin(), reps.end(), std::mt19937{99});
        const CellAggregate b = aggregate_cell(0, 0, 0.0, 0.0, reps);
        REQUIRE_THAT(a.mean_price_mean, WithinAbs(b.mean_price_mean, 1e-10));
        REQUIRE(a.mean_price_median == b.mean_price_median);
        REQUIRE(a.cv_q3 == b.cv_q3);
        REQUIRE_THAT(a.bf_pass_rate, WithinAbs(b.bf_pass_rate, 1e-12));
    }

    SECTION("empty input is rejected") {
        REQUIRE_THROWS_AS(aggregate_cell(0, 0, 0.0, 0.0, {}), std::invalid_argument);
    }
}

TEST_CASE("grid summary", "[metrics]") {
    std::vector<CellAggregate> cells(9);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        cells[i].i_ms = static_cast<int>(i) / 3;
        cells[i].i_md = static_cast<int>(i) % 3;
        cells[i].mean_price_mean = 1000.0;
        cells[i].mean_price_median = 1000.0;
        cells[i].cv_mean = 0.001 * static_cast<double>(i + 1);
    }

    SECTION("identical cells collapse the summary") {
        const GridSummary g = summarize_grid(cells);
        const Summary7& s = g.metrics.at("mean_price").over_means;
        REQUIRE(s.min == s.max);
        REQUIRE(s.mean == 1000.0);
    }

    SECTION("summary ordering invariant") {
        const GridSummary g = summarize_grid(cells);
        const Summary7& s = g.metrics.at("cv").over_means;
        REQUIRE(s.min <= s.q1);
        REQUIRE(s.q1 <= s.median);
        REQUIRE(s.median <= s.q3);
        REQUIRE(s.q3 <= s.max);
    }

    SECTION("empty grid is rejected") {
        REQUIRE_THROWS_AS(summarize_grid({}), std::invalid_argument);
    }
}

TEST_CASE("series metrics handle short diverged runs", "[metrics]") {
    SeriesResult sr;
    sr.diverged = true;
    sr.diverged_at = 1;
    const SeriesMetrics m = compute_series_metrics(sr);
    REQUIRE(m.diverged);
    REQUIRE(std::isnan(m.mean_price));
    REQUIRE(std::isnan(m.corr_cross));
}
