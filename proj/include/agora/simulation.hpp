#pragma once

// One seeded run of T periods: signal generation, expectation formation,
// clearing, state updates, with the full trajectory recorded.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "agora/market.hpp"
#include "agora/regimes.hpp"
#include "agora/rng.hpp"

namespace agora {

struct RunConfig {
    RegimeKind regime = RegimeKind::hrt;
    MarketParams market{};
    RegimeParams regime_params{};
    int periods = 500;
    double p0 = 1000.0;
    std::uint64_t seed = 42;

    void validate() const {
        if (periods < 2) throw std::invalid_argument("RunConfig: periods must be >= 2");
        if (!(p0 > 0.0)) throw std::invalid_argument("RunConfig: p0 must be > 0");
        market.validate();
        regime_params.validate();
    }
};

struct StepRecord {
    int t = 0;
    double price = 0.0;
    double flow = 0.0;   ///< F_t
    double level = 0.0;  ///< S_t (after cumulating F_t)
    ClearingBranch branch = ClearingBranch::interior;
    double frac_s = 0.0;
    double frac_d = 0.0;
    double overlap_ratio = 0.0;
    bool auctioneer = false;  ///< fallback tick used
    bool jumpstarted = false;
    bool floored = false;
};

/// Trajectory of one run. A run whose state overflows to non-finite values
/// is flagged as diverged at the offending period and keeps the finite
/// prefix; divergence is data, not an error (the mark-to-market regime blows
/// up by design in parts of the confidence space).
struct SeriesResult {
    std::vector<StepRecord> records;
    double p0 = 1000.0;
    double s0 = 1000.0;  ///< signal anchor S_0 (= p0)
    bool diverged = false;
    int diverged_at = 0;
    int fallback_steps = 0;
    int jumpstart_steps = 0;
    int floored_steps = 0;

    double auctioneer_pct() const {
        return records.empty() ? 0.0
                               : static_cast<double>(fallback_steps) / records.size();
    }
    double jumpstart_pct() const {
        return records.empty() ? 0.0
                               : static_cast<double>(jumpstart_steps) / records.size();
    }
    double floored_pct() const {
        return records.empty() ? 0.0
                               : static_cast<double>(floored_steps) / records.size();
    }
};

/// Core loop with injectable noise: draw() yields the period's PeriodDraws,
/// tick() the fallback tick. Production code routes these to the two derived
/// role streams; tests can pin them.
template <class DrawFn, class TickFn>
SeriesResult run_series_with(const RunConfig& cfg, DrawFn&& draw, TickFn&& tick) {
    cfg.validate();

    SeriesResult out;
    out.p0 = cfg.p0;
    out.s0 = cfg.p0;
    out.records.reserve(static_cast<std::size_t>(cfg.periods));

    MarketState mkt = initial_market_state(cfg.p0);
    SignalState sig{0.0, cfg.p0, cfg.p0};

    for (int t = 1; t <= cfg.periods; ++t) {
        const PeriodDraws draws = draw();
        const PriceHistory px{mkt.p, mkt.p_prev, mkt.p_prev2};
        const SignalStep step = next_signal(cfg.regime, sig, px, cfg.regime_params, draws);
        sig.advance(step);

        const FocalExpectations ex = focal_expectations(mkt, cfg.market, step.flow);
        const SideBounds bounds = side_bounds(ex);
        if (!std::isfinite(step.flow) || !std::isfinite(sig.level) ||
            !std::isfinite(bounds.lo_s) || !std::isfinite(bounds.hi_s) ||
            !std::isfinite(bounds.lo_d) || !std::isfinite(bounds.hi_d)) {
            out.diverged = true;
            out.diverged_at = t;
            break;
        }

        const ClearingOutcome oc = detail::clear_impl(bounds, mkt.p, cfg.market, tick);
        mkt = update_deltas(mkt, ex, oc.price);

        out.records.push_back(StepRecord{
            t, oc.price, step.flow, sig.level, oc.branch, oc.frac_s, oc.frac_d,
            oc.overlap_ratio, oc.branch == ClearingBranch::fallback,
            step.jumpstarted, oc.floored});
        if (oc.branch == ClearingBranch::fallback) ++out.fallback_steps;
        if (step.jumpstarted) ++out.jumpstart_steps;
        if (oc.floored) ++out.floored_steps;
    }
    return out;
}

/// Deterministic in cfg, including the seed.
inline SeriesResult run_series(const RunConfig& cfg) {
    RngStream sig_rng = make_stream(cfg.seed, StreamRole::signal);
    RngStream mkt_rng = make_stream(cfg.seed, StreamRole::market);
    return run_series_with(
        cfg, [&] { return draw_schedule(sig_rng, cfg.regime_params); },
        [&] { return draw_tick(mkt_rng, cfg.market.tick_mode); });
}

/// Identifies the cell a batch of replications belongs to; replication r of
/// the batch runs with derive_seed({base_seed, i_ms, i_md, r}).
struct CellSeed {
    std::uint64_t base_seed = 42;
    int i_ms = 0;
    int i_md = 0;
};

inline RunConfig replication_config(RunConfig cfg, const CellSeed& cell, int rep) {
    cfg.seed = derive_seed(SeedSpec{cell.base_seed, cell.i_ms, cell.i_md, rep});
    return cfg;
}

/// Runs `reps` replications of one cell. Results are indexed by replication
/// and independent of execution order; `workers` > 1 slices the replication
/// range across threads.
inline std::vector<SeriesResult> run_replications(const RunConfig& cfg, int reps,
                                                  const CellSeed& cell,
                                                  int workers = 1) {
    if (reps < 1) throw std::invalid_argument("run_replications: reps must be >= 1");
    std::vector<SeriesResult> results(static_cast<std::size_t>(reps));
    const auto run_range = [&](int begin, int end) {
        for (int r = begin; r < end; ++r)
            results[static_cast<std::size_t>(r)] =
                run_series(replication_config(cfg, cell, r));
    };
    if (workers <= 1 || reps == 1) {
        run_range(0, reps);
        return results;
    }
    const int used = std::min(workers, reps);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    for (int w = 0; w < used; ++w) {
        const int begin = reps * w / used;
        const int end = reps * (w + 1) / used;
        pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace agora
