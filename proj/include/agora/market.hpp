#pragma once

// Market engine: focal-price expectations of the four extreme investors,
// per-side bid intervals, the clearing rule with its fallback tick, and the
// forecast-revision state.
//
// All functions here are pure given (state, params, draws) and safe to run
// in parallel across independent runs.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>

#include "agora/rng.hpp"

namespace agora {

/// minus: the forecast revision enters corrective (overestimating lowers the
/// next forecast). plus: the revision reinforces instead.
enum class DeltaSign { minus, plus };

/// uniform: fallback tick is 0.01 * U[0,1).
/// gaussian: fallback tick is N(0,1) resampled into [0,1], divided by 100.
enum class TickMode { uniform, gaussian };

/// completed: expectations entering the next call chase the last completed
/// price change (p_{t-1} - p_{t-2}); orders are posted before the current
/// call publishes, so the in-flight change is not yet observable.
/// current: they chase (p_t - p_{t-1}) including the price just called.
enum class TrendLag { completed, current };

/// uniform: both extreme investors weight the market trend by the side
/// confidence m_j.
/// chartist: the trend weight scales with chartism, m_j * (1 - phi), so the
/// fully fundamentalist extreme ignores the market trend.
enum class TrendWeight { uniform, chartist };

struct MarketParams {
    double m_s = 0.5;  ///< supply-side market confidence, in [0,1]
    double m_d = 0.5;  ///< demand-side market confidence, in [0,1]
    double beta = 0.5;
    double gamma = 1.0;
    DeltaSign delta_sign = DeltaSign::minus;
    TickMode tick_mode = TickMode::uniform;
    TrendLag trend_lag = TrendLag::current;
    TrendWeight trend_weight = TrendWeight::uniform;
    double price_floor = 0.01;

    void validate() const {
        if (m_s < 0.0 || m_s > 1.0 || m_d < 0.0 || m_d > 1.0)
            throw std::invalid_argument("MarketParams: m_s, m_d must be in [0,1]");
        if (beta < 0.0 || gamma < 0.0)
            throw std::invalid_argument("MarketParams: beta, gamma must be >= 0");
        if (price_floor <= 0.0)
            throw std::invalid_argument("MarketParams: price_floor must be > 0");
    }
};

/// Focal prices of the four extreme investors: per market side, the fully
/// speculative (phi = 0) and the fully fundamentalist (phi = 1) strategist.
struct FocalExpectations {
    double spec_s = 0.0;
    double fund_s = 0.0;
    double spec_d = 0.0;
    double fund_d = 0.0;
};

/// Last three clearing prices plus the four forecast revisions, one per
/// extreme investor. A revision is the previous expectation of the current
/// price minus the price actually realized.
struct MarketState {
    double p = 1000.0;
    double p_prev = 1000.0;
    double p_prev2 = 1000.0;
    double rev_spec_s = 0.0;
    double rev_fund_s = 0.0;
    double rev_spec_d = 0.0;
    double rev_fund_d = 0.0;
};

inline MarketState initial_market_state(double p0) {
    return MarketState{p0, p0, p0, 0.0, 0.0, 0.0, 0.0};
}

/// E = p + m * trend + sign * beta * revision + phi * gamma * F, with the
/// trend picked by MarketParams::trend_lag.
inline FocalExpectations focal_expectations(const MarketState& st,
                                            const MarketParams& mp,
                                            double flow) {
    const double sign = mp.delta_sign == DeltaSign::minus ? -1.0 : 1.0;
    const double trend = mp.trend_lag == TrendLag::completed
                             ? st.p_prev - st.p_prev2
                             : st.p - st.p_prev;
    const auto form = [&](double m, double revision, double phi) {
        const double mw =
            mp.trend_weight == TrendWeight::chartist ? m * (1.0 - phi) : m;
        return st.p + mw * trend + sign * mp.beta * revision + phi * mp.gamma * flow;
    };
    return FocalExpectations{
        form(mp.m_s, st.rev_spec_s, 0.0), form(mp.m_s, st.rev_fund_s, 1.0),
        form(mp.m_d, st.rev_spec_d, 0.0), form(mp.m_d, st.rev_fund_d, 1.0)};
}

/// Per-side focal-price interval: lo/hi are the min/max of the two extreme
/// expectations, so lo <= hi by construction.
struct SideBounds {
    double lo_s = 0.0;
    double hi_s = 0.0;
    double lo_d = 0.0;
    double hi_d = 0.0;

    double width_s() const { return hi_s - lo_s; }
    double width_d() const { return hi_d - lo_d; }
};

inline SideBounds side_bounds(const FocalExpectations& e) {
    return SideBounds{std::min(e.spec_s, e.fund_s), std::max(e.spec_s, e.fund_s),
                      std::min(e.spec_d, e.fund_d), std::max(e.spec_d, e.fund_d)};
}

enum class ClearingBranch { interior, fallback };

struct ClearingOutcome {
    double price = 0.0;
    ClearingBranch branch = ClearingBranch::interior;
    double frac_s = 0.0;      ///< matched supply mass, clipped to [0,1]
    double frac_d = 0.0;      ///< matched demand mass, clipped to [0,1]
    double frac_s_raw = 0.0;  ///< pre-clip value; equals frac_d_raw interior
    double frac_d_raw = 0.0;
    double overlap_ratio = 0.0;  ///< interval intersection / union length
    bool floored = false;        ///< price hit the floor and was raised to it
};

/// Intersection-over-union of the two focal intervals; 0 when the union has
/// zero length.
inline double interval_overlap_ratio(const SideBounds& b) {
    const double inter =
        std::max(0.0, std::min(b.hi_s, b.hi_d) - std::max(b.lo_s, b.lo_d));
    const double uni = b.width_s() + b.width_d() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

template <UniformRandomSource Rng>
double draw_tick(Rng& rng, TickMode mode) {
    return mode == TickMode::uniform ? 0.01 * uniform(rng, 0.0, 1.0)
                                     : truncated_gaussian(rng, 0.0, 1.0) / 100.0;
}

namespace detail {

template <class TickFn>
ClearingOutcome clear_impl(const SideBounds& b, double p_t,
                           const MarketParams& mp, TickFn&& tick) {
    if (!std::isfinite(b.lo_s) || !std::isfinite(b.hi_s) ||
        !std::isfinite(b.lo_d) || !std::isfinite(b.hi_d))
        throw std::invalid_argument("clear: non-finite side bounds");

    ClearingOutcome out;
    out.overlap_ratio = interval_overlap_ratio(b);
    const double w_s = b.width_s();
    const double w_d = b.width_d();

    if (b.hi_s <= b.lo_d || w_s + w_d <= 0.0) {
        // No clearing price exists: the auctioneer posts the old price plus a
        // small tick.
        out.branch = ClearingBranch::fallback;
        out.price = p_t + tick();
    } else {
        out.branch = ClearingBranch::interior;
        out.price = (b.hi_s * w_d + b.lo_d * w_s) / (w_s + w_d);
        // Matched mass per side under the uniform focal-price densities. A
        // zero-width side trades fully when the price is weakly on its
        // trading side of the point, else not at all.
        out.frac_s_raw = w_s > 0.0 ? (out.price - b.lo_s) / w_s
                                   : (out.price >= b.lo_s ? 1.0 : 0.0);
        out.frac_d_raw = w_d > 0.0 ? (b.hi_d - out.price) / w_d
                                   : (out.price <= b.hi_d ? 1.0 : 0.0);
        out.frac_s = std::clamp(out.frac_s_raw, 0.0, 1.0);
        out.frac_d = std::clamp(out.frac_d_raw, 0.0, 1.0);
    }

    if (out.price <= 0.0) {
        out.price = mp.price_floor;
        out.floored = true;
    }
    return out;
}

}  // namespace detail

/// Clearing rule. Fallback branch when the supply interval tops out at or
/// below the start of the demand interval, or when both intervals are
/// degenerate; interior branch otherwise (including intervals disjoint the
/// other way round, which post a price with zero matched mass). A
/// non-positive price is floored at price_floor and flagged.
template <UniformRandomSource Rng>
ClearingOutcome clear(const SideBounds& b, double p_t, const MarketParams& mp,
                      Rng& rng) {
    return detail::clear_impl(b, p_t, mp,
                              [&] { return draw_tick(rng, mp.tick_mode); });
}

/// Variant with an externally supplied tick value (drawn lazily in the rng
/// overload; fixed here, e.g. for tests).
inline ClearingOutcome clear_with_tick(const SideBounds& b, double p_t,
                                       const MarketParams& mp, double eta) {
    return detail::clear_impl(b, p_t, mp, [eta] { return eta; });
}

/// Records the realized price: each revision becomes expectation minus
/// realized, and the price history shifts.
inline MarketState update_deltas(const MarketState& st,
                                 const FocalExpectations& e, double realized) {
    MarketState next;
    next.p = realized;
    next.p_prev = st.p;
    next.p_prev2 = st.p_prev;
    next.rev_spec_s = e.spec_s - realized;
    next.rev_fund_s = e.fund_s - realized;
    next.rev_spec_d = e.spec_d - realized;
    next.rev_fund_d = e.fund_d - realized;
    return next;
}

}  // namespace agora
