#pragma once

// Fundamental-signal generation under the five common-knowledge regimes.
//
// Each period produces one flow value F which the caller cumulates into the
// signal level S. Two historical-cost regimes draw F orthogonally to market
// prices (HCA pure flows, HRT adds a random trend term), the mark-to-market
// regime (FVA) echoes the lagged price change, and two target-reverting
// regimes pull the price toward a reference anchor, with (TRA-S) or without
// (TRA-F) a stochastic band.

#include <stdexcept>
#include <string>

#include "agora/rng.hpp"

namespace agora {

enum class RegimeKind { hca, hrt, fva, tra_f, tra_s };

inline constexpr RegimeKind k_all_regimes[] = {
    RegimeKind::hca, RegimeKind::hrt, RegimeKind::fva,
    RegimeKind::tra_f, RegimeKind::tra_s};

inline std::string to_string(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::hca: return "hca";
        case RegimeKind::hrt: return "hrt";
        case RegimeKind::fva: return "fva";
        case RegimeKind::tra_f: return "tra-f";
        case RegimeKind::tra_s: return "tra-s";
    }
    throw std::logic_error("to_string: bad RegimeKind");
}

inline RegimeKind regime_from_string(const std::string& name) {
    for (RegimeKind kind : k_all_regimes)
        if (to_string(kind) == name) return kind;
    throw std::invalid_argument("unknown regime '" + name +
                                "' (expected hca, hrt, fva, tra-f or tra-s)");
}

/// fixed: the target-reverting anchor is the fixed core value the signal is
/// initialized with (the starting price). This is the only variant whose
/// coupled price/signal dynamics are stable: the fundamentalist focal price
/// becomes anchor + noise, which pins the market.
/// cumulated: the anchor is the running signal level S_{t-1}. The level then
/// feeds back into its own flows and amplifies any tracking gap (S_t =
/// 2 S_{t-1} - p_t + noise), which blows up; kept for comparison.
/// lagged_flow: the anchor is the previous flow F_{t-1}; the literal
/// recursion diverges immediately; kept for comparison.
enum class TraAnchor { fixed, cumulated, lagged_flow };

/// unit: the estimation error is N(0,1) resampled into [-a, a].
/// scaled: it is a * (N(0,1) resampled into [-1, 1]), i.e. sigma shrinks
/// with the band.
enum class EpsilonSigma { unit, scaled };

struct RegimeParams {
    double a = 0.1;  ///< estimation-error band half-width; 0 disables the error
    double b = 1.0;  ///< HRT trend band width: the trend factor is U[-b/2, b/2]
    TraAnchor tra_anchor = TraAnchor::fixed;
    EpsilonSigma epsilon_sigma = EpsilonSigma::unit;

    void validate() const {
        if (a < 0.0) throw std::invalid_argument("RegimeParams: a must be >= 0");
        if (b < 0.0) throw std::invalid_argument("RegimeParams: b must be >= 0");
    }
};

/// Price history visible to the signal process: the current clearing price
/// and its two predecessors (FVA needs the two lags).
struct PriceHistory {
    double p = 0.0;
    double p_prev = 0.0;
    double p_prev2 = 0.0;
};

struct SignalStep {
    double flow = 0.0;
    bool jumpstarted = false;  ///< zero-avoidance replacement was applied
};

/// Evolving signal state. flow_prev starts at zero for every regime; level
/// is anchored at the initial price, and the jump-start keeps it positive.
/// target carries the fixed core value of the target-reverting regimes
/// (the initial price).
struct SignalState {
    double flow_prev = 0.0;
    double level = 0.0;   ///< S_{t-1}: cumulated flows, anchored at p0
    double target = 0.0;  ///< fixed reversion anchor (p0)

    void advance(const SignalStep& step) {
        level += step.flow;
        flow_prev = step.flow;
    }
};

/// Raw noise for one period, drawn in a fixed slot order whether or not the
/// active regime uses every slot. Keeping the schedule identical across
/// regimes is what lets a shared seed replay identical realizations under
/// each regime: regimes differ in what they use, never in what they draw.
/// The eps slot is skipped when a == 0 (the bounded draw would be
/// degenerate); a is shared by all regimes of a sweep, so the skip is too.
struct PeriodDraws {
    double core = 0.0;   ///< N(0,1) in [-1,1]: HCA/HRT flow noise, TRA-S band
    double trend = 0.0;  ///< U[-b/2, b/2]: HRT trend coefficient
    double eps = 0.0;    ///< estimation error, see EpsilonSigma
    double jump = 0.0;   ///< U[0,1): jump-start increment, used when triggered
};

template <UniformRandomSource Rng>
PeriodDraws draw_schedule(Rng& rng, const RegimeParams& rp) {
    PeriodDraws d;
    d.core = truncated_gaussian(rng, -1.0, 1.0);
    d.trend = uniform(rng, -0.5 * rp.b, 0.5 * rp.b);
    if (rp.a > 0.0) {
        d.eps = rp.epsilon_sigma == EpsilonSigma::unit
                    ? truncated_gaussian(rng, -rp.a, rp.a)
                    : rp.a * truncated_gaussian(rng, -1.0, 1.0);
    }
    d.jump = uniform(rng, 0.0, 1.0);
    return d;
}

/// Deterministic core: combines pre-drawn noise into the period flow.
/// If the cumulated level would fall to or below zero, the candidate flow is
/// replaced once by F_{t-1} + U[0,1) and the step flagged. The caller then
/// advances the state (level += flow).
inline SignalStep next_signal(RegimeKind kind, const SignalState& st,
                              const PriceHistory& px, const RegimeParams& rp,
                              const PeriodDraws& d) {
    const double anchor = rp.tra_anchor == TraAnchor::fixed ? st.target
                          : rp.tra_anchor == TraAnchor::cumulated
                              ? st.level
                              : st.flow_prev;
    double flow = 0.0;
    switch (kind) {
        case RegimeKind::hca: flow = d.core + d.eps; break;
        case RegimeKind::hrt: flow = d.core + st.flow_prev * d.trend + d.eps; break;
        case RegimeKind::fva: flow = (px.p_prev - px.p_prev2) + d.eps; break;
        case RegimeKind::tra_f: flow = -(px.p - anchor) + d.eps; break;
        case RegimeKind::tra_s: flow = -(px.p - anchor) + d.core + d.eps; break;
    }
    SignalStep step{flow, false};
    if (st.level + step.flow <= 0.0) {
        step.flow = st.flow_prev + d.jump;
        step.jumpstarted = true;
    }
    return step;
}

template <UniformRandomSource Rng>
SignalStep next_signal(RegimeKind kind, const SignalState& st,
                       const PriceHistory& px, const RegimeParams& rp,
                       Rng& rng) {
    return next_signal(kind, st, px, rp, draw_schedule(rng, rp));
}

}  // namespace agora
