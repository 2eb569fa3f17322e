#pragma once

// Per-series, per-cell, and grid-level indicators: pricing, volatility,
// exuberance, vagary (dissociation), liquidity and information quality.
//
// NaN is the undefined-marker throughout; aggregation skips NaN values and
// reports exclusion counts for the metrics where they occur by design
// (correlations on zero-variance series, the variance test on truncated
// runs).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "agora/simulation.hpp"
#include "agora/stats.hpp"

namespace agora {

/// ratio: volatility is the plain coefficient of variation sigma/mu.
/// log10: emits log10(mu/sigma) instead, for comparison.
enum class VolatilityForm { ratio, log10 };

/// Defaults reproduce the published indicator levels: the dissociation band
/// sits at one standard deviation (occupancies near 30% are impossible at
/// two, since no series spends more than a quarter of its time beyond twice
/// its own standard deviation), and the variance-homogeneity check splits
/// the innovation series into two contiguous blocks (many small blocks
/// over-reject on serially correlated innovations). Both knobs stay
/// configurable.
struct MetricsConfig {
    int bf_blocks = 2;
    double bf_alpha = 0.05;
    double dissoc_sigmas = 1.0;
    int dissoc_min_run = 10;
    VolatilityForm volatility_form = VolatilityForm::ratio;
};

/// Coefficient of variation sigma/mu of a price series (population sigma).
/// NaN when the mean is not positive or fewer than two prices exist.
inline double volatility_cv(std::span<const double> prices,
                            VolatilityForm form = VolatilityForm::ratio) {
    if (prices.size() < 2) return k_nan;
    const Moments m = moments(prices);
    if (!(m.mean > 0.0)) return k_nan;
    if (form == VolatilityForm::log10)
        return m.stddev > 0.0 ? std::log10(m.mean / m.stddev) : k_nan;
    return m.stddev / m.mean;
}

struct Exuberance {
    double q3_dt = k_nan;       ///< Q3 of d_t = (p_t - S_{t-1}) / S_{t-1}
    double exub_range = k_nan;  ///< (max d_t - min d_t) / T
    double cv_time_q3 = k_nan;  ///< Q3 over time of |p_t/mu - 1| (alt. peak reading)
};

/// Relative distance between each price and the lagged signal level; s0
/// anchors the first period.
inline Exuberance exuberance(std::span<const double> prices,
                             std::span<const double> levels, double s0) {
    if (prices.empty() || prices.size() != levels.size()) return {};
    const std::size_t n = prices.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lag = i == 0 ? s0 : levels[i - 1];
        d[i] = (prices[i] - lag) / lag;
    }
    std::sort(d.begin(), d.end());
    Exuberance out;
    out.q3_dt = quantile_sorted(d, 0.75);
    out.exub_range = (d.back() - d.front()) / static_cast<double>(n);

    const Moments m = moments(prices);
    if (m.mean > 0.0) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i)
            dev[i] = std::abs(prices[i] / m.mean - 1.0);
        std::sort(dev.begin(), dev.end());
        out.cv_time_q3 = quantile_sorted(dev, 0.75);
    }
    return out;
}

struct Dissociation {
    double pct = 0.0;       ///< share of periods inside qualifying episodes
    double mean_len = 0.0;  ///< average episode length, 0 when none
};

/// Vagary scanner: D_t = p_t - S_t; an episode is a maximal run of
/// consecutive periods with |D_t - mean(D)| > sigmas * std(D) lasting at
/// least min_run periods. Population std; (0,0) when std(D) is zero.
inline Dissociation dissociation(std::span<const double> prices,
                                 std::span<const double> levels,
                                 double sigmas = 2.0, int min_run = 10) {
    if (prices.empty() || prices.size() != levels.size()) return {};
    const std::size_t n = prices.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = prices[i] - levels[i];

    const Moments m = moments(d);
    if (!(m.stddev > 0.0)) return {};
    const double band = sigmas * m.stddev;

    std::size_t inside = 0;
    std::size_t episodes = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        const bool out_of_band = i < n && std::abs(d[i] - m.mean) > band;
        if (out_of_band) {
            ++run;
        } else {
            if (run >= static_cast<std::size_t>(min_run)) {
                inside += run;
                ++episodes;
            }
            run = 0;
        }
    }
    Dissociation out;
    out.pct = static_cast<double>(inside) / static_cast<double>(n);
    out.mean_len = episodes > 0
                       ? static_cast<double>(inside) / static_cast<double>(episodes)
                       : 0.0;
    return out;
}

struct LiquidityStats {
    double matched_frac = k_nan;      ///< mean of (frac_s + frac_d)/2, 0 on fallback
    double satisfied_supply = k_nan;  ///< mean frac_s over all steps
    double clearing_ratio = k_nan;    ///< mean interval overlap/union ratio
};

inline LiquidityStats liquidity(std::span<const StepRecord> records) {
    if (records.empty()) return {};
    double matched = 0.0;
    double supply = 0.0;
    double overlap = 0.0;
    for (const StepRecord& r : records) {
        if (r.branch == ClearingBranch::interior)
            matched += 0.5 * (r.frac_s + r.frac_d);
        supply += r.frac_s;
        overlap += r.overlap_ratio;
    }
    const double n = static_cast<double>(records.size());
    return LiquidityStats{matched / n, supply / n, overlap / n};
}

/// All indicators of one run. Undefined entries are NaN.
struct SeriesMetrics {
    double mean_price = k_nan;
    double median_price = k_nan;
    double std_price = k_nan;
    double cv = k_nan;
    double cv_time_q3 = k_nan;
    double q3_dt = k_nan;
    double exub_range = k_nan;
    double dissoc_pct = k_nan;
    double dissoc_len = k_nan;
    double matched_frac = k_nan;
    double satisfied_supply = k_nan;
    double clearing_ratio = k_nan;
    double corr_cross = k_nan;  ///< Pearson corr of (p_t, S_t)
    double corr_lag = k_nan;    ///< Pearson corr of (p_t, S_{t-1})
    double bf_stat = k_nan;
    double bf_pass = k_nan;  ///< 1 pass, 0 fail, NaN not computable
    double auctioneer_pct = k_nan;
    double jumpstart_pct = k_nan;
    double floored_pct = k_nan;
    bool diverged = false;
};

inline SeriesMetrics compute_series_metrics(const SeriesResult& series,
                                            const MetricsConfig& cfg = {}) {
    SeriesMetrics out;
    out.diverged = series.diverged;
    const std::size_t n = series.records.size();
    if (n < 2) return out;

    std::vector<double> prices(n);
    std::vector<double> levels(n);
    for (std::size_t i = 0; i < n; ++i) {
        prices[i] = series.records[i].price;
        levels[i] = series.records[i].level;
    }

    const Moments pm = moments(prices);
    out.mean_price = pm.mean;
    out.std_price = pm.stddev;
    out.median_price = median(prices);
    out.cv = volatility_cv(prices, cfg.volatility_form);

    const Exuberance ex = exuberance(prices, levels, series.s0);
    out.q3_dt = ex.q3_dt;
    out.exub_range = ex.exub_range;
    out.cv_time_q3 = ex.cv_time_q3;

    const Dissociation dis =
        dissociation(prices, levels, cfg.dissoc_sigmas, cfg.dissoc_min_run);
    out.dissoc_pct = dis.pct;
    out.dissoc_len = dis.mean_len;

    const LiquidityStats liq = liquidity(series.records);
    out.matched_frac = liq.matched_frac;
    out.satisfied_supply = liq.satisfied_supply;
    out.clearing_ratio = liq.clearing_ratio;

    out.corr_cross = correlation(prices, levels, 0);
    out.corr_lag = correlation(prices, levels, 1);

    // Homoskedasticity is a property of the price innovations: the levels
    // inherit the cumulated signal's random walk and would trip the test on
    // serial correlation alone, so the variance-homogeneity check runs on
    // the first differences.
    if (n >= 2 * static_cast<std::size_t>(cfg.bf_blocks) + 1) {
        std::vector<double> changes(n - 1);
        for (std::size_t i = 1; i < n; ++i) changes[i - 1] = prices[i] - prices[i - 1];
        const BrownForsythe bf = brown_forsythe(changes, cfg.bf_blocks, cfg.bf_alpha);
        out.bf_stat = bf.statistic;
        out.bf_pass = bf.pass ? 1.0 : 0.0;
    }

    out.auctioneer_pct = series.auctioneer_pct();
    out.jumpstart_pct = series.jumpstart_pct();
    out.floored_pct = series.floored_pct();
    return out;
}

// ---------------------------------------------------------------------------
// Cell and grid aggregation
// ---------------------------------------------------------------------------

/// Per-(m_S, m_D) statistics across replications: the mean and the median of
/// each indicator, plus the volatility peak (Q3 across replications) and the
/// volatility width around the median.
struct CellAggregate {
    int i_ms = 0;
    int i_md = 0;
    double m_s = 0.0;
    double m_d = 0.0;
    int reps = 0;
    int diverged = 0;

    double mean_price_mean = k_nan, mean_price_median = k_nan;
    double median_price_mean = k_nan, median_price_median = k_nan;
    double std_price_mean = k_nan, std_price_median = k_nan;
    double cv_mean = k_nan, cv_median = k_nan;
    double cv_q3 = k_nan;     ///< Q3 of cv across replications ("75% peak")
    double cv_width = k_nan;  ///< (Q3 - Q1) / Q2 of cv across replications
    double cv_time_q3_mean = k_nan, cv_time_q3_median = k_nan;
    double q3_dt_mean = k_nan, q3_dt_median = k_nan;
    double exub_range_mean = k_nan, exub_range_median = k_nan;
    double dissoc_pct_mean = k_nan, dissoc_pct_median = k_nan;
    double dissoc_len_mean = k_nan, dissoc_len_median = k_nan;
    double matched_frac_mean = k_nan, matched_frac_median = k_nan;
    double satisfied_supply_mean = k_nan, satisfied_supply_median = k_nan;
    double clearing_ratio_mean = k_nan, clearing_ratio_median = k_nan;
    double corr_cross_mean = k_nan, corr_cross_median = k_nan;
    double corr_lag_mean = k_nan, corr_lag_median = k_nan;
    double bf_pass_rate = k_nan;
    double auctioneer_pct_mean = k_nan, jumpstart_pct_mean = k_nan,
           floored_pct_mean = k_nan;
    int corr_cross_na = 0;
    int corr_lag_na = 0;
    int bf_na = 0;
};

namespace detail {

struct MeanMedian {
    double mean = k_nan;
    double median = k_nan;
    int na = 0;
};

inline MeanMedian mean_median(std::span<const SeriesMetrics> reps,
                              double SeriesMetrics::*field) {
    RunningStat rs;
    std::vector<double> finite;
    finite.reserve(reps.size());
    for (const SeriesMetrics& m : reps) {
        const double v = m.*field;
        if (std::isfinite(v)) {
            rs.push(v);
            finite.push_back(v);
        }
    }
    MeanMedian out;
    out.na = static_cast<int>(reps.size() - finite.size());
    if (!finite.empty()) {
        out.mean = rs.mean();
        out.median = median(std::move(finite));
    }
    return out;
}

}  // namespace detail

inline CellAggregate aggregate_cell(int i_ms, int i_md, double m_s, double m_d,
                                    std::span<const SeriesMetrics> reps) {
    if (reps.empty()) throw std::invalid_argument("aggregate_cell: no replications");
    CellAggregate cell;
    cell.i_ms = i_ms;
    cell.i_md = i_md;
    cell.m_s = m_s;
    cell.m_d = m_d;
    cell.reps = static_cast<int>(reps.size());
    for (const SeriesMetrics& m : reps)
        if (m.diverged) ++cell.diverged;

    const auto fill = [&](double SeriesMetrics::*src, double CellAggregate::*mean,
                          double CellAggregate::*med) {
        const detail::MeanMedian mm = detail::mean_median(reps, src);
        cell.*mean = mm.mean;
        cell.*med = mm.median;
        return mm.na;
    };
    fill(&SeriesMetrics::mean_price, &CellAggregate::mean_price_mean,
         &CellAggregate::mean_price_median);
    fill(&SeriesMetrics::median_price, &CellAggregate::median_price_mean,
         &CellAggregate::median_price_median);
    fill(&SeriesMetrics::std_price, &CellAggregate::std_price_mean,
         &CellAggregate::std_price_median);
    fill(&SeriesMetrics::cv, &CellAggregate::cv_mean, &CellAggregate::cv_median);
    fill(&SeriesMetrics::cv_time_q3, &CellAggregate::cv_time_q3_mean,
         &CellAggregate::cv_time_q3_median);
    fill(&SeriesMetrics::q3_dt, &CellAggregate::q3_dt_mean,
         &CellAggregate::q3_dt_median);
    fill(&SeriesMetrics::exub_range, &CellAggregate::exub_range_mean,
         &CellAggregate::exub_range_median);
    fill(&SeriesMetrics::dissoc_pct, &CellAggregate::dissoc_pct_mean,
         &CellAggregate::dissoc_pct_median);
    fill(&SeriesMetrics::dissoc_len, &CellAggregate::dissoc_len_mean,
         &CellAggregate::dissoc_len_median);
    fill(&SeriesMetrics::matched_frac, &CellAggregate::matched_frac_mean,
         &CellAggregate::matched_frac_median);
    fill(&SeriesMetrics::satisfied_supply, &CellAggregate::satisfied_supply_mean,
         &CellAggregate::satisfied_supply_median);
    fill(&SeriesMetrics::clearing_ratio, &CellAggregate::clearing_ratio_mean,
         &CellAggregate::clearing_ratio_median);
    cell.corr_cross_na =
        fill(&SeriesMetrics::corr_cross, &CellAggregate::corr_cross_mean,
             &CellAggregate::corr_cross_median);
    cell.corr_lag_na = fill(&SeriesMetrics::corr_lag, &CellAggregate::corr_lag_mean,
                            &CellAggregate::corr_lag_median);
    cell.auctioneer_pct_mean =
        detail::mean_median(reps, &SeriesMetrics::auctioneer_pct).mean;
    cell.jumpstart_pct_mean =
        detail::mean_median(reps, &SeriesMetrics::jumpstart_pct).mean;
    cell.floored_pct_mean =
        detail::mean_median(reps, &SeriesMetrics::floored_pct).mean;

    // Volatility peak and width across replications.
    std::vector<double> cvs;
    cvs.reserve(reps.size());
    for (const SeriesMetrics& m : reps)
        if (std::isfinite(m.cv)) cvs.push_back(m.cv);
    if (!cvs.empty()) {
        std::sort(cvs.begin(), cvs.end());
        cell.cv_q3 = quantile_sorted(cvs, 0.75);
        const double q1 = quantile_sorted(cvs, 0.25);
        const double q2 = quantile_sorted(cvs, 0.5);
        cell.cv_width = q2 != 0.0 ? (cell.cv_q3 - q1) / q2 : k_nan;
    }

    RunningStat bf;
    for (const SeriesMetrics& m : reps)
        if (std::isfinite(m.bf_pass)) bf.push(m.bf_pass);
    cell.bf_na = static_cast<int>(reps.size() - bf.count());
    if (bf.count() > 0) cell.bf_pass_rate = bf.mean();
    return cell;
}

/// Seven-number summary of a set of values (NaN entries excluded).
struct Summary7 {
    double mean = k_nan;
    double std = k_nan;
    double min = k_nan;
    double q1 = k_nan;
    double median = k_nan;
    double q3 = k_nan;
    double max = k_nan;
    int n = 0;
    int excluded = 0;
};

inline Summary7 summarize(std::span<const double> values) {
    Summary7 s;
    std::vector<double> finite;
    finite.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v)) finite.push_back(v);
    s.excluded = static_cast<int>(values.size() - finite.size());
    s.n = static_cast<int>(finite.size());
    if (finite.empty()) return s;
    const Moments m = moments(finite);
    s.mean = m.mean;
    s.std = m.stddev;
    std::sort(finite.begin(), finite.end());
    s.min = finite.front();
    s.q1 = quantile_sorted(finite, 0.25);
    s.median = quantile_sorted(finite, 0.5);
    s.q3 = quantile_sorted(finite, 0.75);
    s.max = finite.back();
    return s;
}

/// Registry of the per-cell metric columns carrying a (mean, median) pair.
/// CSV output, grid summaries, the report tables and the heatmaps all look
/// metrics up here, so the schema cannot drift apart.
struct CellMetricField {
    const char* name;
    double CellAggregate::*mean;
    double CellAggregate::*median;
};

inline constexpr CellMetricField k_cell_metrics[] = {
    {"mean_price", &CellAggregate::mean_price_mean, &CellAggregate::mean_price_median},
    {"median_price", &CellAggregate::median_price_mean, &CellAggregate::median_price_median},
    {"std_price", &CellAggregate::std_price_mean, &CellAggregate::std_price_median},
    {"cv", &CellAggregate::cv_mean, &CellAggregate::cv_median},
    {"cv_time_q3", &CellAggregate::cv_time_q3_mean, &CellAggregate::cv_time_q3_median},
    {"q3_dt", &CellAggregate::q3_dt_mean, &CellAggregate::q3_dt_median},
    {"exub_range", &CellAggregate::exub_range_mean, &CellAggregate::exub_range_median},
    {"dissoc_pct", &CellAggregate::dissoc_pct_mean, &CellAggregate::dissoc_pct_median},
    {"dissoc_len", &CellAggregate::dissoc_len_mean, &CellAggregate::dissoc_len_median},
    {"matched_frac", &CellAggregate::matched_frac_mean, &CellAggregate::matched_frac_median},
    {"satisfied_supply", &CellAggregate::satisfied_supply_mean, &CellAggregate::satisfied_supply_median},
    {"clearing_ratio", &CellAggregate::clearing_ratio_mean, &CellAggregate::clearing_ratio_median},
    {"corr_cross", &CellAggregate::corr_cross_mean, &CellAggregate::corr_cross_median},
    {"corr_lag", &CellAggregate::corr_lag_mean, &CellAggregate::corr_lag_median},
};

/// Per-cell columns that carry a single value.
struct CellScalarField {
    const char* name;
    double CellAggregate::*value;
};

inline constexpr CellScalarField k_cell_scalars[] = {
    {"cv_q3", &CellAggregate::cv_q3},
    {"cv_width", &CellAggregate::cv_width},
    {"bf_pass_rate", &CellAggregate::bf_pass_rate},
    {"auctioneer_pct", &CellAggregate::auctioneer_pct_mean},
    {"jumpstart_pct", &CellAggregate::jumpstart_pct_mean},
    {"floored_pct", &CellAggregate::floored_pct_mean},
};

/// Distribution of one metric across all grid cells: separately for the
/// cell means and for the cell medians (the two table rows of a regime).
struct MetricSummary {
    Summary7 over_means;
    Summary7 over_medians;
};

struct GridSummary {
    std::map<std::string, MetricSummary> metrics;
    std::map<std::string, Summary7> scalars;
    int cells = 0;
};

inline GridSummary summarize_grid(std::span<const CellAggregate> cells) {
    if (cells.empty()) throw std::invalid_argument("summarize_grid: no cells");
    GridSummary out;
    out.cells = static_cast<int>(cells.size());
    std::vector<double> buf(cells.size());
    for (const CellMetricField& f : k_cell_metrics) {
        MetricSummary ms;
        for (std::size_t i = 0; i < cells.size(); ++i) buf[i] = cells[i].*(f.mean);
        ms.over_means = summarize(buf);
        for (std::size_t i = 0; i < cells.size(); ++i) buf[i] = cells[i].*(f.median);
        ms.over_medians = summarize(buf);
        out.metrics.emplace(f.name, ms);
    }
    for (const CellScalarField& f : k_cell_scalars) {
        for (std::size_t i = 0; i < cells.size(); ++i) buf[i] = cells[i].*(f.value);
        out.scalars.emplace(f.name, summarize(buf));
    }
    return out;
}

}  // namespace agora
