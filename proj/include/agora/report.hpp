#pragma once

// Reporting layer: the distributional comparison tables, SVG heatmaps over
// the market-confidence space, and the noise-magnitude (a) sweep.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agora/io.hpp"
#include "agora/metrics.hpp"
#include "agora/sweep.hpp"

namespace agora {

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// One table row: a label suffix and the per-cell column it summarizes
/// across the grid.
struct TableRow {
    const char* label;
    const char* column;  ///< cells CSV column name
};

struct TableSpec {
    const char* id;
    const char* title;
    std::vector<TableRow> rows;
};

/// Row layout of the comparison tables. Each row summarizes the named
/// per-cell column over all grid cells with the seven-number summary.
inline const std::vector<TableSpec>& table_specs() {
    static const std::vector<TableSpec> specs = {
        {"prices",
         "Market prices",
         {{"(mean)", "mean_price_mean"}, {"(median)", "median_price_median"}}},
        {"volatility",
         "Market volatility (coefficient of variation)",
         {{"(mean)", "cv_mean"}, {"(75% peak)", "cv_q3"}}},
        {"volwidth", "Volatility width around the median", {{"", "cv_width"}}},
        {"exuberance",
         "Market exuberance",
         {{"(Q3[d_t])", "q3_dt_mean"}, {"(exub)", "exub_range_mean"}}},
        {"vagary",
         "Market vagary (dissociation)",
         {{"(%)", "dissoc_pct_mean"}, {"(periods)", "dissoc_len_mean"}}},
        {"liquidity",
         "Market liquidity (clearing ratio)",
         {{"(mean)", "clearing_ratio_mean"}, {"(median)", "clearing_ratio_median"}}},
        {"correlation",
         "Cross-sectional correlation of price and signal",
         {{"(mean)", "corr_cross_mean"}, {"(median)", "corr_cross_median"}}},
        {"correlation-lag",
         "One-period lagged correlation of price and signal",
         {{"(mean)", "corr_lag_mean"}, {"(median)", "corr_lag_median"}}},
    };
    return specs;
}

inline const TableSpec& find_table(const std::string& id) {
    for (const TableSpec& t : table_specs())
        if (id == t.id) return t;
    std::string known;
    for (const TableSpec& t : table_specs()) known += std::string(" ") + t.id;
    throw std::invalid_argument("unknown table '" + id + "'; available:" + known);
}

/// Numeric cell columns addressable by name (for tables and heatmaps).
inline std::vector<std::string> cell_column_names() {
    std::vector<std::string> names;
    for (const CellMetricField& f : k_cell_metrics) {
        names.push_back(std::string(f.name) + "_mean");
        names.push_back(std::string(f.name) + "_median");
    }
    for (const CellScalarField& f : k_cell_scalars) names.push_back(f.name);
    return names;
}

inline double cell_column(const CellAggregate& c, const std::string& name) {
    for (const CellMetricField& f : k_cell_metrics) {
        if (name == std::string(f.name) + "_mean") return c.*(f.mean);
        if (name == std::string(f.name) + "_median") return c.*(f.median);
    }
    for (const CellScalarField& f : k_cell_scalars)
        if (name == f.name) return c.*(f.value);
    std::string known;
    for (const std::string& n : cell_column_names()) known += " " + n;
    throw std::invalid_argument("unknown metric '" + name + "'; available:" + known);
}

struct RenderedTable {
    std::string text;
    std::string csv;
};

namespace detail {

inline std::string fmt_cell(double v) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    const double a = std::abs(v);
    if (v != 0.0 && (a >= 1e6 || a < 1e-4))
        std::snprintf(buf, sizeof buf, "%.4g", v);
    else
        std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace detail

/// Renders one comparison table across regimes, one (or two) summary rows
/// per regime, columns Mean / Std / Min / Q1 / Median / Q3 / Max.
inline RenderedTable render_table(
    const TableSpec& spec,
    const std::vector<std::pair<RegimeKind, std::vector<CellAggregate>>>& data) {
    static const char* cols[] = {"Mean", "Std", "Min", "Q1", "Median", "Q3", "Max"};
    std::vector<std::vector<std::string>> body;
    for (const auto& [regime, cells] : data) {
        for (const TableRow& row : spec.rows) {
            std::vector<double> values(cells.size());
            for (std::size_t i = 0; i < cells.size(); ++i)
                values[i] = cell_column(cells[i], row.column);
            const Summary7 s = summarize(values);
            std::string label = to_string(regime);
            for (char& ch : label) ch = static_cast<char>(std::toupper(ch));
            if (row.label[0] != '\0') label += std::string(" ") + row.label;
            body.push_back({label, detail::fmt_cell(s.mean), detail::fmt_cell(s.std),
                            detail::fmt_cell(s.min), detail::fmt_cell(s.q1),
                            detail::fmt_cell(s.median), detail::fmt_cell(s.q3),
                            detail::fmt_cell(s.max)});
        }
    }

    RenderedTable out;
    std::ostringstream csv;
    csv << "signal_type,mean,std,min,q1,median,q3,max\n";
    for (const auto& row : body) {
        for (std::size_t i = 0; i < row.size(); ++i)
            csv << (i ? "," : "") << row[i];
        csv << '\n';
    }
    out.csv = csv.str();

    std::vector<std::size_t> width(8, 0);
    width[0] = std::string("Signal type").size();
    for (const auto& row : body)
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    for (std::size_t i = 1; i < 8; ++i)
        width[i] = std::max(width[i], std::string(cols[i - 1]).size());

    std::ostringstream text;
    text << spec.title << "\n";
    text << "Signal type";
    text << std::string(width[0] - std::string("Signal type").size(), ' ');
    for (std::size_t i = 1; i < 8; ++i) {
        const std::string c = cols[i - 1];
        text << "  " << std::string(width[i] - c.size(), ' ') << c;
    }
    text << '\n';
    for (const auto& row : body) {
        text << row[0] << std::string(width[0] - row[0].size(), ' ');
        for (std::size_t i = 1; i < 8; ++i)
            text << "  " << std::string(width[i] - row[i].size(), ' ') << row[i];
        text << '\n';
    }
    out.text = text.str();
    return out;
}

/// Loads cells_<regime>.csv for each requested regime from a sweep output
/// directory; a missing file lists what is available instead.
inline std::vector<std::pair<RegimeKind, std::vector<CellAggregate>>> load_cells(
    const std::filesystem::path& dir, const std::vector<RegimeKind>& regimes) {
    std::vector<std::pair<RegimeKind, std::vector<CellAggregate>>> out;
    for (RegimeKind regime : regimes) {
        const auto path = dir / ("cells_" + to_string(regime) + ".csv");
        if (!std::filesystem::exists(path)) {
            std::string available;
            for (RegimeKind r : k_all_regimes)
                if (std::filesystem::exists(dir / ("cells_" + to_string(r) + ".csv")))
                    available += " " + to_string(r);
            throw std::runtime_error("no sweep output for regime '" +
                                     to_string(regime) + "' in " + dir.string() +
                                     "; available:" + (available.empty() ? " none"
                                                                         : available));
        }
        out.emplace_back(regime, read_cells_csv(path));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG heatmap
// ---------------------------------------------------------------------------

enum class HeatmapScale { linear, log10 };

struct HeatmapSpec {
    std::string metric;
    HeatmapScale scale = HeatmapScale::linear;
    int cell_px = 18;
};

namespace detail {

/// Three-stop blue -> beige -> red ramp.
inline std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
    double r, g, b;
    if (t < 0.5) {
        const double u = t / 0.5;
        r = lerp(33, 245, u), g = lerp(102, 235, u), b = lerp(172, 200, u);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = lerp(245, 178, u), g = lerp(235, 24, u), b = lerp(200, 43, u);
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r),
                  static_cast<int>(g), static_cast<int>(b));
    return buf;
}

inline std::string xml_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/// One colored rect per grid cell, x = m_S, y = m_D (origin bottom-left),
/// legend with the finite min/max. Non-finite cells (and non-positive ones
/// under the log scale) render in the designated "diverged" grey.
inline std::string svg_heatmap(const std::vector<CellAggregate>& cells,
                               const HeatmapSpec& spec) {
    if (cells.empty()) throw std::invalid_argument("svg_heatmap: no cells");
    int n = 0;
    for (const CellAggregate& c : cells) n = std::max({n, c.i_ms + 1, c.i_md + 1});

    std::vector<double> value(static_cast<std::size_t>(n) * n, k_nan);
    for (const CellAggregate& c : cells)
        value[static_cast<std::size_t>(c.i_ms) * n + c.i_md] =
            cell_column(c, spec.metric);

    const bool logscale = spec.scale == HeatmapScale::log10;
    const auto usable = [&](double v) {
        return std::isfinite(v) && (!logscale || v > 0.0);
    };
    double lo = k_nan, hi = k_nan;
    for (double v : value) {
        if (!usable(v)) continue;
        if (!std::isfinite(lo) || v < lo) lo = v;
        if (!std::isfinite(hi) || v > hi) hi = v;
    }

    const int cell = spec.cell_px;
    const int margin_l = 46, margin_b = 34, margin_t = 26, margin_r = 16;
    const int plot = n * cell;
    const int width = margin_l + plot + margin_r;
    const int height = margin_t + plot + margin_b + 30;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << margin_l << "\" y=\"16\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << spec.metric << (logscale ? " (log10 scale)" : "") << "</text>\n";

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = value[static_cast<std::size_t>(i) * n + j];
            std::string color = "#b0b0b0";  // diverged / unusable
            if (usable(v) && std::isfinite(lo)) {
                double t = 0.5;
                if (hi > lo)
                    t = logscale ? (std::log10(v) - std::log10(lo)) /
                                       (std::log10(hi) - std::log10(lo))
                                 : (v - lo) / (hi - lo);
                color = detail::ramp_color(t);
            }
            const int x = margin_l + i * cell;
            const int y = margin_t + (n - 1 - j) * cell;  // m_D grows upward
            svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
                << color << "\"/>\n";
        }
    }

    // axes
    svg << "<text x=\"" << margin_l + plot / 2
        << "\" y=\"" << margin_t + plot + 26
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           "m_S</text>\n";
    svg << "<text x=\"14\" y=\"" << margin_t + plot / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 14 "
        << margin_t + plot / 2 << ")\">m_D</text>\n";
    for (double tick : {0.0, 0.5, 1.0}) {
        const int x = margin_l + static_cast<int>(tick * (plot - cell)) + cell / 2;
        const int y = margin_t + plot - static_cast<int>(tick * (plot - cell)) -
                      cell / 2;
        svg << "<text x=\"" << x << "\" y=\"" << margin_t + plot + 12
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"10\">"
            << detail::xml_num(tick) << "</text>\n";
        svg << "<text x=\"" << margin_l - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << detail::xml_num(tick) << "</text>\n";
    }

    // legend: min/max (degenerate when the matrix is constant)
    const int ly = margin_t + plot + margin_b + 8;
    for (int k = 0; k < 60; ++k)
        svg << "<rect x=\"" << margin_l + k * 2 << "\" y=\"" << ly - 18
            << "\" width=\"2\" height=\"10\" fill=\""
            << detail::ramp_color(k / 59.0) << "\"/>\n";
    svg << "<text x=\"" << margin_l << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"10\">min "
        << (std::isfinite(lo) ? detail::xml_num(lo) : "n/a") << "  max "
        << (std::isfinite(hi) ? detail::xml_num(hi) : "n/a") << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

/// Writes the plain value matrix of a metric (rows = m_D descending, columns
/// = m_S ascending), the data behind the heatmap.
inline std::string metric_matrix_csv(const std::vector<CellAggregate>& cells,
                                     const std::string& metric) {
    int n = 0;
    for (const CellAggregate& c : cells) n = std::max({n, c.i_ms + 1, c.i_md + 1});
    std::vector<double> value(static_cast<std::size_t>(n) * n, k_nan);
    double step = n > 1 ? 1.0 / (n - 1) : 1.0;
    for (const CellAggregate& c : cells)
        value[static_cast<std::size_t>(c.i_ms) * n + c.i_md] = cell_column(c, metric);
    std::ostringstream os;
    os << "# agora.matrix.v1 metric=" << metric << "\nm_d\\m_s";
    for (int i = 0; i < n; ++i) os << ',' << fmt_double(i * step);
    os << '\n';
    for (int j = n - 1; j >= 0; --j) {
        os << fmt_double(j * step);
        for (int i = 0; i < n; ++i)
            os << ',' << fmt_double(value[static_cast<std::size_t>(i) * n + j]);
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Noise-magnitude sweep (mean/median price vs a)
// ---------------------------------------------------------------------------

struct ASweepRow {
    double a = 0.0;
    RegimeKind regime = RegimeKind::hca;
    double mean_price = k_nan;
    double median_price = k_nan;
};

/// Runs the configured sweep once per noise magnitude and reports the grand
/// mean (mean over cells of cell means) and grand median (median over cells
/// of cell medians) of the price. A fixed cell (optional) replaces the grid
/// by a single (m_S, m_D) point; seeds still come from its grid indices.
inline std::vector<ASweepRow> run_asweep(SweepConfig cfg,
                                         const std::vector<double>& a_values,
                                         std::optional<std::pair<double, double>> cell) {
    for (double a : a_values)
        if (a < 0.0) throw std::invalid_argument("asweep: a must be >= 0");
    cfg.output_dir.clear();

    std::vector<ASweepRow> rows;
    for (double a : a_values) {
        SweepConfig acfg = cfg;
        acfg.regime_params.a = a;
        for (RegimeKind regime : cfg.regimes) {
            ASweepRow row;
            row.a = a;
            row.regime = regime;
            if (cell) {
                const int i_ms =
                    static_cast<int>(std::round(cell->first / acfg.grid_step));
                const int i_md =
                    static_cast<int>(std::round(cell->second / acfg.grid_step));
                const CellAggregate agg = run_cell(acfg, regime, i_ms, i_md);
                row.mean_price = agg.mean_price_mean;
                row.median_price = agg.median_price_median;
            } else {
                SweepConfig one = acfg;
                one.regimes = {regime};
                const SweepResult res = run_grid(one);
                const GridSummary& g = res.regimes.front().summary;
                row.mean_price = g.metrics.at("mean_price").over_means.mean;
                row.median_price = g.metrics.at("median_price").over_medians.median;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline void write_asweep_csv(const std::filesystem::path& path,
                             std::span<const ASweepRow> rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "# agora.asweep.v1\na,regime,mean_price,median_price\n";
    for (const ASweepRow& r : rows)
        os << fmt_double(r.a) << ',' << to_string(r.regime) << ','
           << fmt_double(r.mean_price) << ',' << fmt_double(r.median_price) << '\n';
}

}  // namespace agora
