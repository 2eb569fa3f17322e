#pragma once

// File formats: the per-run series CSV, the per-cell aggregate CSV, the grid
// summary JSON and the sweep manifest. All writers emit doubles with 17
// significant digits so files round-trip exactly and identical configs
// produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agora/metrics.hpp"
#include "agora/simulation.hpp"

namespace agora {

inline constexpr std::string_view k_version = "0.1.0";

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// FNV-1a over a canonical string; used for checkpoint compatibility checks.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Series CSV (run subcommand, --keep-series)
// ---------------------------------------------------------------------------

inline constexpr std::string_view k_series_header =
    "t,price,F,S,branch,frac_S,frac_D,overlap_ratio,auctioneer,jumpstart,floored";

inline void write_series_csv(std::ostream& os, const SeriesResult& series) {
    os << "# agora.run.v1\n" << k_series_header << "\n";
    for (const StepRecord& r : series.records) {
        os << r.t << ',' << fmt_double(r.price) << ',' << fmt_double(r.flow) << ','
           << fmt_double(r.level) << ','
           << (r.branch == ClearingBranch::interior ? "interior" : "fallback") << ','
           << fmt_double(r.frac_s) << ',' << fmt_double(r.frac_d) << ','
           << fmt_double(r.overlap_ratio) << ',' << (r.auctioneer ? 1 : 0) << ','
           << (r.jumpstarted ? 1 : 0) << ',' << (r.floored ? 1 : 0) << '\n';
    }
    if (series.diverged)
        os << "# diverged at t=" << series.diverged_at << "\n";
}

inline void write_series_csv(const std::filesystem::path& path,
                             const SeriesResult& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_series_csv(os, series);
}

// ---------------------------------------------------------------------------
// Cells CSV (one row per grid cell)
// ---------------------------------------------------------------------------

inline std::string cells_csv_header() {
    std::string h = "i_ms,i_md,m_s,m_d,reps,diverged";
    for (const CellMetricField& f : k_cell_metrics) {
        h += ',';
        h += f.name;
        h += "_mean,";
        h += f.name;
        h += "_median";
    }
    for (const CellScalarField& f : k_cell_scalars) {
        h += ',';
        h += f.name;
    }
    h += ",corr_cross_na,corr_lag_na,bf_na";
    return h;
}

inline void write_cells_row(std::ostream& os, const CellAggregate& c) {
    os << c.i_ms << ',' << c.i_md << ',' << fmt_double(c.m_s) << ','
       << fmt_double(c.m_d) << ',' << c.reps << ',' << c.diverged;
    for (const CellMetricField& f : k_cell_metrics)
        os << ',' << fmt_double(c.*(f.mean)) << ',' << fmt_double(c.*(f.median));
    for (const CellScalarField& f : k_cell_scalars)
        os << ',' << fmt_double(c.*(f.value));
    os << ',' << c.corr_cross_na << ',' << c.corr_lag_na << ',' << c.bf_na << '\n';
}

inline void write_cells_csv(const std::filesystem::path& path,
                            std::span<const CellAggregate> cells,
                            std::string_view comment = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "# agora.cells.v1";
    if (!comment.empty()) os << ' ' << comment;
    os << '\n' << cells_csv_header() << '\n';
    for (const CellAggregate& c : cells) write_cells_row(os, c);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Reads a cells CSV back into aggregates; columns are located by header
/// name, so readers tolerate column reordering and ignore unknown columns.
/// The first line comment, when present, is returned through `comment`.
inline std::vector<CellAggregate> read_cells_csv(const std::filesystem::path& path,
                                                 std::string* comment = nullptr) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (comment) *comment = line;
            continue;
        }
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty()) return {};

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    const auto need = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end())
            throw std::runtime_error(path.string() + ": missing column " + name);
        return it->second;
    };

    std::vector<CellAggregate> cells;
    while (std::getline(is, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split_csv_line(line);
        const auto num = [&](std::size_t i) { return std::strtod(fields.at(i).c_str(), nullptr); };
        CellAggregate c;
        c.i_ms = static_cast<int>(num(need("i_ms")));
        c.i_md = static_cast<int>(num(need("i_md")));
        c.m_s = num(need("m_s"));
        c.m_d = num(need("m_d"));
        c.reps = static_cast<int>(num(need("reps")));
        c.diverged = static_cast<int>(num(need("diverged")));
        for (const CellMetricField& f : k_cell_metrics) {
            c.*(f.mean) = num(need(std::string(f.name) + "_mean"));
            c.*(f.median) = num(need(std::string(f.name) + "_median"));
        }
        for (const CellScalarField& f : k_cell_scalars) c.*(f.value) = num(need(f.name));
        c.corr_cross_na = static_cast<int>(num(need("corr_cross_na")));
        c.corr_lag_na = static_cast<int>(num(need("corr_lag_na")));
        c.bf_na = static_cast<int>(num(need("bf_na")));
        cells.push_back(c);
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Grid summary and manifest JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Summary7& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.std},     {"min", s.min},
                          {"q1", s.q1},     {"median", s.median}, {"q3", s.q3},
                          {"max", s.max},   {"n", s.n},         {"excluded", s.excluded}};
}

inline nlohmann::json to_json(const GridSummary& g) {
    nlohmann::json metrics;
    for (const auto& [name, ms] : g.metrics)
        metrics[name] = {{"over_cell_means", to_json(ms.over_means)},
                         {"over_cell_medians", to_json(ms.over_medians)}};
    nlohmann::json scalars;
    for (const auto& [name, s] : g.scalars) scalars[name] = to_json(s);
    return nlohmann::json{{"schema", "agora.summary.v1"},
                          {"cells", g.cells},
                          {"metrics", metrics},
                          {"scalars", scalars}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace agora
