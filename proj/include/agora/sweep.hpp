#pragma once

// Grid sweep: every (m_S, m_D) cell times `reps` replications, for one or
// more regimes, with deterministic seeds shared across regimes.
//
// The parallel unit is the cell. Workers pull pending cells from an atomic
// counter and write into per-cell slots, so the assembled result is
// independent of the worker count and of completion order. When an output
// directory is set, completed cells are appended to a per-regime checkpoint
// file that a later invocation resumes from; the checkpoint is replaced by
// the final per-regime CSV once the grid completes.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "agora/io.hpp"
#include "agora/metrics.hpp"
#include "agora/simulation.hpp"

namespace agora {

struct SweepConfig {
    std::vector<RegimeKind> regimes{RegimeKind::hca, RegimeKind::hrt,
                                    RegimeKind::fva, RegimeKind::tra_f,
                                    RegimeKind::tra_s};
    double grid_step = 0.01;
    int reps = 1000;
    int periods = 500;
    double p0 = 1000.0;
    std::uint64_t base_seed = 42;
    int workers = 0;  ///< 0 = hardware concurrency
    std::string output_dir;  ///< empty = in-memory only (no checkpoint/files)
    MarketParams market{};   ///< m_s / m_d are overridden per cell
    RegimeParams regime_params{};
    MetricsConfig metrics{};
    bool keep_series = false;
    int max_cells = 0;  ///< stop after this many pending cells (0 = all);
                        ///< checkpoint/testing aid

    /// Number of grid points per axis; grid_step must divide 1 into an
    /// integer cell count.
    int axis_points() const {
        if (!(grid_step > 0.0 && grid_step <= 1.0))
            throw std::invalid_argument("SweepConfig: grid_step must be in (0,1]");
        const double n = 1.0 / grid_step;
        const double rounded = std::round(n);
        if (std::abs(n - rounded) > 1e-9 * n)
            throw std::invalid_argument(
                "SweepConfig: grid_step must divide 1 into an integer cell count");
        return static_cast<int>(rounded) + 1;
    }

    void validate() const {
        if (regimes.empty()) throw std::invalid_argument("SweepConfig: no regimes");
        if (reps < 1) throw std::invalid_argument("SweepConfig: reps must be >= 1");
        if (periods < 2) throw std::invalid_argument("SweepConfig: periods must be >= 2");
        if (!(p0 > 0.0)) throw std::invalid_argument("SweepConfig: p0 must be > 0");
        axis_points();
        market.validate();
        regime_params.validate();
    }

    /// Canonical serialization of everything that determines a regime's cell
    /// values; hashed for checkpoint compatibility.
    std::string canonical_string(RegimeKind regime) const {
        std::string s;
        s += "regime=" + to_string(regime);
        s += ";grid_step=" + fmt_double(grid_step);
        s += ";reps=" + std::to_string(reps);
        s += ";periods=" + std::to_string(periods);
        s += ";p0=" + fmt_double(p0);
        s += ";base_seed=" + std::to_string(base_seed);
        s += ";beta=" + fmt_double(market.beta);
        s += ";gamma=" + fmt_double(market.gamma);
        s += ";delta_sign=" +
             std::string(market.delta_sign == DeltaSign::minus ? "minus" : "plus");
        s += ";tick_mode=" +
             std::string(market.tick_mode == TickMode::uniform ? "uniform" : "gaussian");
        s += ";trend_lag=" +
             std::string(market.trend_lag == TrendLag::completed ? "completed"
                                                                 : "current");
        s += ";trend_weight=" +
             std::string(market.trend_weight == TrendWeight::uniform ? "uniform"
                                                                     : "chartist");
        s += ";price_floor=" + fmt_double(market.price_floor);
        s += ";a=" + fmt_double(regime_params.a);
        s += ";b=" + fmt_double(regime_params.b);
        s += ";tra_anchor=" +
             std::string(regime_params.tra_anchor == TraAnchor::fixed ? "fixed"
                         : regime_params.tra_anchor == TraAnchor::cumulated
                             ? "cumulated"
                             : "lagged-flow");
        s += ";epsilon_sigma=" + std::string(regime_params.epsilon_sigma ==
                                                     EpsilonSigma::unit
                                                 ? "unit"
                                                 : "scaled");
        s += ";bf_blocks=" + std::to_string(metrics.bf_blocks);
        s += ";bf_alpha=" + fmt_double(metrics.bf_alpha);
        s += ";dissoc_sigmas=" + fmt_double(metrics.dissoc_sigmas);
        s += ";dissoc_min_run=" + std::to_string(metrics.dissoc_min_run);
        s += ";volatility_form=" +
             std::string(metrics.volatility_form == VolatilityForm::ratio ? "ratio"
                                                                          : "log10");
        return s;
    }

    std::string config_hash(RegimeKind regime) const {
        return hash_hex(fnv1a64(canonical_string(regime)));
    }
};

struct RegimeSweep {
    RegimeKind regime = RegimeKind::hca;
    bool complete = false;
    std::vector<CellAggregate> cells;  ///< sorted by (i_ms, i_md)
    GridSummary summary;               ///< only filled when complete
    std::uint64_t steps = 0;           ///< periods actually simulated
    double wall_seconds = 0.0;
};

struct SweepResult {
    std::vector<RegimeSweep> regimes;
    int grid_points = 0;
    int workers_used = 0;
    std::uint64_t total_steps = 0;
    double wall_seconds = 0.0;

    double steps_per_second() const {
        return wall_seconds > 0.0 ? static_cast<double>(total_steps) / wall_seconds
                                  : 0.0;
    }
    bool complete() const {
        for (const RegimeSweep& r : regimes)
            if (!r.complete) return false;
        return true;
    }
};

namespace detail {

inline std::filesystem::path cells_path(const SweepConfig& cfg, RegimeKind regime) {
    return std::filesystem::path(cfg.output_dir) /
           ("cells_" + to_string(regime) + ".csv");
}
inline std::filesystem::path summary_path(const SweepConfig& cfg, RegimeKind regime) {
    return std::filesystem::path(cfg.output_dir) /
           ("summary_" + to_string(regime) + ".json");
}
inline std::filesystem::path checkpoint_path(const SweepConfig& cfg,
                                             RegimeKind regime) {
    return std::filesystem::path(cfg.output_dir) /
           ("checkpoint_" + to_string(regime) + ".csv");
}

/// Loads checkpointed cells, refusing a checkpoint written under a different
/// configuration.
inline std::vector<CellAggregate> load_checkpoint(const SweepConfig& cfg,
                                                  RegimeKind regime) {
    const auto path = checkpoint_path(cfg, regime);
    if (!std::filesystem::exists(path)) return {};
    std::string comment;
    auto cells = read_cells_csv(path, &comment);
    const std::string expect = "hash=" + cfg.config_hash(regime);
    if (comment.find(expect) == std::string::npos)
        throw std::runtime_error(
            path.string() +
            ": checkpoint was written under a different configuration (" + comment +
            ", expected " + expect + "); remove it or rerun with the original flags");
    return cells;
}

struct CellTask {
    int i_ms = 0;
    int i_md = 0;
};

}  // namespace detail

/// Runs the replications of one cell and aggregates them. Re-running a cell
/// standalone reproduces exactly the value the full sweep computes.
inline CellAggregate run_cell(const SweepConfig& cfg, RegimeKind regime, int i_ms,
                              int i_md, std::uint64_t* steps_out = nullptr,
                              std::vector<SeriesResult>* series_out = nullptr) {
    RunConfig run;
    run.regime = regime;
    run.market = cfg.market;
    run.market.m_s = static_cast<double>(i_ms) * cfg.grid_step;
    run.market.m_d = static_cast<double>(i_md) * cfg.grid_step;
    run.regime_params = cfg.regime_params;
    run.periods = cfg.periods;
    run.p0 = cfg.p0;

    const CellSeed cell{cfg.base_seed, i_ms, i_md};
    std::vector<SeriesMetrics> metrics(static_cast<std::size_t>(cfg.reps));
    std::uint64_t steps = 0;
    for (int r = 0; r < cfg.reps; ++r) {
        const SeriesResult series = run_series(replication_config(run, cell, r));
        steps += series.records.size();
        metrics[static_cast<std::size_t>(r)] = compute_series_metrics(series, cfg.metrics);
        if (series_out) series_out->push_back(series);
    }
    if (steps_out) *steps_out += steps;
    return aggregate_cell(i_ms, i_md, run.market.m_s, run.market.m_d, metrics);
}

/// Full sweep. Deterministic output for a given config regardless of the
/// worker count. Returns per-regime aggregates; when cfg.output_dir is set,
/// also persists cells_<regime>.csv, summary_<regime>.json and manifest.json
/// (plus the intermediate checkpoints).
inline SweepResult run_grid(const SweepConfig& cfg) {
    cfg.validate();
    const int n = cfg.axis_points();
    const bool persist = !cfg.output_dir.empty();
    if (persist) std::filesystem::create_directories(cfg.output_dir);

    int workers = cfg.workers;
    if (workers <= 0)
        workers = std::max(1u, std::thread::hardware_concurrency());

    SweepResult result;
    result.grid_points = n;
    result.workers_used = workers;
    const auto sweep_start = std::chrono::steady_clock::now();

    for (RegimeKind regime : cfg.regimes) {
        RegimeSweep rs;
        rs.regime = regime;
        const auto regime_start = std::chrono::steady_clock::now();

        std::vector<CellAggregate> done =
            persist ? detail::load_checkpoint(cfg, regime)
                    : std::vector<CellAggregate>{};
        std::set<std::pair<int, int>> done_keys;
        for (const CellAggregate& c : done) done_keys.emplace(c.i_ms, c.i_md);

        std::vector<detail::CellTask> pending;
        pending.reserve(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!done_keys.contains({i, j}))
                    pending.push_back(detail::CellTask{i, j});
        if (cfg.max_cells > 0 &&
            pending.size() > static_cast<std::size_t>(cfg.max_cells))
            pending.resize(static_cast<std::size_t>(cfg.max_cells));

        std::vector<CellAggregate> fresh(pending.size());
        std::atomic<std::size_t> next{0};
        std::atomic<std::uint64_t> steps{0};
        std::mutex io_mutex;

        std::optional<std::ofstream> checkpoint;
        if (persist && !pending.empty()) {
            const auto path = detail::checkpoint_path(cfg, regime);
            const bool fresh_file = !std::filesystem::exists(path);
            checkpoint.emplace(path, std::ios::app);
            if (!*checkpoint)
                throw std::runtime_error("cannot write " + path.string());
            if (fresh_file)
                *checkpoint << "# agora.checkpoint.v1 hash=" << cfg.config_hash(regime)
                            << '\n'
                            << cells_csv_header() << '\n';
        }

        const auto worker = [&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= pending.size()) return;
                const detail::CellTask task = pending[k];
                std::uint64_t cell_steps = 0;
                std::vector<SeriesResult> series;
                CellAggregate agg =
                    run_cell(cfg, regime, task.i_ms, task.i_md, &cell_steps,
                             cfg.keep_series && persist ? &series : nullptr);
                steps.fetch_add(cell_steps);
                fresh[k] = agg;
                if (checkpoint) {
                    std::lock_guard lock(io_mutex);
                    write_cells_row(*checkpoint, agg);
                    checkpoint->flush();
                }
                if (cfg.keep_series && persist) {
                    const auto dir = std::filesystem::path(cfg.output_dir) /
                                     ("series_" + to_string(regime));
                    std::filesystem::create_directories(dir);
                    std::ofstream os(dir / ("cell_" + std::to_string(task.i_ms) + "_" +
                                            std::to_string(task.i_md) + ".csv"));
                    for (std::size_t r = 0; r < series.size(); ++r) {
                        os << "# rep=" << r << '\n';
                        write_series_csv(os, series[r]);
                    }
                }
            }
        };

        if (workers <= 1 || pending.size() <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            const int used = std::min<std::size_t>(workers, pending.size());
            pool.reserve(static_cast<std::size_t>(used));
            for (int w = 0; w < used; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (checkpoint) checkpoint->close();

        rs.cells = std::move(done);
        rs.cells.insert(rs.cells.end(), fresh.begin(), fresh.end());
        std::sort(rs.cells.begin(), rs.cells.end(),
                  [](const CellAggregate& a, const CellAggregate& b) {
                      return std::pair(a.i_ms, a.i_md) < std::pair(b.i_ms, b.i_md);
                  });
        rs.steps = steps.load();
        rs.complete = rs.cells.size() == static_cast<std::size_t>(n) * n;
        if (rs.complete) {
            rs.summary = summarize_grid(rs.cells);
            if (persist) {
                write_cells_csv(detail::cells_path(cfg, regime), rs.cells,
                                "regime=" + to_string(regime) +
                                    " hash=" + cfg.config_hash(regime));
                nlohmann::json j = to_json(rs.summary);
                j["regime"] = to_string(regime);
                j["reps"] = cfg.reps;
                j["periods"] = cfg.periods;
                write_json(detail::summary_path(cfg, regime), j);
                std::filesystem::remove(detail::checkpoint_path(cfg, regime));
            }
        }
        rs.wall_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - regime_start)
                              .count();
        result.total_steps += rs.steps;
        result.regimes.push_back(std::move(rs));
    }

    result.wall_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - sweep_start)
                              .count();

    if (persist && result.complete()) {
        nlohmann::json manifest;
        manifest["schema"] = "agora.manifest.v1";
        manifest["version"] = std::string(k_version);
        nlohmann::json config;
        config["grid_step"] = cfg.grid_step;
        config["reps"] = cfg.reps;
        config["periods"] = cfg.periods;
        config["p0"] = cfg.p0;
        config["base_seed"] = cfg.base_seed;
        nlohmann::json regimes = nlohmann::json::array();
        nlohmann::json hashes;
        for (RegimeKind r : cfg.regimes) {
            regimes.push_back(to_string(r));
            hashes[to_string(r)] = cfg.config_hash(r);
        }
        config["regimes"] = regimes;
        config["canonical"] = cfg.canonical_string(cfg.regimes.front());
        manifest["config"] = config;
        manifest["config_hash"] = hashes;
        manifest["grid_points"] = n;
        manifest["cells"] = n * n;
        manifest["workers"] = result.workers_used;
        nlohmann::json timing;
        timing["wall_seconds"] = result.wall_seconds;
        timing["steps"] = result.total_steps;
        timing["steps_per_second"] = result.steps_per_second();
        nlohmann::json per_regime;
        for (const RegimeSweep& r : result.regimes)
            per_regime[to_string(r.regime)] = {{"wall_seconds", r.wall_seconds},
                                               {"steps", r.steps}};
        timing["per_regime"] = per_regime;
        manifest["timing"] = timing;
        const double full_steps = 101.0 * 101.0 * 1000.0 * cfg.periods;
        nlohmann::json projection;
        projection["full_grid"] = "101x101 cells, 1000 reps";
        projection["steps_per_regime"] = full_steps;
        projection["estimated_seconds_per_regime_at_measured_rate"] =
            result.steps_per_second() > 0.0 ? full_steps / result.steps_per_second()
                                            : 0.0;
        manifest["projection"] = projection;
        write_json(std::filesystem::path(cfg.output_dir) / "manifest.json", manifest);
    }
    return result;
}

}  // namespace agora
