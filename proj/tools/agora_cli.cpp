// Command-line front end: single runs, confidence-grid sweeps, the
// noise-magnitude sweep, table rendering and SVG heatmaps.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agora/io.hpp"
#include "agora/report.hpp"
#include "agora/simulation.hpp"
#include "agora/sweep.hpp"

namespace fs = std::filesystem;
using namespace agora;

namespace {

struct CommonParams {
    std::string regime = "hrt";
    std::vector<std::string> regimes;
    int periods = 500;
    int reps = 1000;
    double grid_step = 0.01;
    double p0 = 1000.0;
    std::uint64_t seed = 42;
    double a = 0.1;
    double b = 1.0;
    double beta = 0.5;
    double gamma = 1.0;
    double price_floor = 0.01;
    std::string delta_sign = "minus";
    std::string tick_mode = "uniform";
    std::string trend_lag = "current";
    std::string trend_weight = "uniform";
    std::string tra_anchor = "fixed";
    std::string epsilon_sigma = "unit";
    std::string cv_form = "ratio";
    int bf_blocks = 2;
    double bf_alpha = 0.05;
    double dissoc_sigmas = 1.0;
    int dissoc_min_run = 10;
    int workers = 0;
    int max_cells = 0;
    bool keep_series = false;
};

template <class T>
T parse_choice(const std::string& value, std::initializer_list<std::pair<const char*, T>> table,
               const char* what) {
    for (const auto& [name, v] : table)
        if (value == name) return v;
    std::string known;
    for (const auto& [name, v] : table) known += std::string(" ") + name;
    throw CLI::ValidationError(std::string(what) + ": unknown value '" + value +
                               "'; expected one of" + known);
}

MarketParams market_params(const CommonParams& p) {
    MarketParams mp;
    mp.beta = p.beta;
    mp.gamma = p.gamma;
    mp.price_floor = p.price_floor;
    mp.delta_sign = parse_choice<DeltaSign>(
        p.delta_sign, {{"minus", DeltaSign::minus}, {"plus", DeltaSign::plus}},
        "--delta-sign");
    mp.tick_mode = parse_choice<TickMode>(
        p.tick_mode, {{"uniform", TickMode::uniform}, {"gaussian", TickMode::gaussian}},
        "--tick-mode");
    mp.trend_lag = parse_choice<TrendLag>(
        p.trend_lag, {{"current", TrendLag::current}, {"completed", TrendLag::completed}},
        "--trend-lag");
    mp.trend_weight = parse_choice<TrendWeight>(
        p.trend_weight,
        {{"uniform", TrendWeight::uniform}, {"chartist", TrendWeight::chartist}},
        "--trend-weight");
    return mp;
}

RegimeParams regime_params(const CommonParams& p) {
    RegimeParams rp;
    rp.a = p.a;
    rp.b = p.b;
    rp.tra_anchor = parse_choice<TraAnchor>(p.tra_anchor,
                                            {{"fixed", TraAnchor::fixed},
                                             {"cumulated", TraAnchor::cumulated},
                                             {"lagged-flow", TraAnchor::lagged_flow}},
                                            "--tra-anchor");
    rp.epsilon_sigma = parse_choice<EpsilonSigma>(
        p.epsilon_sigma, {{"unit", EpsilonSigma::unit}, {"scaled", EpsilonSigma::scaled}},
        "--epsilon-sigma");
    return rp;
}

MetricsConfig metrics_config(const CommonParams& p) {
    MetricsConfig mc;
    mc.bf_blocks = p.bf_blocks;
    mc.bf_alpha = p.bf_alpha;
    mc.dissoc_sigmas = p.dissoc_sigmas;
    mc.dissoc_min_run = p.dissoc_min_run;
    mc.volatility_form = parse_choice<VolatilityForm>(
        p.cv_form, {{"ratio", VolatilityForm::ratio}, {"log10", VolatilityForm::log10}},
        "--cv-form");
    return mc;
}

int effective_workers(const CommonParams& p) {
    if (const char* env = std::getenv("AGORA_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return p.workers;
}

std::vector<RegimeKind> regime_list(const CommonParams& p,
                                    std::vector<RegimeKind> fallback) {
    if (p.regimes.empty()) return fallback;
    std::vector<RegimeKind> out;
    for (const std::string& name : p.regimes) out.push_back(regime_from_string(name));
    return out;
}

void add_model_flags(CLI::App* cmd, CommonParams& p) {
    cmd->add_option("--periods", p.periods, "periods per run (T)")
        ->capture_default_str();
    cmd->add_option("--seed", p.seed, "base seed")->capture_default_str();
    cmd->add_option("--p0", p.p0, "initial price and signal anchor")
        ->capture_default_str();
    cmd->add_option("-a,--a", p.a, "estimation-error band half-width")
        ->capture_default_str();
    cmd->add_option("-b,--b", p.b, "trend band width (HRT)")->capture_default_str();
    cmd->add_option("--beta", p.beta, "forecast-revision weight")
        ->capture_default_str();
    cmd->add_option("--gamma", p.gamma, "fundamental-signal weight")
        ->capture_default_str();
    cmd->add_option("--delta-sign", p.delta_sign, "revision sign: minus|plus")
        ->capture_default_str();
    cmd->add_option("--tick-mode", p.tick_mode, "fallback tick: uniform|gaussian")
        ->capture_default_str();
    cmd->add_option("--trend-lag", p.trend_lag, "trend source: current|completed")
        ->capture_default_str();
    cmd->add_option("--trend-weight", p.trend_weight,
                    "trend confidence weighting: uniform|chartist")
        ->capture_default_str();
    cmd->add_option("--tra-anchor", p.tra_anchor,
                    "target-reverting anchor: fixed|cumulated|lagged-flow")
        ->capture_default_str();
    cmd->add_option("--epsilon-sigma", p.epsilon_sigma,
                    "estimation-error law: unit|scaled")
        ->capture_default_str();
    cmd->add_option("--price-floor", p.price_floor, "minimum admissible price")
        ->capture_default_str();
    cmd->add_option("--cv-form", p.cv_form, "volatility form: ratio|log10")
        ->capture_default_str();
    cmd->add_option("--bf-blocks", p.bf_blocks, "variance-test block count")
        ->capture_default_str();
    cmd->add_option("--bf-alpha", p.bf_alpha, "variance-test significance level")
        ->capture_default_str();
    cmd->add_option("--dissoc-sigmas", p.dissoc_sigmas,
                    "dissociation band width in std units")
        ->capture_default_str();
    cmd->add_option("--dissoc-min-run", p.dissoc_min_run,
                    "minimum dissociation episode length")
        ->capture_default_str();
}

SweepConfig sweep_config(const CommonParams& p, const std::string& output) {
    SweepConfig cfg;
    cfg.regimes = regime_list(
        p, {RegimeKind::hca, RegimeKind::hrt, RegimeKind::fva, RegimeKind::tra_f,
            RegimeKind::tra_s});
    cfg.grid_step = p.grid_step;
    cfg.reps = p.reps;
    cfg.periods = p.periods;
    cfg.p0 = p.p0;
    cfg.base_seed = p.seed;
    cfg.workers = effective_workers(p);
    cfg.output_dir = output;
    cfg.market = market_params(p);
    cfg.regime_params = regime_params(p);
    cfg.metrics = metrics_config(p);
    cfg.keep_series = p.keep_series;
    cfg.max_cells = p.max_cells;
    return cfg;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw CLI::ValidationError("--a-values: no values given");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agora: two-sided share-exchange pricing simulator"};
    app.require_subcommand(1);
    // key = value config file; keys live in a [subcommand] section and are
    // overridden by command-line flags
    app.set_config("--config", "", "read defaults from a key=value file");

    CommonParams p;

    // run ------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "simulate one seeded series and emit CSV");
    double run_ms = 0.5, run_md = 0.5;
    std::string run_output = "run.csv";
    run->add_option("--regime", p.regime, "hca|hrt|fva|tra-f|tra-s")
        ->capture_default_str();
    run->add_option("--ms", run_ms, "supply-side market confidence")
        ->capture_default_str();
    run->add_option("--md", run_md, "demand-side market confidence")
        ->capture_default_str();
    run->add_option("-o,--output", run_output, "series CSV path")
        ->capture_default_str();
    add_model_flags(run, p);

    // sweep ----------------------------------------------------------------
    auto* sweep = app.add_subcommand(
        "sweep", "run the (m_S, m_D) grid for one or more regimes");
    std::string sweep_output = "out";
    sweep->add_option("--regime", p.regimes, "regimes to sweep (default: all five)");
    sweep->add_option("--grid-step", p.grid_step, "confidence grid step")
        ->capture_default_str();
    sweep->add_option("--reps", p.reps, "replications per cell")
        ->capture_default_str();
    sweep->add_option("-o,--output", sweep_output, "output directory")
        ->capture_default_str();
    sweep->add_option("--workers", p.workers,
                      "worker threads (0 = hardware; env AGORA_WORKERS overrides)")
        ->capture_default_str();
    sweep->add_option("--max-cells", p.max_cells,
                      "stop after N pending cells and keep the checkpoint")
        ->capture_default_str();
    sweep->add_flag("--keep-series", p.keep_series,
                    "persist full trajectories per cell (small grids)");
    add_model_flags(sweep, p);

    // asweep ---------------------------------------------------------------
    auto* asweep = app.add_subcommand(
        "asweep", "sweep the estimation-error magnitude and report prices");
    std::string a_values = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";
    std::string asweep_cell;
    std::string asweep_output = "asweep.csv";
    asweep->add_option("--regime", p.regimes,
                       "regimes to include (default: hrt,fva,tra-s)");
    asweep->add_option("--a-values", a_values, "comma-separated noise magnitudes")
        ->capture_default_str();
    asweep->add_option("--cell", asweep_cell,
                       "fixed cell \"m_s,m_d\" instead of the full grid");
    asweep->add_option("--grid-step", p.grid_step, "grid step (grid mode)")
        ->capture_default_str();
    asweep->add_option("--reps", p.reps, "replications per cell")
        ->capture_default_str();
    asweep->add_option("-o,--output", asweep_output, "output CSV path")
        ->capture_default_str();
    asweep->add_option("--workers", p.workers, "worker threads")
        ->capture_default_str();
    add_model_flags(asweep, p);

    // report ---------------------------------------------------------------
    auto* report = app.add_subcommand(
        "report", "render a comparison table from sweep outputs");
    std::string report_input = "out";
    std::string report_table = "prices";
    std::string report_output;
    report->add_option("-i,--input", report_input, "sweep output directory")
        ->capture_default_str();
    report->add_option("--table", report_table,
                       "prices|volatility|volwidth|exuberance|vagary|liquidity|"
                       "correlation|correlation-lag")
        ->capture_default_str();
    report->add_option("--regime", p.regimes, "regimes to include (default: all present)");
    report->add_option("-o,--output", report_output, "also write the table as CSV");

    // plot -----------------------------------------------------------------
    auto* plot = app.add_subcommand("plot", "render an SVG heatmap of one metric");
    std::string plot_input = "out";
    std::string plot_regime = "hrt";
    std::string plot_metric = "mean_price_mean";
    std::string plot_scale = "linear";
    std::string plot_output = "heatmap.svg";
    std::string plot_matrix;
    plot->add_option("-i,--input", plot_input, "sweep output directory")
        ->capture_default_str();
    plot->add_option("--regime", plot_regime, "regime whose cells to plot")
        ->capture_default_str();
    plot->add_option("--metric", plot_metric, "cells CSV column to color by")
        ->capture_default_str();
    plot->add_option("--scale", plot_scale, "linear|log10")->capture_default_str();
    plot->add_option("-o,--output", plot_output, "SVG path")->capture_default_str();
    plot->add_option("--matrix", plot_matrix, "also write the value matrix as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            RunConfig cfg;
            cfg.regime = regime_from_string(p.regime);
            cfg.market = market_params(p);
            cfg.market.m_s = run_ms;
            cfg.market.m_d = run_md;
            cfg.regime_params = regime_params(p);
            cfg.periods = p.periods;
            cfg.p0 = p.p0;
            cfg.seed = p.seed;
            const SeriesResult sr = run_series(cfg);
            write_series_csv(fs::path(run_output), sr);
            std::cout << "wrote " << run_output << " (" << sr.records.size()
                      << " periods";
            if (sr.diverged) std::cout << ", diverged at t=" << sr.diverged_at;
            std::cout << ")\n";
        } else if (*sweep) {
            SweepConfig cfg = sweep_config(p, sweep_output);
            const SweepResult result = run_grid(cfg);
            std::cout << "sweep: " << result.grid_points << "x" << result.grid_points
                      << " cells, " << cfg.reps << " reps, "
                      << result.workers_used << " workers, " << result.total_steps
                      << " steps in " << result.wall_seconds << " s ("
                      << result.steps_per_second() << " steps/s)\n";
            for (const RegimeSweep& r : result.regimes)
                std::cout << "  " << to_string(r.regime)
                          << (r.complete ? "" : " [partial: checkpoint kept]") << "\n";
            if (!result.complete()) return 0;
            std::cout << "outputs in " << sweep_output << "\n";
        } else if (*asweep) {
            SweepConfig cfg = sweep_config(p, "");
            if (p.regimes.empty())
                cfg.regimes = {RegimeKind::hrt, RegimeKind::fva, RegimeKind::tra_s};
            std::optional<std::pair<double, double>> cell;
            if (!asweep_cell.empty()) {
                const auto values = parse_values(asweep_cell);
                if (values.size() != 2)
                    throw CLI::ValidationError("--cell expects \"m_s,m_d\"");
                cell = std::pair{values[0], values[1]};
            }
            const auto rows = run_asweep(cfg, parse_values(a_values), cell);
            write_asweep_csv(fs::path(asweep_output), rows);
            std::cout << "wrote " << asweep_output << " (" << rows.size()
                      << " rows)\n";
        } else if (*report) {
            std::vector<RegimeKind> wanted = regime_list(p, {});
            if (wanted.empty()) {
                for (RegimeKind k : k_all_regimes)
                    if (fs::exists(fs::path(report_input) /
                                   ("cells_" + to_string(k) + ".csv")))
                        wanted.push_back(k);
                if (wanted.empty())
                    throw std::runtime_error("no cells_<regime>.csv files in " +
                                             report_input);
            }
            const auto data = load_cells(report_input, wanted);
            const RenderedTable t = render_table(find_table(report_table), data);
            std::cout << t.text;
            if (!report_output.empty()) {
                std::ofstream os(report_output);
                if (!os) throw std::runtime_error("cannot write " + report_output);
                os << t.csv;
                std::cout << "wrote " << report_output << "\n";
            }
        } else if (*plot) {
            const auto data = load_cells(plot_input, {regime_from_string(plot_regime)});
            HeatmapSpec spec;
            spec.metric = plot_metric;
            spec.scale = parse_choice<HeatmapScale>(
                plot_scale,
                {{"linear", HeatmapScale::linear}, {"log10", HeatmapScale::log10}},
                "--scale");
            const std::string svg = svg_heatmap(data.front().second, spec);
            std::ofstream os(plot_output);
            if (!os) throw std::runtime_error("cannot write " + plot_output);
            os << svg;
            std::cout << "wrote " << plot_output << "\n";
            if (!plot_matrix.empty()) {
                std::ofstream ms(plot_matrix);
                if (!ms) throw std::runtime_error("cannot write " + plot_matrix);
                ms << metric_matrix_csv(data.front().second, plot_metric);
                std::cout << "wrote " << plot_matrix << "\n";
            }
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
