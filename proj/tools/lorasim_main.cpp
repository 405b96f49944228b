#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lorasim/batch.hpp"
#include "lorasim/report.hpp"
#include "lorasim/reproduce.hpp"
#include "lorasim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

namespace fs = std::filesystem;
using namespace lorasim;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

ScenarioConfig load_with_overrides(const std::string& config_path,
                                   const std::vector<std::string>& sets) {
    ScenarioConfig cfg = load_config(config_path);
    apply_overrides(cfg, sets);
    return cfg;
}

void echo_config(const ScenarioConfig& cfg, const fs::path& dir) {
    std::ostringstream os;
    write_config_echo(cfg, os);
    write_file(dir / "config_echo.cfg", os.str());
}

int cmd_run(const ScenarioConfig& cfg, const std::string& out_dir, int workers) {
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    std::vector<RunSpec> specs = specs_for_seeds(cfg);
    std::vector<SimulationReport> reports = run_batch_parallel(specs, workers);

    std::string summary = SimulationReport::csv_header() + "\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        summary += reports[i].csv_row() + "\n";
        write_file(fs::path(out_dir) / ("run_seed" + std::to_string(specs[i].seed) + ".csv"),
                   SimulationReport::csv_header() + "\n" + reports[i].csv_row() + "\n");
        if (!reports[i].trace.empty()) {
            std::string t = SimulationReport::trace_header() + "\n";
            for (const std::string& line : reports[i].trace) t += line + "\n";
            write_file(fs::path(out_dir) /
                           ("trace_seed" + std::to_string(specs[i].seed) + ".csv"),
                       t);
        }
        if (!reports[i].alloc_log.empty()) {
            std::string t = SimulationReport::alloc_log_header() + "\n";
            for (const std::string& line : reports[i].alloc_log) t += line + "\n";
            write_file(fs::path(out_dir) /
                           ("alloc_seed" + std::to_string(specs[i].seed) + ".csv"),
                       t);
        }
        if (!reports[i].fsm_log.empty()) {
            std::string t = SimulationReport::fsm_log_header() + "\n";
            for (const std::string& line : reports[i].fsm_log) t += line + "\n";
            write_file(fs::path(out_dir) /
                           ("fsm_seed" + std::to_string(specs[i].seed) + ".csv"),
                       t);
        }
    }
    summary += aggregate_reports(reports).csv_row() + "\n";
    write_file(fs::path(out_dir) / "summary.csv", summary);

    bool any_infeasible = false;
    for (const auto& r : reports)
        if (!r.note.empty() && r.note.rfind("infeasible", 0) == 0) any_infeasible = true;
    std::cout << "wrote " << reports.size() << " runs to " << out_dir;
    if (any_infeasible) std::cout << " (some runs report infeasible allocations)";
    std::cout << "\n";
    return kExitOk;
}

int cmd_sweep(const ScenarioConfig& cfg, const std::string& out_dir, int workers,
              const std::string& axis_name, const std::vector<double>& grid) {
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    SweepAxis axis = sweep_axis_from_string(axis_name);
    std::vector<SweepPoint> curve = sensitivity_sweep(cfg, axis, grid, workers);
    std::string csv = axis_name + ",pdr,pdr_ci95\n";
    std::string runs = SimulationReport::csv_header() + "\n";
    for (const auto& p : curve) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.x, p.mean_pdr, p.mean_ci95);
        csv += buf;
        for (const auto& r : p.runs) runs += r.csv_row() + "\n";
    }
    write_file(fs::path(out_dir) / "sweep.csv", csv);
    write_file(fs::path(out_dir) / "sweep_runs.csv", runs);
    char mid[64];
    std::snprintf(mid, sizeof(mid), "%.3f", cliff_midpoint(curve));
    std::cout << "sweep over " << axis_name << ": cliff midpoint " << mid << "\n";
    return kExitOk;
}

int cmd_capacity(const ScenarioConfig& cfg, const std::string& out_dir, int workers,
                 double threshold, int n_max) {
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    CapacityResult res = capacity_search(cfg, threshold, n_max, workers);
    std::string csv = "n_nodes,mean_pdr\n";
    for (const auto& p : res.probes) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%.6f\n", p.n_nodes, p.mean_pdr);
        csv += buf;
    }
    csv += "capacity," + std::to_string(res.max_supported) + "\n";
    write_file(fs::path(out_dir) / "capacity.csv", csv);
    std::cout << "max supported devices at threshold " << threshold << ": "
              << res.max_supported << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoRaWAN MAC protocol simulator: scheduled access with out-of-band "
                 "synchronization against ALOHA-family baselines"};
    app.require_subcommand(1);

    int workers = 0;  // 0 = LORASIM_WORKERS env or hardware default
    app.add_option("--workers", workers, "parallel run workers (default: env or hardware)");

    std::string config_path, out_dir = "out";
    std::vector<std::string> sets;

    auto* run = app.add_subcommand("run", "run a scenario for every configured seed");
    run->add_option("config", config_path, "scenario config file")->required();
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_option("--set", sets, "override config keys, key=value");

    std::string exhibit_name, ref_csv = "data/paper_reference.csv";
    auto* rep = app.add_subcommand("reproduce", "run a canned reproduction exhibit");
    rep->add_option("exhibit", exhibit_name, "table3|fig7|fig8|fig9|fig10|fig11")->required();
    rep->add_option("-o,--out", out_dir, "output directory");
    rep->add_option("--ref", ref_csv, "reference value table");

    std::string axis;
    std::vector<double> grid;
    auto* sweep = app.add_subcommand("sweep", "sensitivity sweep over one axis");
    sweep->add_option("config", config_path, "scenario config file")->required();
    sweep->add_option("--axis", axis, "sync_sigma|guard_time")->required();
    sweep->add_option("--grid", grid, "axis values")->required()->delimiter(',');
    sweep->add_option("-o,--out", out_dir, "output directory");
    sweep->add_option("--set", sets, "override config keys, key=value");

    double threshold = 0.8;
    int n_max = 250;
    auto* cap = app.add_subcommand("capacity", "bisection search for the supported population");
    cap->add_option("config", config_path, "scenario config file")->required();
    cap->add_option("--threshold", threshold, "delivery-ratio threshold");
    cap->add_option("--n-max", n_max, "upper bound for the search");
    cap->add_option("-o,--out", out_dir, "output directory");
    cap->add_option("--set", sets, "override config keys, key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run->parsed())
            return cmd_run(load_with_overrides(config_path, sets), out_dir, workers);
        if (rep->parsed()) {
            ExhibitResult res =
                reproduce(exhibit_from_string(exhibit_name), out_dir, workers, ref_csv);
            int fails = 0;
            for (const auto& c : res.comparisons) {
                std::cout << (c.status == "fail" ? "[FAIL] "
                              : c.status == "pass" ? "[PASS] "
                                                   : "[info] ")
                          << c.key << "." << c.metric << " = " << c.observed << "\n";
                if (c.status == "fail") ++fails;
            }
            return fails == 0 ? kExitOk : kExitRuntime;
        }
        if (sweep->parsed())
            return cmd_sweep(load_with_overrides(config_path, sets), out_dir, workers, axis,
                             grid);
        if (cap->parsed())
            return cmd_capacity(load_with_overrides(config_path, sets), out_dir, workers,
                                threshold, n_max);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
