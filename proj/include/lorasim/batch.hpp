#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lorasim/report.hpp"
#include "lorasim/scenario.hpp"
#include "lorasim/sim.hpp"

namespace lorasim {

struct RunSpec {
    ScenarioConfig config;
    std::uint64_t seed = 1;
    std::string tag;  // carried into output grouping, e.g. a sweep point
};

// Serial reference: runs the specs one after another in order.
std::vector<SimulationReport> run_batch_serial(const std::vector<RunSpec>& specs);

// OpenMP batch execution across independent runs. Runs share nothing, so
// the result vector is identical to the serial reference regardless of the
// worker count. workers <= 0 selects the environment default.
std::vector<SimulationReport> run_batch_parallel(const std::vector<RunSpec>& specs,
                                                 int workers);

// Default worker count: LORASIM_WORKERS env var, else the hardware value.
int default_workers();

std::vector<RunSpec> specs_for_seeds(const ScenarioConfig& cfg, const std::string& tag = "");

double mean_pdr(const std::vector<SimulationReport>& reports);

struct CapacityPoint {
    int n_nodes;
    double mean_pdr;
};

struct CapacityResult {
    int max_supported = 0;
    std::vector<CapacityPoint> probes;  // every bisection evaluation
};

// Largest N whose mean PDR across the config's seeds stays at or above the
// threshold, found by monotone bisection. The adjuster reshapes the config
// for each probed N (defaults to setting n_nodes only); scaling runs use it
// to grow the admission warmup with the population.
using CapacityAdjuster = std::function<void(ScenarioConfig&, int)>;
CapacityResult capacity_search(const ScenarioConfig& base, double pdr_threshold, int n_max,
                               int workers, const CapacityAdjuster& adjust = {});

enum class SweepAxis { sync_sigma, guard_time };

SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepPoint {
    double x;
    double mean_pdr;
    double mean_ci95;
    std::vector<SimulationReport> runs;
};

// One simulation batch per grid point with the same seeds at every point
// for variance reduction. The guard axis resizes the slot to airtime plus
// guard; the sigma axis sets the sync residual spread.
std::vector<SweepPoint> sensitivity_sweep(const ScenarioConfig& base, SweepAxis axis,
                                          const std::vector<double>& grid, int workers);

// Interpolated midpoint of the PDR cliff: the x where the curve crosses
// halfway between its minimum and maximum.
double cliff_midpoint(const std::vector<SweepPoint>& curve);

} // namespace lorasim
