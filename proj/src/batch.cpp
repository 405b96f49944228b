#include "lorasim/batch.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lorasim {

std::vector<SimulationReport> run_batch_serial(const std::vector<RunSpec>& specs) {
    std::vector<SimulationReport> out(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
        out[i] = run_simulation(specs[i].config, specs[i].seed);
    return out;
}

std::vector<SimulationReport> run_batch_parallel(const std::vector<RunSpec>& specs,
                                                 int workers) {
    if (workers <= 0) workers = default_workers();
    std::vector<SimulationReport> out(specs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long i = 0; i < static_cast<long>(specs.size()); ++i)
        out[i] = run_simulation(specs[i].config, specs[i].seed);
#else
    (void)workers;
    out = run_batch_serial(specs);
#endif
    return out;
}

int default_workers() {
    if (const char* env = std::getenv("LORASIM_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<RunSpec> specs_for_seeds(const ScenarioConfig& cfg, const std::string& tag) {
    std::vector<RunSpec> specs;
    specs.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) specs.push_back(RunSpec{cfg, seed, tag});
    return specs;
}

double mean_pdr(const std::vector<SimulationReport>& reports) {
    if (reports.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : reports) sum += r.pdr;
    return sum / reports.size();
}

namespace {
double evaluate_pdr(const ScenarioConfig& base, int n, int workers,
                    const CapacityAdjuster& adjust, std::vector<CapacityPoint>& probes) {
    ScenarioConfig cfg = base;
    cfg.n_nodes = n;
    if (adjust) adjust(cfg, n);
    double pdr = mean_pdr(run_batch_parallel(specs_for_seeds(cfg), workers));
    probes.push_back(CapacityPoint{n, pdr});
    return pdr;
}
} // namespace

CapacityResult capacity_search(const ScenarioConfig& base, double pdr_threshold, int n_max,
                               int workers, const CapacityAdjuster& adjust) {
    if (pdr_threshold < 0.0 || pdr_threshold >= 1.0)
        throw std::invalid_argument("pdr threshold must be in [0,1)");
    CapacityResult result;
    if (n_max < 1) return result;
    if (evaluate_pdr(base, n_max, workers, adjust, result.probes) >= pdr_threshold) {
        result.max_supported = n_max;
        return result;
    }
    if (evaluate_pdr(base, 1, workers, adjust, result.probes) < pdr_threshold) {
        result.max_supported = 0;
        return result;
    }
    int lo = 1, hi = n_max;  // lo passes, hi fails
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (evaluate_pdr(base, mid, workers, adjust, result.probes) >= pdr_threshold)
            lo = mid;
        else
            hi = mid;
    }
    result.max_supported = lo;
    return result;
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "sync_sigma") return SweepAxis::sync_sigma;
    if (name == "guard_time") return SweepAxis::guard_time;
    throw std::invalid_argument("unknown sweep axis '" + name + "' (sync_sigma|guard_time)");
}

std::vector<SweepPoint> sensitivity_sweep(const ScenarioConfig& base, SweepAxis axis,
                                          const std::vector<double>& grid, int workers) {
    if (grid.empty()) throw std::invalid_argument("sweep grid must be non-empty");
    std::vector<RunSpec> specs;
    for (double x : grid) {
        ScenarioConfig cfg = base;
        if (axis == SweepAxis::sync_sigma) {
            cfg.sync_sigma_ms = x;
        } else {
            cfg.guard_ms = x;
            cfg.slot_ms = cfg.data_toa_ms() + x;  // slot tracks airtime plus guard
            cfg.interval_s = cfg.frame_ms() / 1000.0;  // one uplink per frame
            cfg.t_release_s = 3.0 * cfg.interval_s;
            cfg.k_max = 0;
        }
        for (RunSpec& s : specs_for_seeds(cfg, std::to_string(x))) specs.push_back(s);
    }
    std::vector<SimulationReport> reports = run_batch_parallel(specs, workers);

    std::vector<SweepPoint> curve;
    std::size_t per_point = base.seeds.size();
    for (std::size_t p = 0; p < grid.size(); ++p) {
        SweepPoint pt;
        pt.x = grid[p];
        double pdr = 0.0, ci = 0.0;
        for (std::size_t s = 0; s < per_point; ++s) {
            const SimulationReport& r = reports[p * per_point + s];
            pt.runs.push_back(r);
            pdr += r.pdr;
            ci += r.pdr_ci95;
        }
        pt.mean_pdr = pdr / per_point;
        pt.mean_ci95 = ci / per_point;
        curve.push_back(std::move(pt));
    }
    return curve;
}

double cliff_midpoint(const std::vector<SweepPoint>& curve) {
    if (curve.size() < 2) throw std::invalid_argument("need at least two sweep points");
    std::vector<SweepPoint> pts = curve;
    std::sort(pts.begin(), pts.end(),
              [](const SweepPoint& a, const SweepPoint& b) { return a.x < b.x; });
    double lo = pts.front().mean_pdr, hi = pts.front().mean_pdr;
    for (const auto& p : pts) {
        lo = std::min(lo, p.mean_pdr);
        hi = std::max(hi, p.mean_pdr);
    }
    double level = (lo + hi) / 2.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double y0 = pts[i - 1].mean_pdr, y1 = pts[i].mean_pdr;
        if ((y0 < level && y1 >= level) || (y0 >= level && y1 < level)) {
            double t = (level - y0) / (y1 - y0);
            return pts[i - 1].x + t * (pts[i].x - pts[i - 1].x);
        }
    }
    return pts.front().x;  // no crossing: the curve never leaves one side
}

} // namespace lorasim
