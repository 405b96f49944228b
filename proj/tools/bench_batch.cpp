// Benchmarks the OpenMP batch runner against the serial reference on a
// canned batch and verifies that both produce identical reports.

#include <chrono>
#include <cstdio>
#include <iostream>

#include "lorasim/batch.hpp"

using namespace lorasim;

namespace {

std::vector<RunSpec> make_batch() {
    std::vector<RunSpec> specs;
    for (MacPolicy p : {MacPolicy::pure_aloha, MacPolicy::slotted_aloha, MacPolicy::tdma}) {
        ScenarioConfig cfg;
        cfg.protocol = p;
        cfg.n_nodes = 40;
        cfg.duration_s = 1500.0;
        cfg.seeds = {1, 2, 3, 4};
        for (const RunSpec& s : specs_for_seeds(cfg)) specs.push_back(s);
    }
    return specs;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
    std::vector<RunSpec> specs = make_batch();
    std::printf("batch of %zu runs\n", specs.size());

    auto t0 = std::chrono::steady_clock::now();
    std::vector<SimulationReport> serial = run_batch_serial(specs);
    double t_serial = seconds_since(t0);

    int workers = default_workers();
    t0 = std::chrono::steady_clock::now();
    std::vector<SimulationReport> parallel = run_batch_parallel(specs, workers);
    double t_parallel = seconds_since(t0);

    for (std::size_t i = 0; i < serial.size(); ++i) {
        if (serial[i].csv_row() != parallel[i].csv_row()) {
            std::printf("MISMATCH at run %zu\n", i);
            std::printf("  serial:   %s\n", serial[i].csv_row().c_str());
            std::printf("  parallel: %s\n", parallel[i].csv_row().c_str());
            return 1;
        }
    }
    std::printf("serial:   %.3f s\n", t_serial);
    std::printf("parallel: %.3f s (%d workers)\n", t_parallel, workers);
    std::printf("speedup:  %.2fx, outputs identical\n", t_serial / t_parallel);
    return 0;
}
