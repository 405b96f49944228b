#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lorasim {

// One summary row per run. The first fifteen columns are the stable v1
// schema; the remaining columns carry diagnostic detail.
struct SimulationReport {
    std::string protocol;
    int n_nodes = 0;
    int sf = 9;
    double interval_s = 0.0;
    std::uint64_t seed = 0;
    long sent = 0;
    long received = 0;
    double pdr = 0.0;
    double pdr_ci95 = 0.0;
    double throughput_kbps = 0.0;
    double utilization = 0.0;
    double energy_mj_per_success = 0.0;
    long sync_events = 0;
    long collisions = 0;
    long below_sensitivity = 0;

    double duration_s = 0.0;
    long dropped_stale = 0;
    long gave_up = 0;
    long control_sent = 0;
    long control_delivered = 0;
    double offered_kbps = 0.0;
    double energy_total_mj = 0.0;
    double e_tx_mj = 0.0;
    double e_rx_mj = 0.0;
    double e_sync_mj = 0.0;
    double e_sleep_mj = 0.0;
    long reuse_grants = 0;
    long reclaimed = 0;
    long alloc_failures = 0;
    double mean_operational_s = 0.0;  // mean time for a node to become operational
    std::string note;                 // e.g. infeasibility diagnostics

    // Per-event trace rows (time_ms,event,node,channel,detail); filled only
    // when the scenario enables tracing.
    std::vector<std::string> trace;
    static std::string trace_header();

    // Allocation audit rows and device state-machine transitions, also
    // gated behind the trace flag.
    std::vector<std::string> alloc_log;
    static std::string alloc_log_header();
    std::vector<std::string> fsm_log;
    static std::string fsm_log_header();

    static std::string csv_header();
    std::string csv_row() const;
};

// Aggregate (mean) row across seeds; seed column becomes the run count.
SimulationReport aggregate_reports(const std::vector<SimulationReport>& rows);

} // namespace lorasim
