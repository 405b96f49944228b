#include "lorasim/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace lorasim {

namespace {
std::string num(double v, const char* spec = "%.6f") {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}
} // namespace

std::string SimulationReport::trace_header() {
    return "time_ms,event,node,channel,detail";
}

std::string SimulationReport::alloc_log_header() {
    return "time_ms,dev_id,type,channel,first_slot,n_slots,is_reuse,load_vector";
}

std::string SimulationReport::fsm_log_header() {
    return "time_ms,node,event,from,to";
}

std::string SimulationReport::csv_header() {
    return "protocol,n_nodes,sf,interval_s,seed,sent,received,pdr,pdr_ci95,"
           "throughput_kbps,utilization,energy_mj_per_success,sync_events,collisions,"
           "below_sensitivity,duration_s,dropped_stale,gave_up,control_sent,"
           "control_delivered,offered_kbps,energy_total_mj,e_tx_mj,e_rx_mj,e_sync_mj,"
           "e_sleep_mj,reuse_grants,reclaimed,alloc_failures,mean_operational_s,note";
}

std::string SimulationReport::csv_row() const {
    std::string row;
    row += protocol;
    row += "," + std::to_string(n_nodes);
    row += "," + std::to_string(sf);
    row += "," + num(interval_s, "%.3f");
    row += "," + std::to_string(seed);
    row += "," + std::to_string(sent);
    row += "," + std::to_string(received);
    row += "," + num(pdr);
    row += "," + num(pdr_ci95);
    row += "," + num(throughput_kbps);
    row += "," + num(utilization);
    row += "," + num(energy_mj_per_success, "%.4f");
    row += "," + std::to_string(sync_events);
    row += "," + std::to_string(collisions);
    row += "," + std::to_string(below_sensitivity);
    row += "," + num(duration_s, "%.3f");
    row += "," + std::to_string(dropped_stale);
    row += "," + std::to_string(gave_up);
    row += "," + std::to_string(control_sent);
    row += "," + std::to_string(control_delivered);
    row += "," + num(offered_kbps);
    row += "," + num(energy_total_mj, "%.4f");
    row += "," + num(e_tx_mj, "%.4f");
    row += "," + num(e_rx_mj, "%.4f");
    row += "," + num(e_sync_mj, "%.4f");
    row += "," + num(e_sleep_mj, "%.4f");
    row += "," + std::to_string(reuse_grants);
    row += "," + std::to_string(reclaimed);
    row += "," + std::to_string(alloc_failures);
    row += "," + num(mean_operational_s, "%.3f");
    row += "," + note;
    return row;
}

SimulationReport aggregate_reports(const std::vector<SimulationReport>& rows) {
    if (rows.empty()) throw std::invalid_argument("cannot aggregate zero reports");
    SimulationReport agg = rows.front();
    agg.seed = rows.size();
    auto mean = [&](auto field) {
        double sum = 0.0;
        for (const auto& r : rows) sum += static_cast<double>(r.*field);
        return sum / rows.size();
    };
    agg.sent = static_cast<long>(std::llround(mean(&SimulationReport::sent)));
    agg.received = static_cast<long>(std::llround(mean(&SimulationReport::received)));
    agg.pdr = mean(&SimulationReport::pdr);
    agg.pdr_ci95 = mean(&SimulationReport::pdr_ci95);
    agg.throughput_kbps = mean(&SimulationReport::throughput_kbps);
    agg.utilization = mean(&SimulationReport::utilization);
    agg.energy_mj_per_success = mean(&SimulationReport::energy_mj_per_success);
    agg.sync_events = static_cast<long>(std::llround(mean(&SimulationReport::sync_events)));
    agg.collisions = static_cast<long>(std::llround(mean(&SimulationReport::collisions)));
    agg.below_sensitivity =
        static_cast<long>(std::llround(mean(&SimulationReport::below_sensitivity)));
    agg.dropped_stale = static_cast<long>(std::llround(mean(&SimulationReport::dropped_stale)));
    agg.gave_up = static_cast<long>(std::llround(mean(&SimulationReport::gave_up)));
    agg.control_sent = static_cast<long>(std::llround(mean(&SimulationReport::control_sent)));
    agg.control_delivered =
        static_cast<long>(std::llround(mean(&SimulationReport::control_delivered)));
    agg.offered_kbps = mean(&SimulationReport::offered_kbps);
    agg.energy_total_mj = mean(&SimulationReport::energy_total_mj);
    agg.e_tx_mj = mean(&SimulationReport::e_tx_mj);
    agg.e_rx_mj = mean(&SimulationReport::e_rx_mj);
    agg.e_sync_mj = mean(&SimulationReport::e_sync_mj);
    agg.e_sleep_mj = mean(&SimulationReport::e_sleep_mj);
    agg.reuse_grants = static_cast<long>(std::llround(mean(&SimulationReport::reuse_grants)));
    agg.reclaimed = static_cast<long>(std::llround(mean(&SimulationReport::reclaimed)));
    agg.alloc_failures = static_cast<long>(std::llround(mean(&SimulationReport::alloc_failures)));
    agg.mean_operational_s = mean(&SimulationReport::mean_operational_s);
    agg.note = "aggregate";
    return agg;
}

} // namespace lorasim
