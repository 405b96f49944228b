#include "lorasim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lorasim {

void account_energy(EnergyLedger& ledger, RadioMode mode, double duration_ms,
                    const EnergyPowers& powers) {
    if (duration_ms < 0.0) throw std::invalid_argument("negative energy interval");
    double dt_s = duration_ms / 1000.0;
    switch (mode) {
        case RadioMode::tx:
            ledger.e_tx_mj += powers.tx_mw * dt_s;
            ledger.active_ms += duration_ms;
            break;
        case RadioMode::rx:
            ledger.e_rx_mj += powers.rx_mw * dt_s;
            ledger.active_ms += duration_ms;
            break;
        case RadioMode::sync_listen:
            ledger.e_sync_mj += powers.rx_mw * dt_s;
            ledger.active_ms += duration_ms;
            if (duration_ms > 0.0) ++ledger.n_sync;
            break;
        case RadioMode::sleep:
            ledger.e_sleep_mj += powers.sleep_mw * dt_s;
            break;
    }
}

MetricsAccumulator::MetricsAccumulator(int n_nodes, double duration_ms, int segments,
                                       double start_ms)
    : duration_ms_(duration_ms),
      start_ms_(start_ms),
      segments_(std::max(segments, 1)),
      node_sent_(n_nodes, 0),
      node_delivered_(n_nodes, 0),
      node_collision_(n_nodes, 0),
      node_below_(n_nodes, 0),
      node_dropped_(n_nodes, 0),
      seg_sent_(segments_, 0),
      seg_received_(segments_, 0) {}

int MetricsAccumulator::segment_of(double t_ms) const {
    double span = duration_ms_ - start_ms_;
    int seg = static_cast<int>((t_ms - start_ms_) / span * segments_);
    return std::clamp(seg, 0, segments_ - 1);
}

void MetricsAccumulator::on_sent(int node, double t_ms) {
    if (!in_window(t_ms)) return;
    ++sent_;
    ++node_sent_[node];
    ++seg_sent_[segment_of(t_ms)];
}

void MetricsAccumulator::on_delivered(int node, double t_ms, double toa_ms,
                                      int payload_bytes) {
    if (!in_window(t_ms)) return;
    ++received_;
    ++node_delivered_[node];
    ++seg_received_[segment_of(t_ms)];
    delivered_airtime_ms_ += toa_ms;
    delivered_payload_bytes_ += payload_bytes;
}

void MetricsAccumulator::on_lost_collision(int node, double t_ms) {
    if (!in_window(t_ms)) return;
    ++lost_collision_;
    ++node_collision_[node];
}

void MetricsAccumulator::on_lost_below_sensitivity(int node, double t_ms) {
    if (!in_window(t_ms)) return;
    ++lost_below_sensitivity_;
    ++node_below_[node];
}

void MetricsAccumulator::on_dropped_stale(int node, double t_ms) {
    // A dropped packet still counts as offered: it entered the MAC queue
    // and was disposed of without reaching the gateway.
    if (!in_window(t_ms)) return;
    ++dropped_stale_;
    ++node_dropped_[node];
    ++sent_;
    ++node_sent_[node];
    ++seg_sent_[segment_of(t_ms)];
}

void MetricsAccumulator::on_gave_up(int node, double t_ms) {
    if (!in_window(t_ms)) return;
    ++gave_up_;
    ++sent_;
    ++node_sent_[node];
    ++seg_sent_[segment_of(t_ms)];
}

long MetricsAccumulator::disposed_for(int node) const {
    return node_delivered_[node] + node_collision_[node] + node_below_[node] +
           node_dropped_[node];
}

std::vector<double> MetricsAccumulator::segment_pdrs() const {
    std::vector<double> pdrs;
    for (int i = 0; i < segments_; ++i)
        if (seg_sent_[i] > 0)
            pdrs.push_back(static_cast<double>(seg_received_[i]) / seg_sent_[i]);
    return pdrs;
}

MetricsSummary compute_metrics(const MetricsAccumulator& acc, double duration_s,
                               int channels, double total_energy_mj) {
    if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");
    MetricsSummary m;
    m.pdr = acc.sent() > 0 ? static_cast<double>(acc.received()) / acc.sent() : 0.0;

    std::vector<double> pdrs = acc.segment_pdrs();
    if (pdrs.size() >= 2) {
        double mean = 0.0;
        for (double p : pdrs) mean += p;
        mean /= pdrs.size();
        double var = 0.0;
        for (double p : pdrs) var += (p - mean) * (p - mean);
        var /= (pdrs.size() - 1);
        m.pdr_ci95 = 1.96 * std::sqrt(var / pdrs.size());
    }

    m.throughput_kbps = acc.delivered_payload_bytes() * 8.0 / duration_s / 1000.0;
    m.utilization = acc.delivered_airtime_ms() / 1000.0 / (channels * duration_s);
    m.energy_mj_per_success = acc.received() > 0
                                  ? total_energy_mj / acc.received()
                                  : std::numeric_limits<double>::infinity();
    return m;
}

} // namespace lorasim
