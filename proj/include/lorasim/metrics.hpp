#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lorasim {

enum class RadioMode { tx, rx, sync_listen, sleep };

// Per-node energy accounting in millijoules, split into the four
// components of the total-energy model.
struct EnergyLedger {
    double e_tx_mj = 0.0;
    double e_rx_mj = 0.0;
    double e_sync_mj = 0.0;
    double e_sleep_mj = 0.0;
    long n_sync = 0;
    double active_ms = 0.0;  // radio-on time, used to derive sleep time

    double total_mj() const { return e_tx_mj + e_rx_mj + e_sync_mj + e_sleep_mj; }
};

struct EnergyPowers {
    double tx_mw = 50.0;
    double rx_mw = 10.0;
    double sleep_mw = 0.01;
};

// e += P_mode * dt. Sync listens also bump the sync-event count.
void account_energy(EnergyLedger& ledger, RadioMode mode, double duration_ms,
                    const EnergyPowers& powers);

// Packet fates plus per-segment tallies for confidence intervals. Events
// before start_ms fall outside the measurement window and are ignored.
class MetricsAccumulator {
  public:
    MetricsAccumulator(int n_nodes, double duration_ms, int segments, double start_ms = 0.0);

    void on_sent(int node, double t_ms);        // a packet left the node's queue
    void on_delivered(int node, double t_ms, double toa_ms, int payload_bytes);
    void on_lost_collision(int node, double t_ms);
    void on_lost_below_sensitivity(int node, double t_ms);
    void on_dropped_stale(int node, double t_ms);
    // CSMA exhausted its backoff stages: the packet was offered but never
    // reached the air, so it still counts against the delivery ratio.
    void on_gave_up(int node, double t_ms);

    long sent() const { return sent_; }
    long received() const { return received_; }
    long lost_collision() const { return lost_collision_; }
    long lost_below_sensitivity() const { return lost_below_sensitivity_; }
    long dropped_stale() const { return dropped_stale_; }
    long gave_up() const { return gave_up_; }
    long sent_for(int node) const { return node_sent_[node]; }
    long delivered_for(int node) const { return node_delivered_[node]; }
    long disposed_for(int node) const;
    double delivered_airtime_ms() const { return delivered_airtime_ms_; }
    long delivered_payload_bytes() const { return delivered_payload_bytes_; }

    // Per-segment delivery ratios for the CI computation.
    std::vector<double> segment_pdrs() const;

  private:
    int segment_of(double t_ms) const;
    bool in_window(double t_ms) const { return t_ms >= start_ms_; }

    double duration_ms_;
    double start_ms_;
    int segments_;
    long sent_ = 0, received_ = 0;
    long lost_collision_ = 0, lost_below_sensitivity_ = 0;
    long dropped_stale_ = 0, gave_up_ = 0;
    double delivered_airtime_ms_ = 0.0;
    long delivered_payload_bytes_ = 0;
    std::vector<long> node_sent_, node_delivered_, node_collision_, node_below_, node_dropped_;
    std::vector<long> seg_sent_, seg_received_;
};

struct MetricsSummary {
    double pdr = 0.0;
    double pdr_ci95 = 0.0;
    double throughput_kbps = 0.0;
    double utilization = 0.0;
    double energy_mj_per_success = 0.0;  // infinity when nothing was received
};

MetricsSummary compute_metrics(const MetricsAccumulator& acc, double duration_s,
                               int channels, double total_energy_mj);

} // namespace lorasim
