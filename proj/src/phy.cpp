#include "lorasim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lorasim {

void RadioConfig::validate() const {
    if (sf < 7 || sf > 12)
        throw std::invalid_argument("spreading factor must be in 7..12, got " + std::to_string(sf));
    if (bw_hz <= 0.0)
        throw std::invalid_argument("bandwidth must be positive");
    if (cr < 1 || cr > 4)
        throw std::invalid_argument("coding-rate index must be in 1..4, got " + std::to_string(cr));
    if (preamble_symbols < 1)
        throw std::invalid_argument("preamble length must be at least 1 symbol");
}

bool RadioConfig::low_data_rate_optimized() const {
    switch (ldro) {
        case LdroMode::off: return false;
        case LdroMode::on: return true;
        case LdroMode::automatic: return symbol_time_ms(*this) > 16.0;
    }
    return false;
}

double symbol_time_ms(const RadioConfig& cfg) {
    return 1000.0 * std::pow(2.0, cfg.sf) / cfg.bw_hz;
}

int payload_symbols(const RadioConfig& cfg, int payload_bytes) {
    if (payload_bytes < 1 || payload_bytes > 255)
        throw std::invalid_argument("payload length must be in 1..255 bytes, got " +
                                    std::to_string(payload_bytes));
    int crc = cfg.crc_enabled ? 1 : 0;
    int h = cfg.explicit_header ? 0 : 1;
    int de = cfg.low_data_rate_optimized() ? 1 : 0;
    long num = 8L * payload_bytes - 4L * cfg.sf + 28 + 16L * crc - 20L * h;
    long den = 4L * (cfg.sf - 2L * de);
    long blocks = num > 0 ? (num + den - 1) / den : 0;
    long extra = std::max(blocks * (cfg.cr + 4), 0L);
    return static_cast<int>(8 + extra);
}

double time_on_air_ms(const RadioConfig& cfg, int payload_bytes) {
    double t_sym = symbol_time_ms(cfg);
    double t_preamble = (cfg.preamble_symbols + 4.25) * t_sym;
    double t_payload = payload_symbols(cfg, payload_bytes) * t_sym;
    return t_preamble + t_payload;
}

LinkModel::LinkModel() {
    capture_threshold_db.fill(8.0);
    capture_threshold_db[7] = 6.0;
    capture_threshold_db[9] = 8.0;
}

void LinkModel::validate() const {
    if (gamma <= 0.0)
        throw std::invalid_argument("path-loss exponent must be positive");
    if (shadow_sigma_db < 0.0)
        throw std::invalid_argument("shadowing std-dev must be non-negative");
    for (int sf = 7; sf <= 12; ++sf)
        if (!(capture_threshold_db[sf] >= 0.0))
            throw std::invalid_argument("capture threshold undefined for SF" + std::to_string(sf));
}

double LinkModel::capture_db(int sf) const {
    if (sf < 7 || sf > 12)
        throw std::invalid_argument("capture threshold requested for invalid SF");
    return capture_threshold_db[sf];
}

double path_loss_db(const LinkModel& link, double distance_m, double shadow_sample_db) {
    double d = std::max(distance_m, 1.0);  // clamp below the 1 m reference
    return link.pl0_db + 10.0 * link.gamma * std::log10(d) + shadow_sample_db;
}

namespace {

// Sub-nanosecond grazes are numerical artifacts of slot arithmetic, not
// physical overlaps.
constexpr double kOverlapEpsMs = 1e-6;

bool overlaps(const Transmission& a, const Transmission& b) {
    double a_end = a.start_time_ms + a.toa_ms;
    double b_end = b.start_time_ms + b.toa_ms;
    return a.start_time_ms < b_end - kOverlapEpsMs && b.start_time_ms < a_end - kOverlapEpsMs;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Resolves one overlap group (same channel, same SF, chained in time).
void resolve_group(std::span<const Transmission> txs, const std::vector<int>& group,
                   const LinkModel& link, std::vector<RxOutcome>& out) {
    int strongest = -1;
    for (int idx : group) {
        if (txs[idx].sampled_rx_power_dbm < link.sensitivity_dbm) {
            out[idx] = RxOutcome::lost_below_sensitivity;
            continue;
        }
        out[idx] = RxOutcome::lost_collision;
        if (strongest < 0 ||
            txs[idx].sampled_rx_power_dbm > txs[strongest].sampled_rx_power_dbm)
            strongest = idx;
    }
    if (strongest < 0) return;  // nothing detectable

    // Interference experienced by the candidate over its airtime: the
    // linear power sum of every transmission overlapping it.
    double interference_mw = 0.0;
    int n_overlapping = 0;
    for (int idx : group) {
        if (idx == strongest || !overlaps(txs[idx], txs[strongest])) continue;
        interference_mw += dbm_to_mw(txs[idx].sampled_rx_power_dbm);
        ++n_overlapping;
    }
    if (n_overlapping == 0) {
        out[strongest] = RxOutcome::delivered;
        return;
    }
    if (!link.capture_enabled) return;  // any contention kills everything

    double margin_db =
        txs[strongest].sampled_rx_power_dbm - mw_to_dbm(interference_mw);
    if (margin_db >= link.capture_db(txs[strongest].sf))
        out[strongest] = RxOutcome::delivered;
}

} // namespace

std::vector<RxOutcome> resolve_reception(std::span<const Transmission> txs,
                                         const LinkModel& link) {
    std::vector<RxOutcome> out(txs.size(), RxOutcome::lost_collision);
    if (txs.empty()) return out;

    std::vector<int> order(txs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (txs[a].channel_index != txs[b].channel_index)
            return txs[a].channel_index < txs[b].channel_index;
        if (txs[a].sf != txs[b].sf) return txs[a].sf < txs[b].sf;
        if (txs[a].start_time_ms != txs[b].start_time_ms)
            return txs[a].start_time_ms < txs[b].start_time_ms;
        return a < b;
    });

    // Sweep each (channel, SF) partition for transitively chained overlaps.
    std::vector<int> group;
    double group_end = 0.0;
    auto flush = [&]() {
        if (!group.empty()) resolve_group(txs, group, link, out);
        group.clear();
    };
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Transmission& t = txs[order[i]];
        bool same_partition =
            !group.empty() && txs[group.front()].channel_index == t.channel_index &&
            txs[group.front()].sf == t.sf;
        if (!same_partition || t.start_time_ms >= group_end - kOverlapEpsMs) {
            flush();
            group_end = 0.0;
        }
        group.push_back(order[i]);
        group_end = std::max(group_end, t.start_time_ms + t.toa_ms);
    }
    flush();
    return out;
}

} // namespace lorasim
