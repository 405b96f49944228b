#pragma once

#include <array>
#include <span>
#include <vector>

namespace lorasim {

enum class LdroMode { off, on, automatic };

// LoRa modulation parameters governing airtime.
struct RadioConfig {
    int sf = 9;
    double bw_hz = 125000.0;
    int cr = 1;                   // coding-rate index, 1 => 4/5
    int preamble_symbols = 8;
    bool crc_enabled = true;
    bool explicit_header = true;  // H = 0 when the explicit header is present
    LdroMode ldro = LdroMode::automatic;

    void validate() const;  // throws std::invalid_argument on bad fields
    // Resolved DE bit. In automatic mode DE is set exactly when the symbol
    // time exceeds 16 ms.
    bool low_data_rate_optimized() const;
};

double symbol_time_ms(const RadioConfig& cfg);
int payload_symbols(const RadioConfig& cfg, int payload_bytes);
double time_on_air_ms(const RadioConfig& cfg, int payload_bytes);

// Log-distance link model with per-packet log-normal shadowing and
// per-SF capture thresholds.
struct LinkModel {
    double pl0_db = 40.0;           // reference loss at 1 m
    double gamma = 4.0;             // path-loss exponent
    double shadow_sigma_db = 6.0;
    double noise_floor_dbm = -117.0;
    double sensitivity_dbm = -139.0;
    bool capture_enabled = true;
    std::array<double, 13> capture_threshold_db;  // indexed by SF, 7..12 used

    LinkModel();
    void validate() const;
    double capture_db(int sf) const;
};

// Shadowing is drawn by the caller so the sampling policy (per packet vs
// per link) stays outside the pure arithmetic.
double path_loss_db(const LinkModel& link, double distance_m, double shadow_sample_db);

struct Transmission {
    int node_id = -1;
    int channel_index = 0;
    int sf = 9;
    double start_time_ms = 0.0;
    double toa_ms = 0.0;
    double tx_power_dbm = 17.0;
    double distance_m = 1.0;
    double sampled_rx_power_dbm = 0.0;  // set once per transmission
};

enum class RxOutcome { delivered, lost_collision, lost_below_sensitivity };

// Resolves the fate of a set of transmissions at the gateway.
// Transmissions on different channels never interact; different SFs on the
// same channel are treated as orthogonal. Within each (channel, SF)
// overlap group at most one transmission is delivered: the strongest
// detectable one, provided its power exceeds the linear power sum of
// everything overlapping it by the per-SF capture threshold.
std::vector<RxOutcome> resolve_reception(std::span<const Transmission> txs,
                                         const LinkModel& link);

} // namespace lorasim
