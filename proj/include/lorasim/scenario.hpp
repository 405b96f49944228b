#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorasim/mac.hpp"
#include "lorasim/phy.hpp"

namespace lorasim {

enum class MacPolicy { pure_aloha, slotted_aloha, csma, tdma };

enum class TrafficModel { periodic, poisson };

enum class ShadowMode { per_packet, per_link };

const char* to_string(MacPolicy p);

class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& msg, int line = 0) : std::runtime_error(annotate(msg, line)) {}

  private:
    static std::string annotate(const std::string& msg, int line);
};

// Fully resolved experiment description. Every field defaults to the
// reference indoor configuration (SF9, 8 channels, 20 slots of 200 ms,
// 4 s reporting, 100 m x 100 m area).
struct ScenarioConfig {
    MacPolicy protocol = MacPolicy::tdma;

    int n_nodes = 20;
    double area_m = 100.0;
    double duration_s = 4000.0;
    double warmup_s = 0.0;  // dispositions before this instant are not measured
    double interval_s = 4.0;
    int segments = 10;
    bool trace = false;  // emit a per-event trace with the report
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    TrafficModel traffic = TrafficModel::periodic;

    int channels = 8;

    RadioConfig radio;          // phy.*
    double tx_power_dbm = 17.0;
    int payload_bytes = 10;

    LinkModel link;             // link.*
    ShadowMode shadow_mode = ShadowMode::per_packet;

    // Scheduled-access plan (tdma.*)
    int slots_per_frame = 20;
    double slot_ms = 200.0;
    double guard_ms = 55.616;
    double rho_max = 0.3;
    double t_release_s = 12.0;
    bool reuse_enabled = true;
    bool reuse_requires_higher_priority = false;
    int k_max = 0;              // resolved period exponent depth
    int join_w0_frames = 8;     // initial access-slot contention window
    int join_w_cap_frames = 512;

    // Out-of-band synchronization (sync.*)
    double beacon_period_s = 4.0;
    double beacon_toa_ms = 36.0;  // reported beacon airtime, kept configurable
    double resync_s = 600.0;
    double sync_sigma_ms = 2.0;
    double hw_sigma_ms = 3.0;
    double drift_ppm = 20.0;
    double beacon_loss = 0.0;
    double sync_retry_fraction = 0.25;
    double trunc_sigmas = 3.0;
    int holdover_max_failures = 3;

    CsmaConfig csma;            // csma.*

    // Energy model (energy.*)
    double energy_tx_mw = 50.0;
    double energy_rx_mw = 10.0;
    double energy_sleep_mw = 0.01;
    double listen_ms = 200.0;

    // Derived helpers
    double interval_ms() const { return interval_s * 1000.0; }
    double duration_ms() const { return duration_s * 1000.0; }
    double frame_ms() const { return slots_per_frame * slot_ms; }
    double data_toa_ms() const;
    int device_period_exponent() const;  // k with interval = frame * 2^k

    void validate() const;  // throws ConfigError
};

// Parses the flat key=value scenario format (dotted sections, '#'
// comments). Unknown keys, malformed values, and out-of-range fields are
// rejected with line-anchored messages.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

// Applies "key=value" overrides on top of an existing config.
void apply_overrides(ScenarioConfig& cfg, const std::vector<std::string>& overrides);

// Writes the fully resolved configuration; loading the echo reproduces an
// identical config.
void write_config_echo(const ScenarioConfig& cfg, std::ostream& os);

} // namespace lorasim
