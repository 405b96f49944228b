#include "lorasim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "lorasim/superframe.hpp"

namespace lorasim {

const char* to_string(MacPolicy p) {
    switch (p) {
        case MacPolicy::pure_aloha: return "pure_aloha";
        case MacPolicy::slotted_aloha: return "slotted_aloha";
        case MacPolicy::csma: return "csma";
        case MacPolicy::tdma: return "tdma";
    }
    return "?";
}

std::string ConfigError::annotate(const std::string& msg, int line) {
    if (line <= 0) return msg;
    return "line " + std::to_string(line) + ": " + msg;
}

double ScenarioConfig::data_toa_ms() const { return time_on_air_ms(radio, payload_bytes); }

int ScenarioConfig::device_period_exponent() const {
    PeriodCheck check = validate_period(interval_ms(), frame_ms(), k_max);
    if (!check.ok) throw ConfigError("reporting interval: " + check.error);
    return check.k;
}

void ScenarioConfig::validate() const {
    radio.validate();
    link.validate();
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(n_nodes >= 1, "sim.n_nodes must be at least 1");
    require(area_m > 0.0, "sim.area_m must be positive");
    require(duration_s > 0.0, "sim.duration_s must be positive");
    require(warmup_s >= 0.0 && warmup_s < duration_s,
            "sim.warmup_s must be in [0, duration)");
    require(interval_s > 0.0, "sim.interval_s must be positive");
    require(segments >= 2, "sim.segments must be at least 2");
    require(!seeds.empty(), "sim.seeds must list at least one seed");
    require(channels >= 1, "net.channels must be at least 1");
    require(payload_bytes >= 1 && payload_bytes <= 255, "phy.payload_bytes must be in 1..255");
    require(slots_per_frame >= 1, "tdma.slots_per_frame must be at least 1");
    require(slot_ms > 0.0, "tdma.slot_ms must be positive");
    require(guard_ms >= 0.0, "tdma.guard_ms must be non-negative");
    require(rho_max >= 0.0 && rho_max <= 1.0, "tdma.rho_max must be in [0,1]");
    require(t_release_s > 0.0, "tdma.t_release_s must be positive");
    require(beacon_period_s > 0.0, "sync.beacon_period_s must be positive");
    require(resync_s > 0.0, "sync.resync_s must be positive");
    require(sync_sigma_ms >= 0.0, "sync.sigma_ms must be non-negative");
    require(hw_sigma_ms >= 0.0, "sync.hw_sigma_ms must be non-negative");
    require(drift_ppm >= 0.0, "sync.drift_ppm must be non-negative");
    require(beacon_loss >= 0.0 && beacon_loss < 1.0, "sync.beacon_loss must be in [0,1)");
    require(csma.contention_window >= 1, "csma.w must be at least 1");
    require(csma.max_backoff_stages >= 1, "csma.max_stages must be at least 1");
    require(energy_tx_mw >= 0.0 && energy_rx_mw >= 0.0 && energy_sleep_mw >= 0.0,
            "energy powers must be non-negative");
    require(listen_ms > 0.0, "energy.listen_ms must be positive");
    // Slot structure consistency: the slot must hold the airtime plus guard.
    double toa = data_toa_ms();
    if (protocol == MacPolicy::tdma) {
        require(std::abs(slot_ms - (toa + guard_ms)) <= 1e-6,
                "tdma.slot_ms must equal the data airtime plus tdma.guard_ms (" +
                    std::to_string(toa) + " + " + std::to_string(guard_ms) + " ms)");
        PeriodCheck check = validate_period(interval_ms(), frame_ms(), k_max);
        if (!check.ok) throw ConfigError("reporting interval: " + check.error);
    }
}

namespace {

struct RawEntry {
    std::string value;
    int line;
    bool consumed = false;
};

using RawMap = std::map<std::string, RawEntry>;

struct Parser {
    RawMap raw;

    bool has(const std::string& key) const { return raw.count(key) > 0; }

    template <typename F>
    void with(const std::string& key, F&& f) {
        auto it = raw.find(key);
        if (it == raw.end()) return;
        it->second.consumed = true;
        f(it->second.value, it->second.line);
    }

    void get_double(const std::string& key, double& out) {
        with(key, [&](const std::string& v, int line) {
            try {
                std::size_t pos = 0;
                double d = std::stod(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = d;
            } catch (const std::exception&) {
                throw ConfigError(key + ": expected a number, got '" + v + "'", line);
            }
        });
    }

    void get_int(const std::string& key, int& out) {
        with(key, [&](const std::string& v, int line) {
            try {
                std::size_t pos = 0;
                long n = std::stol(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = static_cast<int>(n);
            } catch (const std::exception&) {
                throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
            }
        });
    }

    void get_bool(const std::string& key, bool& out) {
        with(key, [&](const std::string& v, int line) {
            if (v == "1" || v == "true" || v == "on") out = true;
            else if (v == "0" || v == "false" || v == "off") out = false;
            else throw ConfigError(key + ": expected 0/1, got '" + v + "'", line);
        });
    }
};

RawMap tokenize(const std::string& text) {
    RawMap raw;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            auto is_space = [](unsigned char c) { return std::isspace(c); };
            s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), is_space));
            s.erase(std::find_if_not(s.rbegin(), s.rend(), is_space).base(), s.end());
            return s;
        };
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value, got '" + stripped + "'", line_no);
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (raw.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
        raw[key] = RawEntry{value, line_no};
    }
    return raw;
}

ScenarioConfig resolve(Parser& p) {
    ScenarioConfig cfg;

    p.with("protocol", [&](const std::string& v, int line) {
        if (v == "pure_aloha" || v == "aloha") cfg.protocol = MacPolicy::pure_aloha;
        else if (v == "slotted_aloha" || v == "s_aloha") cfg.protocol = MacPolicy::slotted_aloha;
        else if (v == "csma") cfg.protocol = MacPolicy::csma;
        else if (v == "tdma") cfg.protocol = MacPolicy::tdma;
        else throw ConfigError("protocol: unknown policy '" + v + "'", line);
    });

    p.get_int("sim.n_nodes", cfg.n_nodes);
    p.get_double("sim.area_m", cfg.area_m);
    p.get_double("sim.duration_s", cfg.duration_s);
    p.get_double("sim.warmup_s", cfg.warmup_s);
    bool have_interval = p.has("sim.interval_s");
    p.get_double("sim.interval_s", cfg.interval_s);
    p.get_int("sim.segments", cfg.segments);
    p.get_bool("sim.trace", cfg.trace);
    p.with("sim.seeds", [&](const std::string& v, int line) {
        cfg.seeds.clear();
        std::istringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                cfg.seeds.push_back(std::stoull(tok));
            } catch (const std::exception&) {
                throw ConfigError("sim.seeds: bad seed '" + tok + "'", line);
            }
        }
        if (cfg.seeds.empty()) throw ConfigError("sim.seeds: empty list", line);
    });
    p.with("traffic.model", [&](const std::string& v, int line) {
        if (v == "periodic") cfg.traffic = TrafficModel::periodic;
        else if (v == "poisson") cfg.traffic = TrafficModel::poisson;
        else throw ConfigError("traffic.model: expected periodic|poisson", line);
    });

    p.get_int("net.channels", cfg.channels);

    p.with("phy.sf", [&](const std::string& v, int line) {
        try {
            cfg.radio.sf = std::stoi(v);
        } catch (const std::exception&) {
            throw ConfigError("phy.sf: expected an integer", line);
        }
        if (cfg.radio.sf < 7 || cfg.radio.sf > 12)
            throw ConfigError("phy.sf must be in 7..12, got " + v, line);
    });
    p.get_double("phy.bw_hz", cfg.radio.bw_hz);
    p.get_int("phy.cr", cfg.radio.cr);
    p.get_int("phy.preamble_symbols", cfg.radio.preamble_symbols);
    p.get_bool("phy.crc", cfg.radio.crc_enabled);
    p.get_bool("phy.explicit_header", cfg.radio.explicit_header);
    p.with("phy.ldro", [&](const std::string& v, int line) {
        if (v == "auto") cfg.radio.ldro = LdroMode::automatic;
        else if (v == "on") cfg.radio.ldro = LdroMode::on;
        else if (v == "off") cfg.radio.ldro = LdroMode::off;
        else throw ConfigError("phy.ldro: expected auto|on|off", line);
    });
    p.get_int("phy.payload_bytes", cfg.payload_bytes);
    p.get_double("phy.tx_power_dbm", cfg.tx_power_dbm);

    p.get_double("link.pl0_db", cfg.link.pl0_db);
    p.get_double("link.gamma", cfg.link.gamma);
    p.get_double("link.shadow_sigma_db", cfg.link.shadow_sigma_db);
    p.get_double("link.noise_floor_dbm", cfg.link.noise_floor_dbm);
    p.get_double("link.sensitivity_dbm", cfg.link.sensitivity_dbm);
    p.get_bool("link.capture_enabled", cfg.link.capture_enabled);
    for (int sf = 7; sf <= 12; ++sf)
        p.get_double("link.capture_sf" + std::to_string(sf) + "_db",
                     cfg.link.capture_threshold_db[sf]);
    p.with("link.shadow_mode", [&](const std::string& v, int line) {
        if (v == "per_packet") cfg.shadow_mode = ShadowMode::per_packet;
        else if (v == "per_link") cfg.shadow_mode = ShadowMode::per_link;
        else throw ConfigError("link.shadow_mode: expected per_packet|per_link", line);
    });

    // Slot-plan defaults depend on the spreading factor: the reference
    // configuration packs 60 slots per frame at SF7 and 20 at SF9.
    bool have_slots = p.has("tdma.slots_per_frame");
    bool have_slot_ms = p.has("tdma.slot_ms");
    bool have_guard = p.has("tdma.guard_ms");
    p.get_int("tdma.slots_per_frame", cfg.slots_per_frame);
    if (!have_slots) cfg.slots_per_frame = cfg.radio.sf == 7 ? 60 : 20;
    p.get_double("tdma.slot_ms", cfg.slot_ms);
    p.get_double("tdma.guard_ms", cfg.guard_ms);

    double toa = cfg.data_toa_ms();
    if (have_slot_ms && have_guard) {
        if (std::abs(cfg.slot_ms - (toa + cfg.guard_ms)) > 1e-6)
            throw ConfigError("tdma.slot_ms and tdma.guard_ms are inconsistent: the slot "
                              "must equal airtime (" + std::to_string(toa) + " ms) plus guard");
    } else if (have_guard) {
        cfg.slot_ms = toa + cfg.guard_ms;
    } else if (have_slot_ms) {
        cfg.guard_ms = cfg.slot_ms - toa;
    } else {
        cfg.slot_ms = cfg.interval_ms() / cfg.slots_per_frame;
        cfg.guard_ms = cfg.slot_ms - toa;
    }
    if (std::abs(cfg.guard_ms) < 1e-9) cfg.guard_ms = 0.0;  // slot == airtime
    if (cfg.protocol == MacPolicy::tdma && cfg.guard_ms < 0.0)
        throw ConfigError("slot plan infeasible: airtime " + std::to_string(toa) +
                          " ms exceeds the slot length " + std::to_string(cfg.slot_ms) + " ms");
    if (!have_interval && (have_slot_ms || have_guard))
        cfg.interval_s = cfg.frame_ms() / 1000.0;  // one uplink per reshaped frame

    p.get_double("tdma.rho_max", cfg.rho_max);
    bool have_release = p.has("tdma.t_release_s");
    p.get_double("tdma.t_release_s", cfg.t_release_s);
    if (!have_release) cfg.t_release_s = 3.0 * cfg.interval_s;
    p.get_bool("tdma.reuse_enabled", cfg.reuse_enabled);
    p.get_bool("tdma.reuse_requires_higher_priority", cfg.reuse_requires_higher_priority);
    bool have_kmax = p.has("tdma.k_max");
    p.get_int("tdma.k_max", cfg.k_max);
    if (!have_kmax && cfg.protocol == MacPolicy::tdma) {
        // Deep enough for the configured reporting interval.
        PeriodCheck check = validate_period(cfg.interval_ms(), cfg.frame_ms(), 30);
        if (check.ok) cfg.k_max = check.k;
    }
    p.get_int("tdma.join_w0_frames", cfg.join_w0_frames);
    p.get_int("tdma.join_w_cap_frames", cfg.join_w_cap_frames);

    p.get_double("sync.beacon_period_s", cfg.beacon_period_s);
    p.get_double("sync.beacon_toa_ms", cfg.beacon_toa_ms);
    p.get_double("sync.resync_s", cfg.resync_s);
    p.get_double("sync.sigma_ms", cfg.sync_sigma_ms);
    p.get_double("sync.hw_sigma_ms", cfg.hw_sigma_ms);
    p.get_double("sync.drift_ppm", cfg.drift_ppm);
    p.get_double("sync.beacon_loss", cfg.beacon_loss);
    p.get_double("sync.retry_fraction", cfg.sync_retry_fraction);
    p.get_double("sync.trunc_sigmas", cfg.trunc_sigmas);
    p.get_int("sync.holdover_max_failures", cfg.holdover_max_failures);

    p.get_double("csma.cca_dbm", cfg.csma.cca_threshold_dbm);
    bool have_cad = p.has("csma.cad_ms");
    p.get_double("csma.cad_ms", cfg.csma.cad_ms);
    if (!have_cad) cfg.csma.cad_ms = cfg.radio.sf == 7 ? 2.0 : 8.0;
    p.get_double("csma.backoff_slot_ms", cfg.csma.backoff_slot_ms);
    p.get_int("csma.w", cfg.csma.contention_window);
    p.get_int("csma.max_stages", cfg.csma.max_backoff_stages);

    p.get_double("energy.tx_mw", cfg.energy_tx_mw);
    p.get_double("energy.rx_mw", cfg.energy_rx_mw);
    p.get_double("energy.sleep_mw", cfg.energy_sleep_mw);
    p.get_double("energy.listen_ms", cfg.listen_ms);

    for (const auto& [key, entry] : p.raw)
        if (!entry.consumed)
            throw ConfigError("unknown key '" + key + "'", entry.line);

    cfg.validate();
    return cfg;
}

} // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    Parser p{tokenize(text)};
    return resolve(p);
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_overrides(ScenarioConfig& cfg, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return;
    // Re-resolve from the echoed form plus the overrides so that dependent
    // defaults stay consistent.
    std::ostringstream echo;
    write_config_echo(cfg, echo);
    RawMap raw = tokenize(echo.str());
    for (const std::string& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value, got '" + ov + "'");
        std::string key = ov.substr(0, eq);
        std::string value = ov.substr(eq + 1);
        raw[key] = RawEntry{value, 0};
        // A slot-plan override invalidates the echoed derived values.
        if (key == "tdma.guard_ms") raw.erase("tdma.slot_ms");
        if (key == "tdma.slot_ms") raw.erase("tdma.guard_ms");
        if (key == "phy.sf") {
            raw.erase("tdma.slots_per_frame");
            raw.erase("tdma.slot_ms");
            raw.erase("tdma.guard_ms");
            raw.erase("csma.cad_ms");
        }
        if (key == "sim.interval_s") raw.erase("tdma.t_release_s");
    }
    Parser p{std::move(raw)};
    cfg = resolve(p);
}

namespace {
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void write_config_echo(const ScenarioConfig& cfg, std::ostream& os) {
    os << "protocol=" << to_string(cfg.protocol) << "\n";
    os << "sim.n_nodes=" << cfg.n_nodes << "\n";
    os << "sim.area_m=" << fmt(cfg.area_m) << "\n";
    os << "sim.duration_s=" << fmt(cfg.duration_s) << "\n";
    os << "sim.warmup_s=" << fmt(cfg.warmup_s) << "\n";
    os << "sim.interval_s=" << fmt(cfg.interval_s) << "\n";
    os << "sim.segments=" << cfg.segments << "\n";
    os << "sim.trace=" << (cfg.trace ? 1 : 0) << "\n";
    os << "sim.seeds=";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        os << (i ? "," : "") << cfg.seeds[i];
    os << "\n";
    os << "traffic.model=" << (cfg.traffic == TrafficModel::periodic ? "periodic" : "poisson")
       << "\n";
    os << "net.channels=" << cfg.channels << "\n";
    os << "phy.sf=" << cfg.radio.sf << "\n";
    os << "phy.bw_hz=" << fmt(cfg.radio.bw_hz) << "\n";
    os << "phy.cr=" << cfg.radio.cr << "\n";
    os << "phy.preamble_symbols=" << cfg.radio.preamble_symbols << "\n";
    os << "phy.crc=" << (cfg.radio.crc_enabled ? 1 : 0) << "\n";
    os << "phy.explicit_header=" << (cfg.radio.explicit_header ? 1 : 0) << "\n";
    os << "phy.ldro="
       << (cfg.radio.ldro == LdroMode::automatic ? "auto"
                                                 : cfg.radio.ldro == LdroMode::on ? "on" : "off")
       << "\n";
    os << "phy.payload_bytes=" << cfg.payload_bytes << "\n";
    os << "phy.tx_power_dbm=" << fmt(cfg.tx_power_dbm) << "\n";
    os << "link.pl0_db=" << fmt(cfg.link.pl0_db) << "\n";
    os << "link.gamma=" << fmt(cfg.link.gamma) << "\n";
    os << "link.shadow_sigma_db=" << fmt(cfg.link.shadow_sigma_db) << "\n";
    os << "link.noise_floor_dbm=" << fmt(cfg.link.noise_floor_dbm) << "\n";
    os << "link.sensitivity_dbm=" << fmt(cfg.link.sensitivity_dbm) << "\n";
    os << "link.capture_enabled=" << (cfg.link.capture_enabled ? 1 : 0) << "\n";
    for (int sf = 7; sf <= 12; ++sf)
        os << "link.capture_sf" << sf << "_db=" << fmt(cfg.link.capture_threshold_db[sf])
           << "\n";
    os << "link.shadow_mode="
       << (cfg.shadow_mode == ShadowMode::per_packet ? "per_packet" : "per_link") << "\n";
    os << "tdma.slots_per_frame=" << cfg.slots_per_frame << "\n";
    os << "tdma.slot_ms=" << fmt(cfg.slot_ms) << "\n";
    os << "tdma.guard_ms=" << fmt(cfg.guard_ms) << "\n";
    os << "tdma.rho_max=" << fmt(cfg.rho_max) << "\n";
    os << "tdma.t_release_s=" << fmt(cfg.t_release_s) << "\n";
    os << "tdma.reuse_enabled=" << (cfg.reuse_enabled ? 1 : 0) << "\n";
    os << "tdma.reuse_requires_higher_priority=" << (cfg.reuse_requires_higher_priority ? 1 : 0)
       << "\n";
    os << "tdma.k_max=" << cfg.k_max << "\n";
    os << "tdma.join_w0_frames=" << cfg.join_w0_frames << "\n";
    os << "tdma.join_w_cap_frames=" << cfg.join_w_cap_frames << "\n";
    os << "sync.beacon_period_s=" << fmt(cfg.beacon_period_s) << "\n";
    os << "sync.beacon_toa_ms=" << fmt(cfg.beacon_toa_ms) << "\n";
    os << "sync.resync_s=" << fmt(cfg.resync_s) << "\n";
    os << "sync.sigma_ms=" << fmt(cfg.sync_sigma_ms) << "\n";
    os << "sync.hw_sigma_ms=" << fmt(cfg.hw_sigma_ms) << "\n";
    os << "sync.drift_ppm=" << fmt(cfg.drift_ppm) << "\n";
    os << "sync.beacon_loss=" << fmt(cfg.beacon_loss) << "\n";
    os << "sync.retry_fraction=" << fmt(cfg.sync_retry_fraction) << "\n";
    os << "sync.trunc_sigmas=" << fmt(cfg.trunc_sigmas) << "\n";
    os << "sync.holdover_max_failures=" << cfg.holdover_max_failures << "\n";
    os << "csma.cca_dbm=" << fmt(cfg.csma.cca_threshold_dbm) << "\n";
    os << "csma.cad_ms=" << fmt(cfg.csma.cad_ms) << "\n";
    os << "csma.backoff_slot_ms=" << fmt(cfg.csma.backoff_slot_ms) << "\n";
    os << "csma.w=" << cfg.csma.contention_window << "\n";
    os << "csma.max_stages=" << cfg.csma.max_backoff_stages << "\n";
    os << "energy.tx_mw=" << fmt(cfg.energy_tx_mw) << "\n";
    os << "energy.rx_mw=" << fmt(cfg.energy_rx_mw) << "\n";
    os << "energy.sleep_mw=" << fmt(cfg.energy_sleep_mw) << "\n";
    os << "energy.listen_ms=" << fmt(cfg.listen_ms) << "\n";
}

} // namespace lorasim
