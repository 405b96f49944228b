#include <doctest.h>

#include <vector>
#include <cstdint>

#include <sstream>

#include "lorasim/scenario.hpp"

using namespace lorasim;

TEST_CASE("empty config resolves to the reference defaults") {
    ScenarioConfig cfg = parse_config_text("");
    CHECK(cfg.protocol == MacPolicy::tdma);
    CHECK(cfg.n_nodes == 20);
    CHECK(cfg.radio.sf == 9);
    CHECK(cfg.channels == 8);
    CHECK(cfg.slots_per_frame == 20);
    CHECK(cfg.slot_ms == doctest::Approx(200.0));
    CHECK(cfg.interval_s == doctest::Approx(4.0));
    CHECK(cfg.guard_ms == doctest::Approx(200.0 - 144.384));
    CHECK(cfg.t_release_s == doctest::Approx(12.0));
    CHECK(cfg.sync_sigma_ms == doctest::Approx(2.0));
    CHECK(cfg.csma.cad_ms == doctest::Approx(8.0));
    CHECK(cfg.seeds.size() == 10);
}

TEST_CASE("sf7 reshapes the slot plan and CAD defaults") {
    ScenarioConfig cfg = parse_config_text("phy.sf=7\n");
    CHECK(cfg.slots_per_frame == 60);
    CHECK(cfg.slot_ms == doctest::Approx(4000.0 / 60.0));
    CHECK(cfg.data_toa_ms() == doctest::Approx(41.216));
    CHECK(cfg.guard_ms == doctest::Approx(4000.0 / 60.0 - 41.216));
    CHECK(cfg.csma.cad_ms == doctest::Approx(2.0));
}

TEST_CASE("bad values are rejected with line-anchored messages") {
    CHECK_THROWS_WITH_AS(parse_config_text("phy.sf=6\n"),
                         "line 1: phy.sf must be in 7..12, got 6", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("# comment\nnot_a_key=1\n"),
                         "line 2: unknown key 'not_a_key'", ConfigError);
    CHECK_THROWS_AS(parse_config_text("sim.n_nodes=abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("sim.duration_s=0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("protocol=fdma\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("phy.sf\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("phy.sf=9\nphy.sf=9\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/scenario.cfg"), ConfigError);
}

TEST_CASE("guard-only override resizes the slot to airtime plus guard") {
    ScenarioConfig cfg = parse_config_text("tdma.guard_ms=5\n");
    CHECK(cfg.slot_ms == doctest::Approx(144.384 + 5.0));
    // The reporting interval follows the reshaped frame.
    CHECK(cfg.interval_s == doctest::Approx(20 * (144.384 + 5.0) / 1000.0));
    CHECK_THROWS_AS(parse_config_text("tdma.slot_ms=200\ntdma.guard_ms=10\n"), ConfigError);
}

TEST_CASE("non-dyadic reporting interval is rejected for scheduled access") {
    CHECK_THROWS_AS(parse_config_text("sim.interval_s=12\ntdma.slot_ms=200\n"), ConfigError);
    ScenarioConfig cfg = parse_config_text("sim.interval_s=16\ntdma.slot_ms=200\n");
    CHECK(cfg.device_period_exponent() == 2);
    // Baselines take any interval.
    ScenarioConfig aloha = parse_config_text("protocol=pure_aloha\nsim.interval_s=12\n");
    CHECK(aloha.interval_s == doctest::Approx(12.0));
}

TEST_CASE("seed lists parse and reject garbage") {
    ScenarioConfig cfg = parse_config_text("sim.seeds=5,6,7\n");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{5, 6, 7});
    CHECK_THROWS_AS(parse_config_text("sim.seeds=1,x\n"), ConfigError);
}

TEST_CASE("config echo round-trips to an identical config") {
    ScenarioConfig cfg =
        parse_config_text("protocol=slotted_aloha\nphy.sf=7\nsim.interval_s=8\n"
                          "link.shadow_sigma_db=3.5\ntdma.guard_ms=7.25\nsync.drift_ppm=17\n");
    std::ostringstream echo1;
    write_config_echo(cfg, echo1);
    ScenarioConfig reloaded = parse_config_text(echo1.str());
    std::ostringstream echo2;
    write_config_echo(reloaded, echo2);
    CHECK(echo1.str() == echo2.str());
}

TEST_CASE("overrides re-resolve dependent defaults") {
    ScenarioConfig cfg = parse_config_text("");
    apply_overrides(cfg, {"phy.sf=7", "sim.n_nodes=50"});
    CHECK(cfg.radio.sf == 7);
    CHECK(cfg.n_nodes == 50);
    CHECK(cfg.slots_per_frame == 60);
    CHECK(cfg.csma.cad_ms == doctest::Approx(2.0));
    CHECK_THROWS_AS(apply_overrides(cfg, {"nonsense"}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(cfg, {"phy.sf=6"}), ConfigError);
}
