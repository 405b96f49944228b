#include <doctest.h>

#include <stdexcept>

#include <random>
#include <vector>

#include "lorasim/mac.hpp"

using namespace lorasim;

TEST_CASE("state machine follows the commissioning chain") {
    FsmStep s = fsm_step(FsmState::init, FsmEvent::power_on);
    CHECK(s.next == FsmState::init);
    CHECK(s.action == FsmAction::send_join_request);

    s = fsm_step(FsmState::init, FsmEvent::join_granted);
    CHECK(s.next == FsmState::req);
    CHECK(s.action == FsmAction::send_alloc_request);

    s = fsm_step(FsmState::req, FsmEvent::alloc_granted);
    CHECK(s.next == FsmState::sync);
    CHECK(s.action == FsmAction::retune_sync_channel);

    s = fsm_step(FsmState::sync, FsmEvent::sync_done);
    CHECK(s.next == FsmState::sleep);
}

TEST_CASE("state machine data path") {
    FsmStep s = fsm_step(FsmState::sleep, FsmEvent::data_ready);
    CHECK(s.next == FsmState::wait);
    CHECK(s.action == FsmAction::schedule_slot_wakeup);

    s = fsm_step(FsmState::wait, FsmEvent::slot_boundary);
    CHECK(s.next == FsmState::send);
    CHECK(s.action == FsmAction::transmit_frame);

    s = fsm_step(FsmState::send, FsmEvent::tx_done);
    CHECK(s.next == FsmState::sleep);

    s = fsm_step(FsmState::sleep, FsmEvent::sync_age_expired);
    CHECK(s.next == FsmState::sync);

    s = fsm_step(FsmState::sync, FsmEvent::sync_timeout);
    CHECK(s.next == FsmState::sync);
    CHECK(s.action == FsmAction::schedule_sync_retry);
}

TEST_CASE("undefined transitions are protocol violations") {
    CHECK_THROWS_AS(fsm_step(FsmState::sleep, FsmEvent::tx_done), protocol_violation);
    CHECK_THROWS_AS(fsm_step(FsmState::send, FsmEvent::data_ready), protocol_violation);
    CHECK_THROWS_AS(fsm_step(FsmState::init, FsmEvent::slot_boundary), protocol_violation);
    CHECK_THROWS_AS(fsm_step(FsmState::wait, FsmEvent::sync_done), protocol_violation);
}

TEST_CASE("send is unreachable without a grant and a completed sync") {
    // Random event fuzz from INIT: whenever SEND is reached, the history
    // must already contain alloc_granted and sync_done.
    std::mt19937_64 rng(31);
    const std::vector<FsmEvent> events = {
        FsmEvent::power_on,     FsmEvent::join_granted, FsmEvent::alloc_granted,
        FsmEvent::sync_done,    FsmEvent::sync_timeout, FsmEvent::slot_boundary,
        FsmEvent::tx_done,      FsmEvent::data_ready,   FsmEvent::sync_age_expired};
    for (int trial = 0; trial < 2000; ++trial) {
        FsmState state = FsmState::init;
        bool granted = false, synced = false;
        for (int step = 0; step < 30; ++step) {
            FsmEvent e = events[rng() % events.size()];
            FsmState next;
            try {
                next = fsm_step(state, e).next;
            } catch (const protocol_violation&) {
                continue;  // rejected event, state unchanged
            }
            if (e == FsmEvent::alloc_granted) granted = true;
            if (e == FsmEvent::sync_done) synced = true;
            state = next;
            if (state == FsmState::send) {
                CHECK(granted);
                CHECK(synced);
            }
        }
    }
}

TEST_CASE("pure aloha transmits immediately") {
    CHECK(next_tx_time_pure_aloha(1000.0) == doctest::Approx(1000.0));
    CHECK(next_tx_time_pure_aloha(0.0) == doctest::Approx(0.0));
}

TEST_CASE("slotted aloha defers to the next boundary") {
    CHECK(next_tx_time_slotted_aloha(1010.0, 200.0) == doctest::Approx(1200.0));
    CHECK(next_tx_time_slotted_aloha(1200.0, 200.0) == doctest::Approx(1200.0));
    CHECK(next_tx_time_slotted_aloha(0.0, 200.0) == doctest::Approx(0.0));
    CHECK(next_tx_time_slotted_aloha(199.999, 200.0) == doctest::Approx(200.0));
}

TEST_CASE("csma transmits after one clear assessment") {
    CsmaConfig cfg;
    cfg.cad_ms = 2.0;  // short-airtime assessment
    std::mt19937_64 rng(37);
    CsmaOutcome out = csma_attempt(1000.0, cfg, [](double) { return -200.0; }, rng);
    CHECK(out.transmitted);
    CHECK_FALSE(out.gave_up);
    CHECK(out.t_tx_ms == doctest::Approx(1002.0));
    CHECK(out.cad_count == 1);
    CHECK(out.listen_ms == doctest::Approx(2.0));
}

TEST_CASE("csma gives up after the backoff stages on a busy channel") {
    CsmaConfig cfg;  // W=8, 8 stages, 30 ms backoff slots, 8 ms CAD
    std::mt19937_64 rng(41);
    CsmaOutcome out = csma_attempt(0.0, cfg, [](double) { return -50.0; }, rng);
    CHECK(out.gave_up);
    CHECK_FALSE(out.transmitted);
    CHECK(out.cad_count == 8);
    CHECK(out.listen_ms == doctest::Approx(8 * 8.0));
    // Bounded effort: listening never exceeds stages * (CAD + max backoff).
    CHECK(out.listen_ms <=
          cfg.max_backoff_stages * (cfg.cad_ms + (cfg.contention_window - 1) * cfg.backoff_slot_ms));
    CHECK(out.t_tx_ms <=
          cfg.max_backoff_stages * (cfg.cad_ms + (cfg.contention_window - 1) * cfg.backoff_slot_ms));
}

TEST_CASE("csma backoff retries and eventually clears") {
    CsmaConfig cfg;
    std::mt19937_64 rng(43);
    // Busy until t = 300 ms, then clear.
    auto sense = [](double t) { return t < 300.0 ? -80.0 : -200.0; };
    CsmaOutcome out = csma_attempt(0.0, cfg, sense, rng);
    CHECK(out.transmitted);
    CHECK(out.t_tx_ms >= 300.0);
    CHECK(out.cad_count >= 2);
}

TEST_CASE("scheduled transmit window") {
    DeviceSchedule sched{1, 0, 0, 3, 2};
    TxWindow w = tdma_tx_window(sched, 8000.0, 200.0, 55.0, 144.384);
    CHECK(w.t_start_local_ms == doctest::Approx(8600.0));
    CHECK(w.t_deadline_local_ms == doctest::Approx(8800.0));
    CHECK(w.t_deadline_local_ms - w.t_start_local_ms - 144.384 - 55.0 ==
          doctest::Approx(0.616));

    DeviceSchedule slot0{1, 0, 0, 0, 0};
    w = tdma_tx_window(slot0, 0.0, 200.0, 55.0, 144.384);
    CHECK(w.t_start_local_ms == doctest::Approx(0.0));
    CHECK(w.t_deadline_local_ms == doctest::Approx(200.0));

    // A single slot that cannot hold airtime plus guard is a config error.
    CHECK_THROWS_AS(tdma_tx_window(sched, 0.0, 200.0, 60.0, 144.384), std::invalid_argument);
}
