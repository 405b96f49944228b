#include "lorasim/mac.hpp"

#include <cmath>
#include <string>

namespace lorasim {

const char* to_string(FsmState s) {
    switch (s) {
        case FsmState::init: return "INIT";
        case FsmState::req: return "REQ";
        case FsmState::sync: return "SYNC";
        case FsmState::wait: return "WAIT";
        case FsmState::send: return "SEND";
        case FsmState::sleep: return "SLEEP";
    }
    return "?";
}

const char* to_string(FsmEvent e) {
    switch (e) {
        case FsmEvent::power_on: return "power_on";
        case FsmEvent::join_granted: return "join_granted";
        case FsmEvent::alloc_granted: return "alloc_granted";
        case FsmEvent::sync_done: return "sync_done";
        case FsmEvent::sync_timeout: return "sync_timeout";
        case FsmEvent::slot_boundary: return "slot_boundary";
        case FsmEvent::tx_done: return "tx_done";
        case FsmEvent::data_ready: return "data_ready";
        case FsmEvent::sync_age_expired: return "sync_age_expired";
    }
    return "?";
}

FsmStep fsm_step(FsmState state, FsmEvent event) {
    switch (state) {
        case FsmState::init:
            if (event == FsmEvent::power_on)
                return {FsmState::init, FsmAction::send_join_request};
            if (event == FsmEvent::join_granted)
                return {FsmState::req, FsmAction::send_alloc_request};
            break;
        case FsmState::req:
            if (event == FsmEvent::alloc_granted)
                return {FsmState::sync, FsmAction::retune_sync_channel};
            break;
        case FsmState::sync:
            if (event == FsmEvent::sync_done)
                return {FsmState::sleep, FsmAction::enter_low_power};
            if (event == FsmEvent::sync_timeout)
                return {FsmState::sync, FsmAction::schedule_sync_retry};
            break;
        case FsmState::sleep:
            if (event == FsmEvent::data_ready)
                return {FsmState::wait, FsmAction::schedule_slot_wakeup};
            if (event == FsmEvent::sync_age_expired)
                return {FsmState::sync, FsmAction::retune_sync_channel};
            break;
        case FsmState::wait:
            if (event == FsmEvent::slot_boundary)
                return {FsmState::send, FsmAction::transmit_frame};
            break;
        case FsmState::send:
            if (event == FsmEvent::tx_done)
                return {FsmState::sleep, FsmAction::enter_low_power};
            break;
    }
    throw protocol_violation(std::string("undefined transition: ") + to_string(state) +
                             " on " + to_string(event));
}

double next_tx_time_pure_aloha(double t_ready_ms) { return t_ready_ms; }

double next_tx_time_slotted_aloha(double t_ready_local_ms, double slot_len_ms) {
    double slots = std::ceil(t_ready_local_ms / slot_len_ms);
    return slots * slot_len_ms;
}

CsmaOutcome csma_attempt(double t_ready_ms, const CsmaConfig& cfg,
                         const std::function<double(double)>& channel_power_dbm_at,
                         std::mt19937_64& rng) {
    CsmaOutcome out;
    double t = t_ready_ms;
    std::uniform_int_distribution<int> backoff(0, cfg.contention_window - 1);
    for (int stage = 0; stage < cfg.max_backoff_stages; ++stage) {
        t += cfg.cad_ms;
        out.listen_ms += cfg.cad_ms;
        ++out.cad_count;
        if (channel_power_dbm_at(t) < cfg.cca_threshold_dbm) {
            out.transmitted = true;
            out.t_tx_ms = t;
            return out;
        }
        t += backoff(rng) * cfg.backoff_slot_ms;
    }
    out.gave_up = true;
    out.t_tx_ms = t;
    return out;
}

TxWindow tdma_tx_window(const DeviceSchedule& sched, double frame_origin_ms,
                        double slot_len_ms, double guard_ms, double toa_ms) {
    if (toa_ms > slot_len_ms - guard_ms + 1e-9)
        throw std::invalid_argument(
            "airtime does not fit the slot with the configured guard; the device "
            "needs a multi-slot grant");
    TxWindow w;
    w.t_start_local_ms = frame_origin_ms + sched.slot * slot_len_ms;
    w.t_deadline_local_ms = w.t_start_local_ms + slot_len_ms;
    return w;
}

} // namespace lorasim
