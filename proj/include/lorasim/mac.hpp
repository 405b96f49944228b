#pragma once

#include <functional>
#include <random>
#include <stdexcept>

#include "lorasim/clock.hpp"
#include "lorasim/superframe.hpp"

namespace lorasim {

// Six-state device MAC for the scheduled protocol.
enum class FsmState { init, req, sync, wait, send, sleep };

enum class FsmEvent {
    power_on,
    join_granted,
    alloc_granted,
    sync_done,
    sync_timeout,
    slot_boundary,
    tx_done,
    data_ready,
    sync_age_expired,
};

enum class FsmAction {
    none,
    send_join_request,     // contend on the reserved access slot
    send_alloc_request,
    retune_sync_channel,
    schedule_slot_wakeup,
    transmit_frame,
    schedule_sync_retry,
    enter_low_power,
};

struct FsmStep {
    FsmState next;
    FsmAction action;
};

class protocol_violation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Advances the device state machine; undefined (state, event) pairs throw.
FsmStep fsm_step(FsmState state, FsmEvent event);

const char* to_string(FsmState s);
const char* to_string(FsmEvent e);

// Baseline transmit policies ------------------------------------------------

// Pure ALOHA transmits the moment data is available.
double next_tx_time_pure_aloha(double t_ready_ms);

// Slotted ALOHA defers to the next slot boundary of the device's local
// clock; a packet ready exactly on a boundary goes out immediately.
double next_tx_time_slotted_aloha(double t_ready_local_ms, double slot_len_ms);

struct CsmaConfig {
    double cca_threshold_dbm = -110.0;
    double cad_ms = 8.0;          // channel-activity-detection duration
    double backoff_slot_ms = 30.0;
    int contention_window = 8;    // backoff drawn uniform in [0, W-1] slots
    int max_backoff_stages = 8;
};

struct CsmaOutcome {
    bool transmitted = false;
    double t_tx_ms = 0.0;
    bool gave_up = false;
    double listen_ms = 0.0;  // accumulated CAD time for the energy ledger
    int cad_count = 0;
};

// Listen-before-talk attempt. The sensing callback reports the
// instantaneous channel power (dBm) at the node's location at a given
// time; the node transmits after the first clear assessment, or gives up
// after max_backoff_stages busy assessments.
CsmaOutcome csma_attempt(double t_ready_ms, const CsmaConfig& cfg,
                         const std::function<double(double)>& channel_power_dbm_at,
                         std::mt19937_64& rng);

// Scheduled transmit window -------------------------------------------------

struct TxWindow {
    double t_start_local_ms = 0.0;
    double t_deadline_local_ms = 0.0;
};

// Local-clock transmit window for one frame of the device's schedule.
// Throws when a single-slot grant cannot hold the airtime plus guard.
TxWindow tdma_tx_window(const DeviceSchedule& sched, double frame_origin_ms,
                        double slot_len_ms, double guard_ms, double toa_ms);

} // namespace lorasim
