#pragma once

#include <random>

#include "lorasim/clock.hpp"

namespace lorasim {

// Worst-case timing deviations feeding the guard-time constraint.
struct SyncBudget {
    double sync_err_max_ms = 0.0;
    double drift_max_ms = 0.0;
    double hw_max_ms = 0.0;
};

// Guard must absorb both neighbours drifting in opposite directions,
// hence the factor of two.
double min_guard_time_ms(const SyncBudget& budget);

// Beacon timestamp corrected for the delays that matter at millisecond
// scale; propagation and interrupt latency are dropped.
double reconstruct_timestamp_ms(double t1_ms, double toa_ms, double t_decode_ms,
                                double t_encode_ms);

double beacon_duty_cycle(double toa_ms, double interval_ms);
bool exceeds_duty_limit(double ratio, double limit = 0.01);

// Periodic out-of-band beacon broadcast. The beacon channel is disjoint
// from all uplink channels.
struct BeaconSchedule {
    double first_tx_ms = 0.0;
    double interval_ms = 4000.0;
    double toa_ms = 36.0;
    bool empty = false;  // no beacons on the air at all
};

struct SyncPolicy {
    double residual_sigma_ms = 2.0;
    double truncate_sigmas = 3.0;    // residual draws clipped at +-3 sigma
    double retry_fraction = 0.25;    // shortened retry = fraction * interval
    double beacon_loss_prob = 0.0;   // i.i.d. per beacon
    int holdover_max_failures = 3;
};

struct SyncAttemptResult {
    bool synced = false;
    ClockModel clock;            // updated clock on success
    double completion_true_ms = 0.0;
    double wait_ms = 0.0;        // listen duration spent in this attempt
    double retry_after_ms = 0.0; // shortened retry interval on failure
    int beacons_missed = 0;
};

// One pass of the device-side synchronization loop: listen on the sync
// channel from t_start until a beacon completes or the timeout elapses.
// On success the clock offset is reset to a fresh residual draw and drift
// accumulation restarts at the beacon completion instant.
SyncAttemptResult run_sync_attempt(const ClockModel& clock, const BeaconSchedule& beacons,
                                   double t_start_ms, double timeout_ms,
                                   const SyncPolicy& policy, std::mt19937_64& rng);

} // namespace lorasim
