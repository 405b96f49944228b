#include "lorasim/sync.hpp"

#include <cmath>
#include <stdexcept>

#include "lorasim/rng.hpp"

namespace lorasim {

double min_guard_time_ms(const SyncBudget& budget) {
    return 2.0 * (budget.sync_err_max_ms + budget.drift_max_ms + budget.hw_max_ms);
}

double reconstruct_timestamp_ms(double t1_ms, double toa_ms, double t_decode_ms,
                                double t_encode_ms) {
    return t1_ms + t_encode_ms + toa_ms + t_decode_ms;
}

double beacon_duty_cycle(double toa_ms, double interval_ms) {
    if (interval_ms <= 0.0)
        throw std::invalid_argument("beacon interval must be positive");
    return toa_ms / interval_ms;
}

bool exceeds_duty_limit(double ratio, double limit) { return ratio > limit; }

SyncAttemptResult run_sync_attempt(const ClockModel& clock, const BeaconSchedule& beacons,
                                   double t_start_ms, double timeout_ms,
                                   const SyncPolicy& policy, std::mt19937_64& rng) {
    SyncAttemptResult result;
    result.clock = clock;
    result.retry_after_ms = beacons.interval_ms * policy.retry_fraction;
    if (beacons.empty) {
        result.wait_ms = timeout_ms;
        return result;
    }

    // First beacon whose transmission starts at or after t_start; earlier
    // ones cannot be caught from the preamble.
    double k = std::ceil((t_start_ms - beacons.first_tx_ms) / beacons.interval_ms);
    if (k < 0.0) k = 0.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;; k += 1.0) {
        double tx = beacons.first_tx_ms + k * beacons.interval_ms;
        double completion = tx + beacons.toa_ms;
        if (completion > t_start_ms + timeout_ms) break;
        if (policy.beacon_loss_prob > 0.0 && unit(rng) < policy.beacon_loss_prob) {
            ++result.beacons_missed;
            continue;
        }
        double residual = truncated_normal(rng, policy.residual_sigma_ms,
                                           policy.truncate_sigmas * policy.residual_sigma_ms);
        result.synced = true;
        result.clock.resync(residual, completion);
        result.completion_true_ms = completion;
        result.wait_ms = completion - t_start_ms;
        return result;
    }
    result.wait_ms = timeout_ms;
    return result;
}

} // namespace lorasim
