#pragma once

namespace lorasim {

// Per-device local clock: local(t) = t + offset(t), where the offset
// evolves linearly between synchronization events.
struct ClockModel {
    double offset_at_sync_ms = 0.0;   // local minus true at the last sync
    double drift_ppm = 0.0;           // signed rate error
    double last_sync_true_ms = 0.0;
    double hw_jitter_sigma_ms = 0.0;  // per-event timing jitter

    double offset_at(double t_true_ms) const {
        return offset_at_sync_ms + drift_ppm * 1e-6 * (t_true_ms - last_sync_true_ms);
    }

    double local_time(double t_true_ms) const {
        return t_true_ms + offset_at(t_true_ms);
    }

    // Inverse of local_time: the true instant at which the device's clock
    // reads t_local.
    double true_from_local(double t_local_ms) const {
        double d = drift_ppm * 1e-6;
        return (t_local_ms - offset_at_sync_ms + d * last_sync_true_ms) / (1.0 + d);
    }

    void resync(double residual_ms, double t_true_ms) {
        offset_at_sync_ms = residual_ms;
        last_sync_true_ms = t_true_ms;
    }
};

} // namespace lorasim
