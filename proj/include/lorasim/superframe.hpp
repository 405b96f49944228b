#pragma once

#include <span>
#include <string>

namespace lorasim {

// Hierarchical dyadic superframe: 2^k_max baseline frames; a device with
// period exponent k transmits in frames congruent to its offset mod 2^k.
struct SuperframeConfig {
    int k_max = 0;
    double t0_ms = 4000.0;  // baseline frame duration, n * slot length
    int slots_per_frame = 20;

    long frames_per_superframe() const { return 1L << k_max; }
};

struct DeviceSchedule {
    int dev_id = -1;
    int k = 0;      // period exponent, p = 2^k
    int g = 0;      // frame offset in [0, 2^k)
    int slot = 0;
    int channel = 0;
};

struct PeriodCheck {
    bool ok = false;
    int k = 0;
    double nearest_below = 0.0;  // admissible alternatives when rejected
    double nearest_above = 0.0;
    std::string error;
};

// Accepts only periods of the form t0 * 2^k with 0 <= k <= k_max; never
// rounds silently.
PeriodCheck validate_period(double t_ms, double t0_ms, int k_max);

bool is_active_frame(int k, int g, long frame_index);

inline bool is_active_frame(const DeviceSchedule& s, long frame_index) {
    return is_active_frame(s.k, s.g, frame_index);
}

struct OffsetAssignment {
    bool ok = false;
    int g = 0;
};

// Picks a frame offset for a new occupant of a (channel, slot) cell such
// that it collides with no existing occupant in any frame of the
// superframe, minimizing the maximum per-frame occupancy (ties to the
// lowest offset). Fails when every residue class is taken.
OffsetAssignment assign_group_offset(std::span<const DeviceSchedule> existing, int k_new,
                                     int k_max);

} // namespace lorasim
