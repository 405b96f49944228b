#include "lorasim/superframe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lorasim {

PeriodCheck validate_period(double t_ms, double t0_ms, int k_max) {
    PeriodCheck check;
    if (t_ms <= 0.0 || t0_ms <= 0.0) {
        check.error = "period and baseline frame must be positive";
        return check;
    }
    double ratio = t_ms / t0_ms;
    double k_real = std::log2(ratio);
    long k = std::lround(k_real);
    bool dyadic = k >= 0 && std::abs(t0_ms * std::pow(2.0, k) - t_ms) <= 1e-6 * t_ms;
    if (dyadic && k <= k_max) {
        check.ok = true;
        check.k = static_cast<int>(k);
        return check;
    }
    long k_lo = std::clamp(static_cast<long>(std::floor(k_real)), 0L,
                           static_cast<long>(k_max));
    long k_hi = std::clamp(k_lo + 1, 0L, static_cast<long>(k_max));
    check.nearest_below = t0_ms * std::pow(2.0, k_lo);
    check.nearest_above = t0_ms * std::pow(2.0, k_hi);
    if (!dyadic)
        check.error = "period is not a power-of-two multiple of the baseline frame; "
                      "nearest admissible periods are " + std::to_string(check.nearest_below) +
                      " ms and " + std::to_string(check.nearest_above) + " ms";
    else
        check.error = "period exponent " + std::to_string(k) + " exceeds the maximum depth " +
                      std::to_string(k_max) + "; largest admissible period is " +
                      std::to_string(t0_ms * std::pow(2.0, k_max)) + " ms";
    return check;
}

bool is_active_frame(int k, int g, long frame_index) {
    long p = 1L << k;
    return (frame_index % p) == g;
}

OffsetAssignment assign_group_offset(std::span<const DeviceSchedule> existing, int k_new,
                                     int k_max) {
    OffsetAssignment best;
    long m_super = 1L << k_max;
    long p_new = 1L << k_new;
    int best_max_occ = 0;
    for (long g = 0; g < p_new; ++g) {
        bool conflict = false;
        for (const DeviceSchedule& e : existing) {
            long p_min = 1L << std::min(k_new, e.k);
            if ((g % p_min) == (e.g % p_min)) { conflict = true; break; }
        }
        if (conflict) continue;
        int max_occ = 0;
        for (long f = 0; f < m_super; ++f) {
            int occ = is_active_frame(k_new, static_cast<int>(g), f) ? 1 : 0;
            for (const DeviceSchedule& e : existing)
                occ += is_active_frame(e, f) ? 1 : 0;
            max_occ = std::max(max_occ, occ);
        }
        if (!best.ok || max_occ < best_max_occ) {
            best.ok = true;
            best.g = static_cast<int>(g);
            best_max_occ = max_occ;
        }
    }
    return best;
}

} // namespace lorasim
