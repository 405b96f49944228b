#pragma once

#include <cstdint>
#include <random>

namespace lorasim {

// Named random streams. Each concern draws from its own engine so that
// toggling one feature (e.g. shadowing) does not perturb the draws of
// another under the same master seed.
enum class Stream : std::uint64_t {
    placement = 1,
    shadowing,
    traffic,
    backoff,
    sync_error,
    channel_pick,
    hw_jitter,
    csma_sense,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngPool {
  public:
    explicit RngPool(std::uint64_t master_seed) : master_(master_seed) {
        for (std::uint64_t i = 0; i < kStreams; ++i)
            engines_[i].seed(splitmix64(master_ ^ splitmix64(i + 1)));
    }

    std::mt19937_64& get(Stream s) {
        return engines_[static_cast<std::uint64_t>(s) - 1];
    }

    std::uint64_t master_seed() const { return master_; }

  private:
    static constexpr std::uint64_t kStreams = 8;
    std::uint64_t master_;
    std::mt19937_64 engines_[kStreams];
};

// Gaussian draw rejected outside [-max_abs, +max_abs]. Used for sync
// residuals and hardware jitter, whose worst case must stay bounded for
// the guard-time budget to hold.
inline double truncated_normal(std::mt19937_64& rng, double sigma, double max_abs) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, sigma);
    for (;;) {
        double x = dist(rng);
        if (x >= -max_abs && x <= max_abs) return x;
    }
}

} // namespace lorasim
