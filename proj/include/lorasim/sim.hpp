#pragma once

#include <cstdint>
#include <span>

#include "lorasim/phy.hpp"
#include "lorasim/report.hpp"
#include "lorasim/scenario.hpp"

namespace lorasim {

// Runs one scenario under one seed. A run is strictly single-threaded and
// deterministic: identical (config, seed) pairs produce identical reports.
SimulationReport run_simulation(const ScenarioConfig& cfg, std::uint64_t seed);

} // namespace lorasim
