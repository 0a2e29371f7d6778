#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stdpavg/engine.hpp"
#include "stdpavg/model.hpp"

namespace stdpavg {

// Exact SSA of the scaled discrete model. Constant-rate channels (presyn,
// token death, postsyn, calcium decay, weight leak) and the two filter-driven
// weight channels run as competing clocks with carried-over residuals; the
// filter clocks are inverted exactly from their integrated intensity.
DiscreteTrajectory simulate_discrete_scaled(const CalciumDriveSpec& calcium,
                                            const DiscreteParams& params,
                                            const DiscreteState& init, const SimConfig& cfg);

// Fast process (tokens X, calcium C) at eps = 1 with W pinned at w.
// sample(t, x, c) is called on the grid k * sample_dt.
using DiscreteSampleFn = std::function<void(double t, std::int64_t x, std::int64_t c)>;
std::uint64_t run_discrete_fast(const DiscreteParams& params, std::int64_t w, double horizon,
                                std::uint64_t seed, double sample_dt,
                                const DiscreteSampleFn& sample, std::uint32_t replica = 0,
                                std::uint16_t group = 0);

// Applies the stoichiometry of each logged event to init (integer part only).
DiscreteState replay_discrete(const DiscreteParams& params, const DiscreteState& init,
                              const std::vector<Event>& events);

}  // namespace stdpavg
