#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stdpavg/model.hpp"
#include "stdpavg/rng.hpp"

namespace stdpavg {

enum class EventKind {
  presyn,
  postsyn,
  decay_token,
  calcium_decay,
  weight_leak,
  potentiation_jump,
  depression_jump,
};
const char* to_string(EventKind k);

struct Event {
  double t;
  EventKind kind;
};

struct Termination {
  enum class Kind { completed, blowup, budget_exhausted };
  Kind kind = Kind::completed;
  double time = 0.0;  // crossing time for blowup, stop time otherwise
};

template <class State>
struct BasicTrajectory {
  std::vector<State> samples;
  std::vector<Event> events;  // filled only when cfg.log_events
  Termination terminated;
  std::uint64_t event_count = 0;
};
using Trajectory = BasicTrajectory<SystemState>;
using DiscreteTrajectory = BasicTrajectory<DiscreteState>;

struct SimConfig {
  double epsilon = 1.0;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::uint16_t group = 0;
  std::vector<double> sample_grid;
  std::uint64_t max_events = 1'000'000'000;
  std::optional<double> blowup_threshold;  // default 1e6 max(1, w0)
  bool log_events = false;
  // Test hooks: fixed presynaptic times instead of the Poisson stream, and
  // the generic integrator even where a closed form exists.
  std::optional<std::vector<double>> forced_presyn;
  bool force_numeric_flow = false;
};

std::vector<double> uniform_grid(double horizon, std::size_t points);

// Filtered forms (linear, decomposed). The instantaneous form is forwarded
// to simulate_nofilter_scaled.
Trajectory simulate_scaled(const KernelSpec& kernel, const ActivationSpec& activation,
                           const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                           const SystemState& init, const SimConfig& cfg);

Trajectory simulate_nofilter_scaled(const KernelSpec& kernel, const ActivationSpec& activation,
                                    const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                                    const SystemState& init, const SimConfig& cfg);

struct FastConfig {
  double sample_dt = 0.1;
  bool log_events = false;
  std::uint64_t max_events = 4'000'000'000ull;
  std::uint32_t replica = 0;
  std::uint16_t group = 0;
  double x0 = 0.0;
  std::vector<double> z0;  // empty means 0
};

// Fast process at eps = 1 with W pinned at w; samples on the regular grid
// k * sample_dt, k = 0, 1, ...
Trajectory simulate_fast_fixed_w(const KernelSpec& kernel, const ActivationSpec& activation,
                                 const ResetSpec& reset, double w, double horizon,
                                 std::uint64_t seed, const FastConfig& cfg = {});

// Streaming variant: calls sample(t, x, z) on the grid without storing.
// Returns the number of events.
using FastSampleFn = std::function<void(double t, double x, std::span<const double> z)>;
std::uint64_t run_fast_fixed_w(const KernelSpec& kernel, const ActivationSpec& activation,
                               const ResetSpec& reset, double w, double horizon,
                               std::uint64_t seed, const FastConfig& cfg, const FastSampleFn& sample);

// One thinning step: candidate at the dominating rate beta(x)/eps, accepted
// with probability beta(x e^{-decay tau/eps}) / beta(x). decay = 0 freezes X.
struct ThinningDecision {
  double elapsed;  // +inf when the dominating rate is 0
  bool accepted;
};
ThinningDecision thinning_next_postsyn(double x_at_last_event, const ActivationSpec& activation,
                                       double epsilon, PhiloxStream& rng, double decay = 1.0);

// Elapsed time to the next accepted postsynaptic event within window, with
// the bound refreshed after each rejection. nullopt if none occurs.
std::optional<double> next_postsyn(double x, const ActivationSpec& activation, double epsilon,
                                   double window, PhiloxStream& rng, double decay = 1.0);

// Z flow between events over elapsed time tau at scale eps.
double z_flow(double z, double gamma, double k0, double tau, double eps);

}  // namespace stdpavg
