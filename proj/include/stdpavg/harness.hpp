#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stdpavg/drive_table.hpp"
#include "stdpavg/engine.hpp"
#include "stdpavg/invariant.hpp"
#include "stdpavg/limit.hpp"
#include "stdpavg/model.hpp"

namespace stdpavg {

// Per-grid-point ensemble statistics over the replicas that completed.
struct EnsembleStats {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> se;
  std::size_t used = 0;
};

struct EpsStats {
  double eps = 0.0;
  std::size_t replicas = 0;
  std::size_t budget_exhausted = 0;
  std::size_t blowups = 0;
  double mean_t_exp = 0.0;  // NaN without blow-ups
  EnsembleStats stats;
  double sup_err = 0.0;  // sup_t |mean(t) - limit(t)|
  double blowup_frac() const { return replicas ? static_cast<double>(blowups) / replicas : 0.0; }
};

struct SweepReport {
  std::string limit_id;
  std::vector<double> grid;
  std::vector<double> limit_w;
  std::vector<EpsStats> per_eps;
};

// One replica: w sampled on the grid (shorter when terminated early).
struct ReplicaRun {
  std::vector<double> w;
  Termination terminated;
};
using ReplicaFn = std::function<ReplicaRun(double eps, std::size_t eps_index, std::uint32_t replica)>;

// Runs replicas for every eps in parallel and reduces in replica order.
SweepReport run_sweep(const ReplicaFn& run, const std::vector<double>& eps_list, std::size_t replicas,
                      const std::vector<double>& grid, std::vector<double> limit_w,
                      std::string limit_id);

EnsembleStats ensemble_stats(const std::vector<std::vector<double>>& paths, std::size_t points);

struct ContinuousBundle {
  std::string name;
  KernelSpec kernel;
  ActivationSpec activation;
  ResetSpec reset;
  PlasticityMapSpec plasticity;
  SystemState init;
  // Limit w on the grid.
  std::function<std::vector<double>(const std::vector<double>& grid)> limit;
};

struct DiscreteBundle {
  std::string name;
  DiscreteParams params;
  CalciumDriveSpec calcium;
  DiscreteState init;
  std::function<std::vector<double>(const std::vector<double>& grid)> limit;
};

SweepReport eps_sweep(const ContinuousBundle& b, const std::vector<double>& eps_list,
                      std::size_t replicas, std::uint64_t seed, const std::vector<double>& grid);
SweepReport eps_sweep(const DiscreteBundle& b, const std::vector<double>& eps_list,
                      std::size_t replicas, std::uint64_t seed, const std::vector<double>& grid);

// Bundles used by the experiments.
ContinuousBundle pa_bundle(const PAParams& pa, const ActivationSpec& act,
                           const PlasticityMapSpec& plasticity, double w0);
ContinuousBundle pa_nofilter_bundle(const PAParams& pa, const ActivationSpec& act,
                                    const PlasticityMapSpec& plasticity, double w0);

// Ensemble of the discrete limit jump process. paths, if given, receives the
// per-replica samples.
EnsembleStats limit_ensemble(const TailProvider& tails, const CalciumDriveSpec& calcium,
                             const DiscreteLimitParams& params, const DiscreteState& init,
                             std::size_t replicas, std::uint64_t seed, std::uint16_t group,
                             const std::vector<double>& grid, double* w_max = nullptr,
                             std::vector<std::vector<double>>* paths = nullptr);

// --- Figure 1 regimes --------------------------------------------------------

enum class Regime { explosive, divergent, bistable, stable, undetermined };
const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

enum class Fate { explodes, diverges, converges, unresolved };
const char* to_string(Fate f);

struct SimpleRegimeParams {
  SimpleModelParams model;
  ActivationSpec activation{0.0, 1.0};
  double mu = 1.0;
  std::optional<double> alpha;  // filtered variant when set
};

struct RegimeResult {
  Regime regime = Regime::undetermined;
  std::vector<double> roots;  // positive zeros of the net drift
  std::optional<double> w_eq;
  std::vector<Fate> fates;
  std::vector<double> limits;  // w(T) or t_exp per w0
  std::vector<LimitSolution> solutions;
  std::string diagnostics;
};

// Generic: D(w) is the averaged drive, net drift D(w) - mu w (instantaneous)
// or D(w)/alpha - mu w at the filter equilibrium.
RegimeResult classify_drive(const std::function<double(double)>& D, double mu,
                            std::optional<double> alpha, const std::vector<double>& w0_list,
                            double horizon = 40.0, std::size_t grid_points = 401);
RegimeResult classify_regime(const SimpleRegimeParams& p, const std::vector<double>& w0_list,
                             double horizon = 40.0, std::size_t grid_points = 401);

// First (B1, B2) in grid order that produces each regime.
std::map<Regime, std::pair<double, double>> regime_search(const SimpleRegimeParams& base,
                                                          const std::vector<double>& B1_grid,
                                                          const std::vector<double>& B2_grid,
                                                          const std::vector<double>& w0_list,
                                                          double horizon = 40.0);

// Simple-model bundle for scaled runs (instantaneous, leak mu).
ContinuousBundle simple_bundle(const SimpleRegimeParams& p, double w0);

// --- Figure 2 ----------------------------------------------------------------

struct Figure2Config {
  DiscreteParams params;  // Figure 2 values by default
  double theta_p = 0.5;
  double theta_d = 1.5;
  std::int64_t w0 = 10;
  double horizon = 50.0;
  std::size_t grid_points = 101;
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
  std::size_t replicas = 200;
  std::uint64_t seed = 1;
  double mc_horizon = 1e5;   // fast-time length per table point
  std::int64_t mc_step = 5;  // table spacing in w
  // mc_horizon is split over this many independent tables; their spread
  // enters limit_mc.se next to the replica spread.
  std::size_t table_batches = 8;
  bool continuous = true;
};

struct Figure2Result {
  std::vector<double> grid;
  SweepReport discrete;
  SweepReport continuous;  // empty when disabled
  DriveTable discrete_table;
  DriveTable continuous_table;
  EnsembleStats limit_mc;  // se includes table error
  EnsembleStats limit_ar;
  // se of limit_mc.mean - limit_ar.mean (shared replica streams, table error)
  std::vector<double> limit_gap_se;
  LimitSolution continuous_limit;
};

Figure2Result reproduce_figure2(const Figure2Config& cfg);

}  // namespace stdpavg
