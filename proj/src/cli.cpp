#include "stdpavg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stdpavg/config.hpp"
#include "stdpavg/discrete.hpp"
#include "stdpavg/errors.hpp"
#include "stdpavg/harness.hpp"
#include "stdpavg/invariant.hpp"
#include "stdpavg/limit.hpp"
#include "stdpavg/output.hpp"

namespace stdpavg {

namespace {

using json = nlohmann::ordered_json;

// Raised after artifacts were written when a run ran out of events.
struct Budget : BudgetError {
  using BudgetError::BudgetError;
};

class Runner {
 public:
  Runner(ExperimentConfig cfg, std::string out_dir, bool quiet)
      : cfg_(std::move(cfg)), dir_(std::move(out_dir)), quiet_(quiet), hash_(cfg_.hash_hex()) {}

  void run() {
    const std::string mode = cfg_.mode();
    if (mode == "simulate") simulate();
    else if (mode == "fast") fast();
    else if (mode == "limit") limit();
    else if (mode == "sweep") sweep();
    else if (mode == "invariant") invariant();
    else if (mode == "figure1") figure1();
    else figure2();
  }

  const std::string& hash() const { return hash_; }

 private:
  void emit(const std::string& name, const std::string& content, const std::string& note = "") {
    std::string path = (std::filesystem::path(dir_) / name).string();
    write_atomic(path, content);
    if (!quiet_) std::cout << "wrote " << path << (note.empty() ? "" : " (" + note + ")") << "\n";
  }

  void validated() const {
    ValidationReport r = validate(cfg_.kernel(), cfg_.activation(), cfg_.reset(), cfg_.plasticity(),
                                  cfg_.initial_state());
    if (!r.passed()) throw SpecError("validation failed: " + r.summary());
  }

  SimConfig sim_config(double eps) const {
    SimConfig s;
    s.epsilon = eps;
    s.sample_grid = cfg_.grid();
    s.horizon = s.sample_grid.back();
    s.seed = cfg_.unsigned_integer("run.seed");
    s.max_events = cfg_.unsigned_integer("run.max_events");
    s.log_events = cfg_.flag("output.event_log");
    return s;
  }

  double first_eps() const {
    auto e = cfg_.numbers("run.eps");
    if (e.empty()) throw SpecError("run.eps is empty");
    return e.front();
  }

  static std::string term_note(const Termination& t) {
    switch (t.kind) {
      case Termination::Kind::completed: return "completed";
      case Termination::Kind::blowup: return "blowup at t=" + fmt_num(t.time);
      case Termination::Kind::budget_exhausted: return "budget exhausted at t=" + fmt_num(t.time);
    }
    return "";
  }

  void simulate() {
    SimConfig sc = sim_config(first_eps());
    Termination term;
    if (cfg_.family() == "discrete") {
      auto tr = simulate_discrete_scaled(cfg_.calcium_drive(), cfg_.discrete(),
                                         cfg_.initial_discrete_state(), sc);
      term = tr.terminated;
      emit("trajectory.csv", discrete_trajectory_csv(tr, hash_), term_note(term));
      if (sc.log_events) emit("events.csv", events_csv(tr.events, hash_));
    } else {
      validated();
      auto tr = simulate_scaled(cfg_.kernel(), cfg_.activation(), cfg_.reset(), cfg_.plasticity(),
                                cfg_.initial_state(), sc);
      term = tr.terminated;
      emit("trajectory.csv", trajectory_csv(tr, cfg_.kernel().ell, hash_), term_note(term));
      if (sc.log_events) emit("events.csv", events_csv(tr.events, hash_));
    }
    if (term.kind == Termination::Kind::budget_exhausted) throw Budget("event budget exhausted");
  }

  void fast() {
    const double T = cfg_.number("run.horizon");
    const double dt = cfg_.number("run.sample_dt");
    const std::uint64_t seed = cfg_.unsigned_integer("run.seed");
    if (cfg_.family() == "discrete") {
      DiscreteTrajectory tr;
      std::int64_t w = cfg_.integer("run.w");
      run_discrete_fast(cfg_.discrete(), w, T, seed, dt, [&](double t, std::int64_t x, std::int64_t c) {
        tr.samples.push_back({t, x, c, 0.0, 0.0, w});
      });
      emit("fast.csv", discrete_trajectory_csv(tr, hash_));
      return;
    }
    FastConfig fc;
    fc.sample_dt = dt;
    fc.max_events = cfg_.unsigned_integer("run.max_events");
    auto tr = simulate_fast_fixed_w(cfg_.kernel(), cfg_.activation(), cfg_.reset(),
                                    cfg_.number("run.w"), T, seed, fc);
    emit("fast.csv", trajectory_csv(tr, cfg_.kernel().ell, hash_), term_note(tr.terminated));
    if (tr.terminated.kind == Termination::Kind::budget_exhausted) throw Budget("event budget exhausted");
  }

  std::vector<double> table_grid() const {
    double hi = cfg_.number("run.table_w_max");
    std::int64_t n = cfg_.integer("run.table_points");
    if (!(hi > 0.0) || n < 2) throw SpecError("run.table_w_max must be > 0 and run.table_points >= 2");
    return uniform_grid(hi, static_cast<std::size_t>(n));
  }

  InvariantConfig invariant_config() const {
    InvariantConfig ic;
    ic.horizon = cfg_.number("run.invariant_horizon");
    ic.sample_dt = cfg_.number("run.sample_dt");
    ic.burn_in = cfg_.number("run.burn_in");
    ic.batches = static_cast<std::size_t>(cfg_.integer("run.batches"));
    ic.seed = cfg_.unsigned_integer("run.seed");
    return ic;
  }

  void limit() {
    const std::string f = cfg_.family();
    const std::vector<double> grid = cfg_.grid();
    if (f == "discrete") {
      DiscreteParams p = cfg_.discrete();
      CalciumDriveSpec cal = cfg_.calcium_drive();
      AnalyticTails tails(cq_model(p), cal);
      EnsembleStats e = limit_ensemble(tails, cal, {p.alpha, p.mu, p.B_p, p.B_d},
                                       cfg_.initial_discrete_state(),
                                       static_cast<std::size_t>(cfg_.integer("run.replicas")),
                                       cfg_.unsigned_integer("run.seed"), 0, grid);
      emit("limit.csv", ensemble_csv(grid, e, 1, hash_), "ensemble mean");
      return;
    }
    validated();
    const ActivationSpec act = cfg_.activation();
    const PlasticityMapSpec m = cfg_.plasticity();
    const double w0 = cfg_.number("model.init.w0");
    LimitOptions opt;
    opt.omega0 = {cfg_.number("model.init.omega_p"), cfg_.number("model.init.omega_d")};
    LimitSolution s;
    std::size_t ell = cfg_.kernel().ell;
    if (f == "pa") {
      PAParams pa = cfg_.pa();
      if (!m.filtered()) {
        AffineDrive d = pa_nofilter_drive(pa, act);
        s = solve_nofilter([&](double w, double) { return std::array<double, 2>{d.eval(Branch::p, w), d.eval(Branch::d, w)}; },
                           m, w0, grid, opt);
      } else {
        PACoefficients c = pa_coeffs(make_pa_kernel(pa), act, pa.lambda);
        s = solve_limit_pa(c, m, {act.nu, act.slope, pa.lambda}, w0, grid, opt);
      }
    } else if (f == "simple") {
      QuadraticDrive q = simple_model_drive(cfg_.simple(), act);
      DriveOfW d = [&](double w, double) { return std::array<double, 2>{q.eval(w), 0.0}; };
      s = m.filtered() ? solve_filtered(d, m, w0, grid, opt) : solve_nofilter(d, m, w0, grid, opt);
    } else {
      DriveTable t;
      if (f == "pns") {
        PNSParams p = cfg_.pns();
        t = pns_drive_table(table_grid(), p, {p.lambda, act.nu, act.slope});
      } else {
        t = mc_drive_table(cfg_.kernel(), act, cfg_.reset(), table_grid(), invariant_config());
      }
      emit("drive_table.csv", drive_table_csv(t, hash_));
      s = solve_limit_table(t, m, w0, grid, opt);
    }
    std::string note = s.blowup ? "blowup: t_exp in [" + fmt_num(s.bracket_lo) + ", " + fmt_num(s.bracket_hi) + "]"
                                : "final w=" + fmt_num(s.w.back());
    emit("limit.csv", limit_csv(s, ell, hash_), note);
  }

  void sweep() {
    const std::string f = cfg_.family();
    const std::vector<double> grid = cfg_.grid();
    const auto eps = cfg_.numbers("run.eps");
    const auto replicas = static_cast<std::size_t>(cfg_.integer("run.replicas"));
    const auto seed = cfg_.unsigned_integer("run.seed");
    SweepReport r;
    if (f == "discrete") {
      DiscreteBundle b;
      b.name = "discrete_limit_ar";
      b.params = cfg_.discrete();
      b.calcium = cfg_.calcium_drive();
      b.init = cfg_.initial_discrete_state();
      AnalyticTails tails(cq_model(b.params), b.calcium);
      EnsembleStats e = limit_ensemble(tails, b.calcium, {b.params.alpha, b.params.mu, b.params.B_p, b.params.B_d},
                                       b.init, replicas, seed, 0, grid);
      b.limit = [m = e.mean](const std::vector<double>&) { return m; };
      r = eps_sweep(b, eps, replicas, seed, grid);
    } else {
      ContinuousBundle b;
      const PlasticityMapSpec m = cfg_.plasticity();
      const double w0 = cfg_.number("model.init.w0");
      if (f == "pa") {
        b = m.filtered() ? pa_bundle(cfg_.pa(), cfg_.activation(), m, w0)
                         : pa_nofilter_bundle(cfg_.pa(), cfg_.activation(), m, w0);
      } else if (f == "simple") {
        SimpleRegimeParams p = cfg_.regime_params();
        p.alpha.reset();
        b = simple_bundle(p, w0);
      } else {
        throw SpecError("mode sweep supports families pa, simple and discrete");
      }
      r = eps_sweep(b, eps, replicas, seed, grid);
    }
    std::string note;
    for (const auto& e : r.per_eps) note += "eps=" + fmt_num(e.eps) + " sup_err=" + fmt_num(e.sup_err) + " ";
    emit("sweep.csv", sweep_csv(r, hash_), note);
  }

  void invariant() {
    InvariantConfig ic = invariant_config();
    std::string out = header_line(hash_) + "name,w,mean,se,ess,mixing_ratio,mixing_warning\n";
    InvariantEstimate est;
    std::string wtxt;
    if (cfg_.family() == "discrete") {
      std::int64_t w = cfg_.integer("run.w");
      wtxt = std::to_string(w);
      std::vector<DiscreteFunctional> fns;
      for (const auto& name : cfg_.words("run.functionals")) {
        if (name == "mean_x") fns.push_back({name, [](std::int64_t x, std::int64_t) { return double(x); }});
        else if (name == "mean_c") fns.push_back({name, [](std::int64_t, std::int64_t c) { return double(c); }});
        else if (name.rfind("c_ge", 0) == 0) {
          std::int64_t n = std::stoll(name.substr(4));
          fns.push_back({name, [n](std::int64_t, std::int64_t c) { return c >= n ? 1.0 : 0.0; }});
        } else throw SpecError("unknown discrete functional " + name + " (mean_x, mean_c, c_ge<n>)");
      }
      est = mc_invariant_discrete(cfg_.discrete(), w, fns, ic);
    } else {
      KernelSpec k = cfg_.kernel();
      ActivationSpec act = cfg_.activation();
      double w = cfg_.number("run.w");
      wtxt = fmt_num(w);
      std::vector<Functional> fns;
      for (const auto& name : cfg_.words("run.functionals")) fns.push_back(named_functional(name, k, act));
      est = mc_invariant(k, act, cfg_.reset(), w, fns, ic);
    }
    std::string note;
    for (const auto& v : est.values) {
      out += v.name + "," + wtxt + "," + fmt_num(v.mean) + "," + fmt_num(v.se) + "," + fmt_num(v.ess) +
             "," + fmt_num(v.mixing_ratio) + "," + (v.mixing_warning ? "1" : "0") + "\n";
      note += v.name + "=" + fmt_num(v.mean) + "+-" + fmt_num(v.se) + " ";
    }
    emit("invariant.csv", out, note);
  }

  static std::string tag(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }

  void figure1() {
    if (cfg_.family() != "simple") throw SpecError("mode figure1 needs model.family = simple");
    SimpleRegimeParams p = cfg_.regime_params();
    auto w0s = cfg_.numbers("run.w0_list");
    const double T = cfg_.number("run.horizon");
    RegimeResult rr = classify_regime(p, w0s, T, static_cast<std::size_t>(cfg_.integer("run.grid_points")));
    json j;
    j["regime"] = to_string(rr.regime);
    j["w_eq"] = rr.w_eq ? json(*rr.w_eq) : json(nullptr);
    j["roots"] = rr.roots;
    j["B1"] = p.model.B1;
    j["B2"] = p.model.B2;
    json fates = json::array();
    for (std::size_t i = 0; i < w0s.size(); ++i) {
      json fj;
      fj["w0"] = w0s[i];
      fj["fate"] = to_string(rr.fates[i]);
      fj[rr.fates[i] == Fate::explodes ? "t_exp" : "w_T"] = rr.limits[i];
      fates.push_back(fj);
    }
    j["fates"] = fates;
    j["diagnostics"] = rr.diagnostics;
    j["config_hash"] = hash_;
    j["version"] = kArtifactVersion;
    emit("regime.json", j.dump(2) + "\n", to_string(rr.regime));
    for (std::size_t i = 0; i < w0s.size(); ++i)
      emit("limit_w0_" + tag(w0s[i]) + ".csv", limit_csv(rr.solutions[i], 1, hash_));

    if (p.alpha) return;  // scaled runs use the instantaneous toy model
    for (double w0 : w0s) {
      ContinuousBundle b = simple_bundle(p, w0);
      for (double eps : cfg_.numbers("run.eps")) {
        SimConfig sc = sim_config(eps);
        sc.log_events = false;
        auto tr = simulate_scaled(b.kernel, b.activation, b.reset, b.plasticity, b.init, sc);
        emit("scaled_eps_" + tag(eps) + "_w0_" + tag(w0) + ".csv", trajectory_csv(tr, 1, hash_),
             term_note(tr.terminated));
      }
    }
  }

  void figure2() {
    Figure2Config f = cfg_.figure2();
    Figure2Result r = reproduce_figure2(f);
    emit("scaled_discrete.csv", sweep_csv(r.discrete, hash_));
    if (f.continuous) {
      emit("scaled_continuous.csv", sweep_csv(r.continuous, hash_));
      emit("limit_continuous.csv", limit_csv(r.continuous_limit, 1, hash_));
      emit("drive_table_continuous.csv", drive_table_csv(r.continuous_table, hash_));
    }
    emit("limit_mc.csv", ensemble_csv(r.grid, r.limit_mc, 1, hash_));
    emit("limit_ar.csv", ensemble_csv(r.grid, r.limit_ar, 1, hash_));
    emit("drive_table_discrete.csv", drive_table_csv(r.discrete_table, hash_));

    json j;
    j["t"] = r.grid.back();
    auto sd_list = [](const SweepReport& s) {
      json a = json::array();
      for (const auto& e : s.per_eps) a.push_back({{"eps", e.eps}, {"sd", e.stats.sd.back()}, {"mean", e.stats.mean.back()}});
      return a;
    };
    j["discrete"] = sd_list(r.discrete);
    if (f.continuous) j["continuous"] = sd_list(r.continuous);
    j["limit_ar"] = {{"sd", r.limit_ar.sd.back()}, {"mean", r.limit_ar.mean.back()}};
    j["limit_mc"] = {{"sd", r.limit_mc.sd.back()}, {"mean", r.limit_mc.mean.back()}};
    j["config_hash"] = hash_;
    j["version"] = kArtifactVersion;
    emit("sd_inset.json", j.dump(2) + "\n");
  }

  ExperimentConfig cfg_;
  std::string dir_;
  bool quiet_;
  std::string hash_;
};

int report_error(int code, const char* kind, const std::string& msg, const std::string& dir,
                 const std::string& hash, std::optional<double> time = std::nullopt) {
  json j;
  j["status"] = "error";
  j["kind"] = kind;
  j["exit_code"] = code;
  j["message"] = msg;
  if (time) j["time"] = *time;
  if (!hash.empty()) j["config_hash"] = hash;
  std::cerr << j.dump() << "\n";
  if (!dir.empty()) {
    try {
      write_atomic((std::filesystem::path(dir) / "diagnostic.json").string(), j.dump(2) + "\n");
    } catch (const std::exception&) {
    }
  }
  return code;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Event-driven STDP slow-fast simulator and averaging analytics"};
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config (INI)")->required();
  app.add_option("--set", overrides, "override KEY=VALUE (repeatable)");
  app.add_option("--seed", seed, "override run.seed");
  app.add_option("--out", out_dir, "artifact directory (overrides output.dir)");
  app.add_flag("--quiet", quiet, "no summary lines");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error(kExitValidation, "usage", e.what(), "", "");
  }

  std::string hash;
  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    for (const auto& o : overrides) cfg.set(o);
    if (seed) cfg.set("run.seed", std::to_string(*seed));
    if (!out_dir.empty()) cfg.set("output.dir", out_dir);
    out_dir = cfg.raw("output.dir");
    hash = cfg.hash_hex();
    Runner r(cfg, out_dir, quiet);
    r.run();
    if (!quiet) std::cout << "ok mode=" << cfg.mode() << " config=" << hash << "\n";
    return kExitOk;
  } catch (const SpecError& e) {
    return report_error(kExitValidation, "validation", e.what(), out_dir, hash);
  } catch (const RangeError& e) {
    return report_error(kExitNumeric, "range", e.what(), out_dir, hash, e.time());
  } catch (const NumericError& e) {
    return report_error(kExitNumeric, "numeric", e.what(), out_dir, hash);
  } catch (const BudgetError& e) {
    return report_error(kExitBudget, "budget", e.what(), out_dir, hash);
  } catch (const std::exception& e) {
    return report_error(kExitNumeric, "internal", e.what(), out_dir, hash);
  }
}

}  // namespace stdpavg
