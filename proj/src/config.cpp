#include "stdpavg/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stdpavg/errors.hpp"

namespace stdpavg {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"run.mode", "simulate", "simulate | fast | limit | sweep | invariant | figure1 | figure2"},
      {"run.eps", "0.1,0.01,0.001", "epsilon list; simulate uses the first entry"},
      {"run.horizon", "10", "time horizon T (fast time for mode fast)"},
      {"run.grid_points", "101", "sample grid points on [0, T]"},
      {"run.replicas", "200", "replicas per epsilon"},
      {"run.seed", "1", "64-bit seed"},
      {"run.max_events", "1000000000", "event budget per trajectory"},
      {"run.w", "1", "pinned weight for fast and invariant modes"},
      {"run.functionals", "mean_x", "invariant functionals: mean_x, mean_z<i>, mean_xz<i>, drive_p, drive_d"},
      {"run.invariant_horizon", "10000", "fast-time length of the ergodic average"},
      {"run.sample_dt", "0.1", "sampling step of the ergodic average"},
      {"run.batches", "32", "batch means"},
      {"run.burn_in", "0.1", "burn-in fraction"},
      {"run.w0_list", "1,3", "initial weights for figure1"},
      {"run.table_w_max", "10", "upper end of drive tables built for mode limit"},
      {"run.table_points", "41", "drive table points for mode limit"},
      {"model.family", "pa", "pa | pns | calcium | simple | discrete"},
      {"model.lambda", "1", "presynaptic rate"},
      {"model.activation.nu", "0", "activation offset"},
      {"model.activation.slope", "1", "activation slope"},
      {"model.reset.form", "none", "none | custom"},
      {"model.reset.fraction", "0", "custom reset: g(x) = fraction * max(x, 0)"},
      {"model.reset.c_g", "0", "reset bound"},
      {"model.pa.B1_p", "1", "pair rule: presynaptic trace jump, potentiation"},
      {"model.pa.B2_p", "1", "pair rule: postsynaptic trace jump, potentiation"},
      {"model.pa.B1_d", "1", "pair rule: presynaptic trace jump, depression"},
      {"model.pa.B2_d", "1", "pair rule: postsynaptic trace jump, depression"},
      {"model.pa.gamma1_p", "1", "decay of z_p1"},
      {"model.pa.gamma2_p", "1", "decay of z_p2"},
      {"model.pa.gamma1_d", "1", "decay of z_d1"},
      {"model.pa.gamma2_d", "1", "decay of z_d2"},
      {"model.pa.D1_p", "0", "instantaneous model constant D_p1"},
      {"model.pa.D2_p", "0", "instantaneous model constant D_p2"},
      {"model.pa.D1_d", "0", "instantaneous model constant D_d1"},
      {"model.pa.D2_d", "0", "instantaneous model constant D_d2"},
      {"model.pns.phi1_p_amp", "1", "nearest neighbour: Phi_p1 amplitude"},
      {"model.pns.phi1_p_rate", "1", "Phi_p1 rate"},
      {"model.pns.phi2_p_amp", "0", "Phi_p2 amplitude"},
      {"model.pns.phi2_p_rate", "1", "Phi_p2 rate"},
      {"model.pns.phi1_d_amp", "0", "Phi_d1 amplitude"},
      {"model.pns.phi1_d_rate", "1", "Phi_d1 rate"},
      {"model.pns.phi2_d_amp", "1", "Phi_d2 amplitude"},
      {"model.pns.phi2_d_rate", "1", "Phi_d2 rate"},
      {"model.calcium.gamma", "2", "calcium decay"},
      {"model.calcium.C1", "1", "calcium jump at presynaptic spikes"},
      {"model.calcium.C2", "1", "calcium jump at postsynaptic spikes"},
      {"model.calcium.theta_p", "0.5", "potentiation threshold (inf disables)"},
      {"model.calcium.theta_d", "1.5", "depression threshold (inf disables)"},
      {"model.simple.B1", "1", "toy model: trace jump at presynaptic spikes"},
      {"model.simple.B2", "0", "toy model: trace jump at postsynaptic spikes"},
      {"model.simple.gamma", "1", "toy model: trace decay"},
      {"model.discrete.B_p", "2", "discrete model potentiation jump"},
      {"model.discrete.B_d", "1", "discrete model depression jump"},
      {"model.plasticity.form", "linear", "linear | decomposed | instantaneous"},
      {"model.plasticity.mu", "0", "weight leak"},
      {"model.plasticity.alpha", "1", "filter leak"},
      {"model.plasticity.dep_p", "1", "constant potentiation factor"},
      {"model.plasticity.dep_d", "1", "constant depression factor"},
      {"model.plasticity.filtered_regime", "false", "figure1: use the filtered toy model"},
      {"model.init.w0", "1", "initial weight"},
      {"model.init.x0", "0", "initial potential"},
      {"model.init.omega_p", "0", "initial potentiation filter"},
      {"model.init.omega_d", "0", "initial depression filter"},
      {"figure2.mc_horizon", "100000", "fast-time length per Monte Carlo table point"},
      {"figure2.mc_step", "5", "Monte Carlo table spacing in w"},
      {"figure2.table_batches", "8", "independent Monte Carlo tables pooled into the drive table"},
      {"figure2.continuous", "true", "also run the continuous calcium model"},
      {"output.dir", "out", "artifact directory"},
      {"output.event_log", "false", "write the event log of mode simulate"},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(const std::string& k) {
  for (const auto& c : config_keys())
    if (k == c.key) return &c;
  return nullptr;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw SpecError("config: " + key + " = '" + v + "' is not a number");
  }
  if (used != v.size() || std::isnan(x)) throw SpecError("config: " + key + " = '" + v + "' is not a number");
  return x;
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& c : config_keys()) values_[c.key] = c.default_value;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) throw SpecError("config: unknown key " + key);
  values_[key] = trim(value);
}

void ExperimentConfig::set(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw SpecError("override must be key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SpecError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw SpecError("config: key outside a section: " + section);
    for (const auto& [name, value] : body) c.set(section + "." + name, value.data());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SpecError("config: cannot open " + path);
  return parse(f);
}

std::string ExperimentConfig::write() const {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::map<std::string, pt::ptree> sections;
  for (const auto& [k, v] : values_) {
    auto dot = k.find('.');
    sections[k.substr(0, dot)].push_back({k.substr(dot + 1), pt::ptree(v)});
  }
  for (auto& [name, body] : sections) tree.push_back({name, body});
  std::ostringstream os;
  pt::write_ini(os, tree);
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  // where artifacts land does not change what is in them
  ExperimentConfig c = *this;
  c.values_.erase("output.dir");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : c.write()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string ExperimentConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

const std::string& ExperimentConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw SpecError("config: unknown key " + key);
  return it->second;
}

double ExperimentConfig::number(const std::string& key) const { return parse_number(key, raw(key)); }

std::int64_t ExperimentConfig::integer(const std::string& key) const {
  double x = number(key);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw SpecError("config: " + key + " must be an integer");
  return static_cast<std::int64_t>(x);
}

std::uint64_t ExperimentConfig::unsigned_integer(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw SpecError("config: " + key + " must be a nonnegative integer");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw SpecError("config: " + key + " out of range");
  }
}

bool ExperimentConfig::flag(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw SpecError("config: " + key + " must be true or false");
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split(raw(key), ',')) out.push_back(parse_number(key, s));
  return out;
}

std::vector<std::string> ExperimentConfig::words(const std::string& key) const {
  return split(raw(key), ',');
}

std::string ExperimentConfig::mode() const {
  const std::string& m = raw("run.mode");
  for (const char* ok : {"simulate", "fast", "limit", "sweep", "invariant", "figure1", "figure2"})
    if (m == ok) return m;
  throw SpecError("config: unknown run.mode " + m);
}

std::string ExperimentConfig::family() const {
  const std::string& f = raw("model.family");
  for (const char* ok : {"pa", "pns", "calcium", "simple", "discrete"})
    if (f == ok) return f;
  throw SpecError("config: unknown model.family " + f);
}

ActivationSpec ExperimentConfig::activation() const {
  ActivationSpec a{number("model.activation.nu"), number("model.activation.slope")};
  check_structure(a);
  return a;
}

ResetSpec ExperimentConfig::reset() const {
  ResetSpec r;
  const std::string& f = raw("model.reset.form");
  if (f == "none") r.form = ResetForm::none;
  else if (f == "custom") r.form = ResetForm::custom;
  else throw SpecError("config: unknown model.reset.form " + f);
  r.fraction = number("model.reset.fraction");
  r.c_g = number("model.reset.c_g");
  return r;
}

PlasticityMapSpec ExperimentConfig::plasticity() const {
  PlasticityMapSpec m;
  const std::string& f = raw("model.plasticity.form");
  if (f == "linear") m.form = PlasticityForm::linear;
  else if (f == "decomposed") m.form = PlasticityForm::decomposed;
  else if (f == "instantaneous") m.form = PlasticityForm::instantaneous;
  else throw SpecError("config: unknown model.plasticity.form " + f);
  m.mu = number("model.plasticity.mu");
  m.alpha = number("model.plasticity.alpha");
  m.dep_p.scale = number("model.plasticity.dep_p");
  m.dep_d.scale = number("model.plasticity.dep_d");
  if (m.form == PlasticityForm::linear && (m.dep_p.scale != 1.0 || m.dep_d.scale != 1.0))
    throw SpecError("config: the linear form has unit factors; use decomposed");
  check_structure(m);
  return m;
}

PAParams ExperimentConfig::pa() const {
  PAParams p;
  p.lambda = number("model.lambda");
  for (Branch a : kBranches) {
    std::string s = a == Branch::p ? "_p" : "_d";
    std::size_t i = idx(a);
    p.B1[i] = number("model.pa.B1" + s);
    p.B2[i] = number("model.pa.B2" + s);
    p.gamma1[i] = number("model.pa.gamma1" + s);
    p.gamma2[i] = number("model.pa.gamma2" + s);
    p.D1[i] = number("model.pa.D1" + s);
    p.D2[i] = number("model.pa.D2" + s);
  }
  return p;
}

PNSParams ExperimentConfig::pns() const {
  PNSParams p;
  p.lambda = number("model.lambda");
  for (Branch a : kBranches) {
    std::string s = a == Branch::p ? "_p" : "_d";
    p.phi1[idx(a)] = {number("model.pns.phi1" + s + "_amp"), number("model.pns.phi1" + s + "_rate")};
    p.phi2[idx(a)] = {number("model.pns.phi2" + s + "_amp"), number("model.pns.phi2" + s + "_rate")};
  }
  return p;
}

CalciumDriveSpec ExperimentConfig::calcium_drive() const {
  return make_threshold_drive(number("model.calcium.theta_p"), number("model.calcium.theta_d"));
}

CalciumParams ExperimentConfig::calcium() const {
  return CalciumParams{number("model.lambda"), number("model.calcium.gamma"),
                       number("model.calcium.C1"), number("model.calcium.C2"), calcium_drive()};
}

SimpleModelParams ExperimentConfig::simple() const {
  return SimpleModelParams{number("model.lambda"), number("model.simple.gamma"),
                           number("model.simple.B1"), number("model.simple.B2")};
}

DiscreteParams ExperimentConfig::discrete() const {
  DiscreteParams p;
  p.lambda = number("model.lambda");
  p.gamma = number("model.calcium.gamma");
  p.C1 = integer("model.calcium.C1");
  p.C2 = integer("model.calcium.C2");
  p.B_p = integer("model.discrete.B_p");
  p.B_d = integer("model.discrete.B_d");
  p.mu = number("model.plasticity.mu");
  p.alpha = number("model.plasticity.alpha");
  p.activation = activation();
  check_structure(p);
  return p;
}

SimpleRegimeParams ExperimentConfig::regime_params() const {
  SimpleRegimeParams p;
  p.model = simple();
  p.activation = activation();
  p.mu = number("model.plasticity.mu");
  if (flag("model.plasticity.filtered_regime")) p.alpha = number("model.plasticity.alpha");
  return p;
}

Figure2Config ExperimentConfig::figure2() const {
  Figure2Config f;
  f.params = discrete();
  f.theta_p = number("model.calcium.theta_p");
  f.theta_d = number("model.calcium.theta_d");
  f.w0 = integer("model.init.w0");
  f.horizon = number("run.horizon");
  f.grid_points = static_cast<std::size_t>(integer("run.grid_points"));
  f.eps_list = numbers("run.eps");
  f.replicas = static_cast<std::size_t>(integer("run.replicas"));
  f.seed = unsigned_integer("run.seed");
  f.mc_horizon = number("figure2.mc_horizon");
  f.mc_step = integer("figure2.mc_step");
  f.table_batches = static_cast<std::size_t>(integer("figure2.table_batches"));
  f.continuous = flag("figure2.continuous");
  if (f.mc_step <= 0) throw SpecError("config: figure2.mc_step must be > 0");
  if (f.table_batches < 2) throw SpecError("config: figure2.table_batches must be >= 2");
  return f;
}

KernelSpec ExperimentConfig::kernel() const {
  const std::string f = family();
  KernelSpec k;
  if (f == "pa") k = make_pa_kernel(pa());
  else if (f == "pns") k = make_pns_kernel(pns());
  else if (f == "calcium") k = make_calcium_kernel(calcium());
  else if (f == "simple") k = make_simple_kernel(simple());
  else throw SpecError("config: family " + f + " has no continuous kernel");
  check_structure(k);
  return k;
}

SystemState ExperimentConfig::initial_state() const {
  SystemState s;
  s.x = number("model.init.x0");
  s.z.assign(kernel().ell, 0.0);
  s.omega_p = number("model.init.omega_p");
  s.omega_d = number("model.init.omega_d");
  s.w = number("model.init.w0");
  return s;
}

DiscreteState ExperimentConfig::initial_discrete_state() const {
  DiscreteState s;
  s.x = integer("model.init.x0");
  s.omega_p = number("model.init.omega_p");
  s.omega_d = number("model.init.omega_d");
  s.w = integer("model.init.w0");
  if (s.x < 0 || s.w < 0) throw SpecError("config: discrete initial state must be nonnegative");
  return s;
}

std::vector<double> ExperimentConfig::grid() const {
  std::int64_t n = integer("run.grid_points");
  if (n < 2) throw SpecError("config: run.grid_points must be >= 2");
  double T = number("run.horizon");
  if (!(T > 0.0) || !std::isfinite(T)) throw SpecError("config: run.horizon must be > 0");
  return uniform_grid(T, static_cast<std::size_t>(n));
}

}  // namespace stdpavg
