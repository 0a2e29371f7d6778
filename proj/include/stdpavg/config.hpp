#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stdpavg/harness.hpp"
#include "stdpavg/model.hpp"

namespace stdpavg {

// Flat sectioned key-value config. Keys are "section.name"; names may
// contain further dots ("model.activation.nu"). Every key is registered with
// a default, unknown keys are rejected.
struct ConfigKey {
  const char* key;
  const char* default_value;
  const char* doc;
};
const std::vector<ConfigKey>& config_keys();

class ExperimentConfig {
 public:
  ExperimentConfig();  // all defaults

  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig load(const std::string& path);

  // "section.name=value"
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& raw(const std::string& key) const;
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  // Canonical INI text (sorted, every key present); parse(write()) == *this.
  std::string write() const;
  // FNV-1a 64 of write(), ignoring output.dir.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  bool operator==(const ExperimentConfig& o) const { return values_ == o.values_; }

  // --- typed views; kernel() dispatches on model.family ------------------
  std::string mode() const;
  std::string family() const;
  ActivationSpec activation() const;
  ResetSpec reset() const;
  PlasticityMapSpec plasticity() const;
  PAParams pa() const;
  PNSParams pns() const;
  CalciumParams calcium() const;
  SimpleModelParams simple() const;
  DiscreteParams discrete() const;
  CalciumDriveSpec calcium_drive() const;
  SimpleRegimeParams regime_params() const;
  Figure2Config figure2() const;
  // Kernel for the continuous families.
  KernelSpec kernel() const;
  SystemState initial_state() const;
  DiscreteState initial_discrete_state() const;
  std::vector<double> grid() const;  // run.horizon, run.grid_points

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace stdpavg
