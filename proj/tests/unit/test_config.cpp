#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stdpavg/config.hpp"
#include "stdpavg/errors.hpp"
#include "stdpavg/output.hpp"

using namespace stdpavg;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }
std::string second_line(const std::string& s) {
  auto a = s.find('\n') + 1;
  return s.substr(a, s.find('\n', a) - a);
}

}  // namespace

TEST_CASE("defaults cover every key and round-trip") {
  ExperimentConfig c;
  for (const auto& k : config_keys()) CHECK(c.raw(k.key) == k.default_value);
  c.set("model.lambda=0.25");
  c.set("run.eps", "0.1, 0.05");
  std::istringstream is(c.write());
  auto d = ExperimentConfig::parse(is);
  CHECK(d == c);
  CHECK(d.number("model.lambda") == 0.25);
  CHECK(d.numbers("run.eps") == std::vector<double>{0.1, 0.05});
  CHECK(d.hash() == c.hash());
  CHECK(d.hash_hex().size() == 16);
}

TEST_CASE("hash tracks content") {
  ExperimentConfig a, b;
  CHECK(a.hash() == b.hash());
  b.set("output.dir=elsewhere");
  CHECK(a.hash() == b.hash());
  b.set("run.seed=2");
  CHECK(a.hash() != b.hash());
}

TEST_CASE("sectioned INI input") {
  std::istringstream is(
      "[run]\nmode = limit\nhorizon = 5\n[model]\nfamily = pa\nactivation.nu = 0.5\n"
      "[model.plasticity]\nmu = 1\n");
  auto c = ExperimentConfig::parse(is);
  CHECK(c.mode() == "limit");
  CHECK(c.number("run.horizon") == 5.0);
  CHECK(c.activation().nu == 0.5);
  CHECK(c.plasticity().mu == 1.0);
  CHECK(c.grid().size() == 101);
}

TEST_CASE("unknown keys and bad values are rejected") {
  std::istringstream is("[run]\nmoed = limit\n");
  CHECK_THROWS_AS(ExperimentConfig::parse(is), SpecError);
  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("model.nope=1"), SpecError);
  CHECK_THROWS_AS(c.set("no_equals_sign"), SpecError);
  c.set("model.lambda=abc");
  CHECK_THROWS_AS(c.number("model.lambda"), SpecError);
  c.set("run.mode=dance");
  CHECK_THROWS_AS(c.mode(), SpecError);
  ExperimentConfig f;
  f.set("model.family=hebb");
  CHECK_THROWS_AS(f.kernel(), SpecError);
}

TEST_CASE("typed views") {
  ExperimentConfig c;
  c.set("model.family=discrete");
  c.set("model.lambda=0.1");
  c.set("model.activation.slope=0.01");
  c.set("model.plasticity.alpha=0.01");
  auto d = c.discrete();
  CHECK(d.lambda == 0.1);
  CHECK(d.gamma == 2.0);
  CHECK(d.B_p == 2);
  CHECK(d.alpha == 0.01);
  auto cal = c.calcium_drive();
  CHECK(cal.theta[0] == 0.5);
  CHECK(cal.theta[1] == 1.5);
  c.set("model.calcium.theta_d=inf");
  CHECK(std::isinf(c.calcium_drive().theta[1]));

  ExperimentConfig p;
  p.set("model.pa.B1_p=0.5");
  auto pa = p.pa();
  CHECK(pa.B1[0] == 0.5);
  CHECK(p.kernel().family == KernelFamily::PA);
  CHECK(p.initial_state().z.size() == 4);
  p.set("model.plasticity.form=linear");
  p.set("model.plasticity.dep_p=2");
  CHECK_THROWS_AS(p.plasticity(), SpecError);
}

TEST_CASE("artifact headers and schemas") {
  Trajectory tr;
  SystemState s;
  s.t = 0.5;
  s.x = 1.0;
  s.z = {2.0, 3.0};
  s.w = 0.25;
  tr.samples.push_back(s);
  auto csv = trajectory_csv(tr, 2, "abc");
  CHECK(first_line(csv) == "# stdpavg-1.0 config=abc");
  CHECK(second_line(csv) == "t,x,z_1,z_2,omega_p,omega_d,w");
  CHECK(csv.find("0.5,1,2,3,0,0,0.25\n") != std::string::npos);

  SweepReport r;
  r.grid = {0.0};
  EpsStats e;
  e.eps = 0.1;
  e.stats.mean = {1.0};
  e.stats.sd = {0.0};
  r.per_eps.push_back(e);
  CHECK(second_line(sweep_csv(r, "h")) == "eps,t,mean_w,sd_w,sup_err,blowup_frac");

  LimitSolution l;
  l.t = {0.0};
  l.omega_p = {0.0};
  l.omega_d = {0.0};
  l.w = {1.0};
  CHECK(limit_csv(l, 1, "h").find("0,nan,nan,0,0,1\n") != std::string::npos);
  CHECK(fmt_num(0.1) == "0.10000000000000001");
  CHECK(fmt_num(NAN) == "nan");
  CHECK(fmt_num(-INFINITY) == "-inf");
}

TEST_CASE("drive table CSV round trip") {
  DriveTable t{{0.0, 0.5, 1.0}, {0.1, 1.0 / 3.0, 0.7}, {0.0, 0.2, 0.4}, {0.01, 0.02, 0.03}, {0, 0, 0}};
  std::stringstream ss(drive_table_csv(t, "h"));
  auto u = read_drive_table_csv(ss);
  CHECK(u.w == t.w);
  CHECK(u.drive_p == t.drive_p);
  CHECK(u.se_p == t.se_p);
  std::istringstream bad("# x\nw,drive_p\n1,2\n");
  CHECK_THROWS(read_drive_table_csv(bad));
  DriveTable nonmono{{1.0, 0.0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}};
  CHECK_THROWS_AS(nonmono.check(), SpecError);
}

TEST_CASE("pooled drive tables") {
  DriveTable a{{0.0, 1.0}, {1.0, 2.0}, {0.0, 0.0}, {0, 0}, {0, 0}};
  DriveTable b{{0.0, 1.0}, {3.0, 2.0}, {0.0, 0.5}, {0, 0}, {0, 0}};
  auto p = pool_tables({a, b});
  CHECK(p.drive_p == std::vector<double>{2.0, 2.0});
  CHECK(p.drive_d == std::vector<double>{0.0, 0.25});
  // sd sqrt(2) over sqrt(2)
  CHECK(p.se_p[0] == doctest::Approx(1.0));
  CHECK(p.se_p[1] == 0.0);
  DriveTable c{{0.0, 2.0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}};
  CHECK_THROWS_AS(pool_tables({a, c}), SpecError);
  CHECK_THROWS_AS(pool_tables({a}), SpecError);
}

TEST_CASE("atomic write") {
  auto dir = std::filesystem::temp_directory_path() / "stdpavg_test_atomic";
  std::filesystem::remove_all(dir);
  auto path = (dir / "sub" / "a.csv").string();
  write_atomic(path, "hello\n");
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "hello");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}
