#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pcf/cli.hpp"
#include "pcf/errors.hpp"
#include "pcf/io.hpp"
#include "support.hpp"

using namespace pcf;
using namespace pcf::test;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("pcf_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

const char* kMinimal = "name = m\n[grid]\nbackend = torus\nresolution = 16\n[flow]\nt_end = 0.5\n";

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  const auto s = parse_config(kMinimal);
  CHECK(s.name == "m");
  CHECK(s.config.scheme == Scheme::RK4);
  CHECK(s.config.dt.kind == DtPolicy::Kind::Adaptive);
  CHECK(s.config.dt.value == 0.4);
  CHECK(s.config.normalization == Normalization::CZero);
  CHECK(s.config.flow == FlowKind::PseudoCalabi);
  CHECK(s.config.t_end == 0.5);
  CHECK(s.config.background.grid.resolution == 16);
  CHECK(s.config.initial.kind == PotentialSpec::Kind::Zero);
}

TEST_CASE("config errors name the offending key") {
  CHECK(key_of("name = m\n[grid]\nbackend = torus\nresolution = 15\n[flow]\nt_end = 1\n") == "grid.resolution");
  CHECK(key_of("name = m\n[grid]\nbackend = torus\nresolution = 16\ncolour = red\n[flow]\nt_end = 1\n") ==
        "grid.colour");
  CHECK(key_of(std::string(kMinimal) + "[extras]\nx = 1\n") == "extras");
  CHECK(key_of("name = m\n[grid]\nbackend = torus\n[flow]\nt_end = 1\n") == "grid.resolution");
  CHECK(key_of("name = m\n[grid]\nbackend = cube\nresolution = 16\n[flow]\nt_end = 1\n") == "grid.backend");
  CHECK(key_of(std::string(kMinimal) + "[output]\nsample_every = 0\n") == "output.sample_every");
  CHECK(key_of(std::string(kMinimal) + "[initial]\nkind = random\nmargin = 1.5\n") == "initial.margin");
  CHECK(key_of(std::string(kMinimal) + "[initial]\nkind = zero\nseed = 3\n") == "initial.seed");
  CHECK(key_of(std::string(kMinimal) + "[analyses]\nfutaki = true\n") == "analyses.futaki");
  CHECK(key_of("name = m\n[grid]\nbackend = torus\nresolution = 16\n[flow]\nt_end = 1\nsafety = x\n") ==
        "flow.safety");
  CHECK(key_of("name = m\n[grid]\nbackend = torus\nresolution = 16\n[flow]\nt_end = 1\ndt = 0.1\n") == "flow.dt");
  CHECK(key_of("name = a b\n[grid]\nbackend = torus\nresolution = 16\n[flow]\nt_end = 1\n") == "name");
}

TEST_CASE("explicit potentials parse") {
  const auto s = parse_config(
      "name = f\n[grid]\nbackend = torus\nn = 2\nresolution = 8\n[initial]\nkind = fourier\n"
      "terms = 1 0 0 0 0.01 0; 0 0 1 -1 0 0.002\n[flow]\nt_end = 0.1\n");
  REQUIRE(s.config.initial.terms.size() == 2);
  CHECK(s.config.initial.terms[1].mode == std::array<int, 4>{0, 0, 1, -1});
  CHECK(s.config.initial.terms[1].sin_amp == 0.002);
  CHECK(parse_config(serialize_config(s)) == s);

  const auto l = parse_config(
      "name = l\n[grid]\nbackend = sphere\nresolution = 32\n[initial]\nkind = legendre\nlegendre = 0 0 0.05\n"
      "[flow]\nt_end = 0.1\n");
  CHECK(l.config.initial.legendre == std::vector<double>{0, 0, 0.05});
  CHECK(parse_config(serialize_config(l)) == l);
}

TEST_CASE("bundled scenarios") {
  const auto& all = bundled_scenarios();
  CHECK(all.size() == 6);
  CHECK(list_scenarios() ==
        "torus-fixed-point\ntorus-converge\ntorus-decay\nsphere-krf-compare\nsphere-futaki\nlinearized-probe\n");
  for (const auto& b : all) {
    const auto s = bundled_scenario(b.name);
    CHECK(s.name == b.name);
    CHECK(parse_config(serialize_config(s)) == s);
    CHECK(load_config(fs::path(PCF_SOURCE_DIR) / "configs" / (b.name + ".ini")) == s);
  }
  const auto d = describe("torus-converge");
  CHECK(d.find("checks: convergence to the flat metric") != std::string::npos);
  CHECK(d.find("resolution = 64") != std::string::npos);
  CHECK_THROWS_AS(describe("bogus"), UnknownScenario);
  CHECK_THROWS_AS(bundled_scenario("bogus"), UnknownScenario);
}

TEST_CASE("seed override") {
  auto s = bundled_scenario("torus-converge");
  apply_seed(s, 99);
  CHECK(s.config.initial.seed == 99);
  auto f = bundled_scenario("torus-fixed-point");
  CHECK_THROWS_AS(apply_seed(f, 1), ConfigError);
}

TEST_CASE("snapshot round trip") {
  const auto dir = scratch_dir("snap");
  auto bg = background(torus_spec(16), random_potential(1, 0.5));
  auto phi = random_phi(bg, 2, 0.5);
  write_snapshot(dir / "a.pcf1", make_snapshot(phi, 0.25));
  CHECK(fs::file_size(dir / "a.pcf1") == 64 + 8 * phi.size());
  const auto snap = read_snapshot(dir / "a.pcf1");
  CHECK(snap.t == 0.25);
  CHECK(snap.resolution == 16);
  CHECK(snap.values == std::vector<double>(phi.values().begin(), phi.values().end()));
  const auto s = load_state(snap, bg);
  CHECK(s.margin == assemble_state(bg, phi).margin);

  std::ofstream(dir / "bad.pcf1") << "PCF2 and then some more bytes to fill a whole header of 64 bytes ........";
  CHECK_THROWS_AS(read_snapshot(dir / "bad.pcf1"), IoError);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.pcf1"), IoError);
  auto other = background(sphere_spec(16));
  CHECK_THROWS_AS(load_state(snap, other), IoError);
  fs::remove_all(dir);
}

TEST_CASE("CSV rows read back exactly") {
  DiagnosticsRecord r;
  r.t = 0.1;
  r.k_energy = -1.0 / 3.0;
  r.calabi_energy = 1e-300;
  r.p_iterations = 17;
  const auto row = diagnostics_row(r);
  std::istringstream in(row);
  std::vector<double> back;
  std::string cell;
  while (std::getline(in, cell, ',')) back.push_back(std::strtod(cell.c_str(), nullptr));
  const auto values = diagnostics_values(r);
  REQUIRE(back.size() == values.size());
  for (std::size_t k = 0; k < back.size(); ++k) CHECK(back[k] == values[k]);
  CHECK(diagnostics_header().rfind("t,dt,volume,", 0) == 0);
}

TEST_CASE("fixed-point scenario writes its artifacts") {
  const auto dir = scratch_dir("fixed");
  std::ostringstream err;
  CHECK(run_scenario(bundled_scenario("torus-fixed-point"), dir, err) == kExitOk);
  CHECK(err.str().empty());
  std::ifstream csv(dir / "diagnostics.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == diagnostics_header());
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream in(line);
    std::string cell;
    for (int k = 0; k <= 6; ++k) std::getline(in, cell, ',');
    CHECK(std::strtod(cell.c_str(), nullptr) <= 1e-20);  // calabi_energy
    ++rows;
  }
  CHECK(rows > 2);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["termination"] == "ReachedTEnd");
  CHECK(summary["schema"] == kSummarySchema);
  CHECK(fs::exists(dir / "snapshots" / "phi_000000.pcf1"));
  fs::remove_all(dir);
}

TEST_CASE("positivity loss exits with a runtime code") {
  const auto dir = scratch_dir("positivity");
  auto s = parse_config(std::string(kMinimal) + "[initial]\nkind = fourier\nterms = 1 0 0.2 0\n");
  std::ostringstream err;
  CHECK(run_scenario(s, dir, err) == kExitRuntime);
  CHECK(err.str().find("PositivityLoss") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["termination"] == "PositivityLoss");
  fs::remove_all(dir);
}

TEST_CASE("config and I/O errors map to exit codes") {
  std::ostringstream err;
  auto bad = parse_config(kMinimal);
  bad.config.t_end = -1.0;
  CHECK(run_scenario(bad, scratch_dir("cfg"), err) == kExitConfig);
  CHECK(err.str().find("\"key\":\"flow.t_end\"") != std::string::npos);
  const auto file = scratch_dir("io") / "plain";
  std::ofstream(file) << "x";
  CHECK(run_scenario(parse_config(kMinimal), file / "out", err) == kExitIo);
}

TEST_CASE("batch runs match single runs") {
  const auto dir = scratch_dir("batch");
  std::ofstream(dir / "list.txt") << "# two scenarios\ntorus-fixed-point\n\nlinearized-probe\n";
  const auto scenarios = load_batch(dir / "list.txt");
  REQUIRE(scenarios.size() == 2);
  std::ostringstream err;
  CHECK(run_batch(scenarios, dir / "par", 2, err) == kExitOk);
  CHECK(run_scenario(scenarios[1], dir / "single", err) == kExitOk);
  CHECK(slurp(dir / "par" / "linearized-probe" / "diagnostics.csv") == slurp(dir / "single" / "diagnostics.csv"));
  std::ofstream(dir / "dup.txt") << "torus-fixed-point\ntorus-fixed-point\n";
  CHECK_THROWS_AS(load_batch(dir / "dup.txt"), ConfigError);
  fs::remove_all(dir);
}
