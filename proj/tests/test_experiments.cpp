#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "zrp/experiments.hpp"

using namespace zrp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "zrp_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("thermo experiment emits the linear-rate table") {
  const auto dir = fresh_dir("thermo");
  const auto res = run_experiment(
      Config::from_string("rate = linear\nrho_min = 1\nrho_max = 2\nrho_step = 0.5\n"),
      "thermo", dir.string());
  CHECK(res.pass);
  const std::string csv = slurp(dir / "thermo.csv");
  CHECK(csv.find("rho,phi,D,S,chi,sigma2") == 0);
  CHECK(csv.find("\n1,1,1,1,1,1\n") != std::string::npos);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("sample experiment: canonical totals are exact") {
  const auto dir = fresh_dir("sample");
  const auto res = run_experiment(
      Config::from_string("rate = linear\nn_sites = 32\nn_total = 40\nseed = 9\n"),
      "sample", dir.string());
  CHECK(res.metrics.at("total") == 40.0);
}

TEST_CASE("replica count of zero is a validation error") {
  CHECK_THROWS_AS(
      run_experiment(Config::from_string("n_sites = 16\nrho = 1\nreplicas = 0\n"),
                     "fluct-eq", fresh_dir("badreplicas").string()),
      std::invalid_argument);
}

TEST_CASE("unsorted times are a validation error") {
  CHECK_THROWS_AS(
      run_experiment(
          Config::from_string("n_sites = 16\nrho = 1\nreplicas = 2\ntimes = 0.2, 0.1\n"),
          "fluct-eq", fresh_dir("badtimes").string()),
      std::invalid_argument);
}

TEST_CASE("sinusoid nonnegativity is enforced") {
  CHECK_THROWS_AS(
      run_experiment(Config::from_string("grid_m = 64\nrho0 = sinusoid\nrho0_a = 1\n"
                                         "rho0_b = 1.5\n"),
                     "hydro", fresh_dir("badprofile").string()),
      std::invalid_argument);
}

TEST_CASE("hydro experiment conserves the mean") {
  const auto dir = fresh_dir("hydro");
  const auto res = run_experiment(
      Config::from_string("rate = linear\ngrid_m = 64\nrho0 = sinusoid\nrho0_a = 1\n"
                          "rho0_b = 0.2\ntimes = 0.05\n"),
      "hydro", dir.string());
  CHECK(res.pass);
  CHECK(res.metrics.at("max_mean_drift") <= 1e-10);
  CHECK(res.metrics.at("clip_events") == 0.0);
}

TEST_CASE("same config and seed give byte-identical CSVs at any thread count") {
  const std::string cfg =
      "rate = linear\nn_sites = 32\nrho = 1\ntimes = 0.02\nz_list = 1, 2\n"
      "replicas = 12\nseed = 31337\n";
  const auto dir1 = fresh_dir("det1");
  const auto dir2 = fresh_dir("det2");
  run_experiment(Config::from_string(cfg), "fluct-eq", dir1.string(), 1);
  run_experiment(Config::from_string(cfg), "fluct-eq", dir2.string(), 2);
  CHECK(slurp(dir1 / "fluct_eq.csv") == slurp(dir2 / "fluct_eq.csv"));
}

TEST_CASE("simulate stationarity smoke run") {
  const auto dir = fresh_dir("simulate");
  const auto res = run_experiment(
      Config::from_string("rate = linear\nn_sites = 64\nrho = 1\ntimes = 0.05\n"
                          "replicas = 40\nbin = 16\nseed = 5\n"),
      "simulate", dir.string());
  CHECK(res.metrics.count("chi2_p") == 1);
  CHECK(res.metrics.at("chi2_p") > 0.001);
  CHECK(fs::exists(dir / "density.csv"));
  CHECK(fs::exists(dir / "stationarity.csv"));
}

TEST_CASE("clt-check runs on a small ladder") {
  const auto dir = fresh_dir("clt");
  const auto res = run_experiment(
      Config::from_string("rate = linear\nrho = 1\nn_list = 8, 16\nclt_err_max = 1\n"
                          "clt_gain_min = 1\n"),
      "clt-check", dir.string());
  CHECK(res.pass);
  CHECK(fs::exists(dir / "clt_check.csv"));
}

TEST_CASE("unknown experiment name") {
  const auto dir = fresh_dir("unknown");
  CHECK_THROWS_AS(run_experiment(Config(), "nosuch", dir.string()),
                  std::invalid_argument);
}
