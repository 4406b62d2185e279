#include "zrp/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "zrp/fields.hpp"
#include "zrp/kmc.hpp"
#include "zrp/measures.hpp"
#include "zrp/pde.hpp"
#include "zrp/stats.hpp"
#include "zrp/thermo.hpp"

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace zrp {

const char* const kVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::string& path, const std::string& header) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw std::runtime_error("cannot open output file: " + path);
    std::fputs(header.c_str(), f_);
    std::fputc('\n', f_);
  }
  ~Csv() {
    if (f_) std::fclose(f_);
  }
  Csv(const Csv&) = delete;
  Csv& operator=(const Csv&) = delete;

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) std::fputc(',', f_);
      std::fputs(cells[i].c_str(), f_);
    }
    std::fputc('\n', f_);
  }

 private:
  std::FILE* f_ = nullptr;
};

void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int use = static_cast<int>(std::min<long>(threads, n));
  pool.reserve(static_cast<std::size_t>(use));
  for (int t = 0; t < use; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void write_manifest(const std::string& out_dir, const std::string& experiment,
                    const Config& cfg, int threads, double wall_s,
                    const ExperimentResult& result) {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["version"] = kVersion;
  j["threads"] = threads;
  j["wall_time_s"] = wall_s;
  j["pass"] = result.pass;
  j["config"] = cfg.effective();
  j["metrics"] = result.metrics;
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << j.dump(2) << "\n";
}

std::vector<double> sorted_times(const Config& cfg, const std::vector<double>& def) {
  auto times = cfg.get_doubles("times", def);
  if (times.empty()) throw std::invalid_argument("times: must list at least one time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw std::invalid_argument("times: must be >= 0");
    if (i > 0 && times[i] <= times[i - 1])
      throw std::invalid_argument("times: must be sorted strictly ascending");
  }
  return times;
}

struct ProfileSpec {
  std::string kind = "constant";
  double a = 1.0, b = 0.0;
  int z = 1;
};

ProfileSpec profile_from_config(const Config& cfg, double default_a) {
  ProfileSpec p;
  p.kind = cfg.get_str("rho0", "constant");
  p.a = cfg.get_double("rho0_a", default_a);
  p.b = cfg.get_double("rho0_b", 0.0);
  p.z = static_cast<int>(cfg.get_long("rho0_z", 1));
  if (p.kind == "sinusoid" && !(std::abs(p.b) < p.a))
    throw std::invalid_argument("rho0_b: sinusoid requires |b| < a for nonnegativity");
  if (p.a < 0.0 || (p.kind == "step" && p.b < 0.0))
    throw std::invalid_argument("rho0_a/rho0_b: must be >= 0");
  return p;
}

long require_replicas(const Config& cfg, long def) {
  const long r = cfg.get_long("replicas", def);
  if (r < 1) throw std::invalid_argument("replicas: must be >= 1");
  return r;
}

// ---------------------------------------------------------------------------
// thermo

ExperimentResult run_thermo(const Config& cfg, const std::string& out_dir) {
  const ThermoTable thermo(rate_from_config(cfg));
  const double rho_min = cfg.get_double("rho_min", 0.1);
  const double rho_max = cfg.get_double("rho_max", 5.0);
  const double rho_step = cfg.get_double("rho_step", 0.1);
  if (!(rho_step > 0.0) || !(rho_max >= rho_min) || !(rho_min >= 0.0))
    throw std::invalid_argument("rho_min/rho_max/rho_step: bad thermo grid");

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "thermo.csv").string(), "rho,phi,D,S,chi,sigma2");
  double max_identity_err = 0.0;
  const double tol = cfg.get_double("identity_tol", 1e-8);
  for (double rho = rho_min; rho <= rho_max + 1e-12; rho += rho_step) {
    const auto tc = thermo.transport_coefficients(rho);
    const double phi = rho > 0.0 ? thermo.fugacity_of_density(rho) : 0.0;
    csv.row({fmt(rho), fmt(phi), fmt(tc.D), fmt(tc.S), fmt(tc.chi), fmt(tc.sigma2)});
    const double err = std::abs(tc.S * rho - tc.chi * tc.D) /
                       std::max(1.0, std::abs(tc.S * rho));
    max_identity_err = std::max(max_identity_err, err);
  }
  res.metrics["max_identity_err"] = max_identity_err;
  res.pass = max_identity_err <= tol;
  res.summary = "transport identity max rel err " + fmt(max_identity_err);
  return res;
}

// ---------------------------------------------------------------------------
// sample

ExperimentResult run_sample(const Config& cfg, const std::string& out_dir) {
  const ThermoTable thermo(rate_from_config(cfg));
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 1) throw std::invalid_argument("n_sites: must be >= 1");
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  RandomStream rng = RandomStream::for_replica(seed, 0, 2);

  Configuration config;
  const long n_total = cfg.get_long("n_total", -1);
  if (n_total >= 0) {
    config = sample_canonical(thermo, n, n_total, rng);
  } else {
    config = sample_grand_canonical(thermo, n, cfg.get_double("rho", 1.0), rng);
  }

  const long k = cfg.get_long("colours", 1);
  ExperimentResult res;
  if (k > 1) {
    std::vector<double> p = cfg.get_doubles("p_vec", {});
    if (p.empty()) p.assign(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    RandomStream label = RandomStream::for_replica(seed, 0, 1);
    const auto cc = colour_split(config, p, label);
    std::string header = "site,count";
    for (long c = 0; c < k; ++c) header += ",count_" + std::to_string(c);
    Csv csv((fs::path(out_dir) / "sample.csv").string(), header);
    for (int x = 0; x < n; ++x) {
      std::vector<std::string> row{std::to_string(x),
                                   std::to_string(config.counts[static_cast<std::size_t>(x)])};
      for (long c = 0; c < k; ++c)
        row.push_back(std::to_string(
            cc.counts_i[static_cast<std::size_t>(c)][static_cast<std::size_t>(x)]));
      csv.row(row);
    }
  } else {
    Csv csv((fs::path(out_dir) / "sample.csv").string(), "site,count");
    for (int x = 0; x < n; ++x)
      csv.row({std::to_string(x), std::to_string(config.counts[static_cast<std::size_t>(x)])});
  }
  res.metrics["total"] = static_cast<double>(config.total);
  res.summary = "sampled " + std::to_string(config.total) + " particles on " +
                std::to_string(n) + " sites";
  return res;
}

// ---------------------------------------------------------------------------
// simulate: dynamics + stationarity check (constant profile) or hydrodynamic
// comparison (non-constant profile)

ExperimentResult run_simulate(const Config& cfg, const std::string& out_dir, int threads) {
  const RateFunction rate = rate_from_config(cfg);
  const ThermoTable thermo(rate);
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 2) throw std::invalid_argument("n_sites: must be >= 2");
  const auto times = sorted_times(cfg, {cfg.get_double("t_macro", 0.1)});
  const long replicas = require_replicas(cfg, 1);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const int bin = static_cast<int>(cfg.get_long("bin", 16));
  if (bin < 1 || n % bin != 0) throw std::invalid_argument("bin: must divide n_sites");
  const bool log_events = cfg.get_bool("log_events", false);

  const ProfileSpec prof = profile_from_config(cfg, cfg.get_double("rho", 1.0));
  const std::vector<double> rho0 = make_profile(prof.kind, n, prof.a, prof.b, prof.z);
  const bool constant_profile = prof.kind == "constant";

  // Per-site marginals of the initial product measure.
  std::vector<SiteMarginal> marginals;
  marginals.reserve(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x)
    marginals.emplace_back(thermo, thermo.fugacity_of_density(rho0[static_cast<std::size_t>(x)]));

  const int n_bins = n / bin;
  const std::size_t n_times = times.size();
  // Replica-slot storage: binned profiles and occupancy histograms.
  const int hist_max = 64;
  std::vector<std::vector<double>> profiles(replicas);  // [rep][time*n_bins+b]
  std::vector<std::vector<std::int64_t>> hists(replicas);

  std::unique_ptr<Csv> events;
  std::mutex events_mu;
  if (log_events && replicas == 1) {
    events = std::make_unique<Csv>((fs::path(out_dir) / "events.csv").string(),
                                   "t_micro,site_from,site_to,colour,particle_id");
  }

  parallel_for(replicas, threads, [&](long r) {
    RandomStream init = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 2);
    Configuration c;
    c.counts.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
      c.counts[static_cast<std::size_t>(x)] =
          marginals[static_cast<std::size_t>(x)].sample(init);
    c.recompute_total();
    SimState sim(rate, std::move(c),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 1));
    auto& prof_slot = profiles[static_cast<std::size_t>(r)];
    prof_slot.assign(n_times * static_cast<std::size_t>(n_bins), 0.0);
    for (std::size_t ti = 0; ti < n_times; ++ti) {
      if (events) {
        // Event-logged run: single replica, manual stepping.
        const double target = times[ti] * static_cast<double>(n) * n;
        while (sim.t_micro() < target) {
          const double before = sim.t_micro();
          Event ev = sim.step();
          if (!ev.occurred) {
            if (sim.t_micro() == before) break;  // frozen
            continue;
          }
          if (sim.t_micro() > target) break;  // conservative; log only inside
          std::lock_guard<std::mutex> lock(events_mu);
          events->row({fmt(sim.t_micro()), std::to_string(ev.site_from),
                       std::to_string(ev.site_to), std::to_string(ev.colour),
                       std::to_string(ev.particle_id)});
        }
      } else {
        sim.run_until_macro(times[ti]);
      }
      const auto snap = sim.snapshot_density(bin);
      for (int b = 0; b < n_bins; ++b)
        prof_slot[ti * static_cast<std::size_t>(n_bins) + static_cast<std::size_t>(b)] =
            snap.comps[0][static_cast<std::size_t>(b)];
    }
    auto& hist = hists[static_cast<std::size_t>(r)];
    hist.assign(static_cast<std::size_t>(hist_max) + 1, 0);
    for (auto cnt : sim.counts())
      ++hist[static_cast<std::size_t>(std::min<std::int32_t>(cnt, hist_max))];
  });

  ExperimentResult res;

  // Replica-averaged binned profiles.
  {
    Csv csv((fs::path(out_dir) / "density.csv").string(), "time,bin,x_mid,mean_density");
    for (std::size_t ti = 0; ti < n_times; ++ti) {
      for (int b = 0; b < n_bins; ++b) {
        double acc = 0.0;
        for (long r = 0; r < replicas; ++r)
          acc += profiles[static_cast<std::size_t>(r)]
                         [ti * static_cast<std::size_t>(n_bins) + static_cast<std::size_t>(b)];
        acc /= static_cast<double>(replicas);
        const double x_mid = (static_cast<double>(b) + 0.5) * bin / n;
        csv.row({fmt(times[ti]), std::to_string(b), fmt(x_mid), fmt(acc)});
      }
    }
  }

  if (constant_profile) {
    // Pooled occupancy histogram at the final time against the marginal.
    std::vector<std::int64_t> pooled(static_cast<std::size_t>(hist_max) + 1, 0);
    for (long r = 0; r < replicas; ++r)
      for (std::size_t k = 0; k < pooled.size(); ++k)
        pooled[k] += hists[static_cast<std::size_t>(r)][k];
    std::vector<double> expected(pooled.size(), 0.0);
    const SiteMarginal& m0 = marginals[0];
    double tail = 1.0;
    for (int k = 0; k < hist_max; ++k) {
      expected[static_cast<std::size_t>(k)] = m0.pmf(k);
      tail -= m0.pmf(k);
    }
    expected[static_cast<std::size_t>(hist_max)] = std::max(tail, 0.0);
    const double p = chi_square_gof(pooled, expected);
    Csv csv((fs::path(out_dir) / "stationarity.csv").string(), "k,observed,expected_pmf");
    for (std::size_t k = 0; k < pooled.size(); ++k)
      csv.row({std::to_string(k), std::to_string(pooled[k]), fmt(expected[k])});
    res.metrics["chi2_p"] = p;
    const double p_min = cfg.get_double("p_min", 0.001);
    res.pass = p > p_min;
    res.summary = "stationarity chi^2 p = " + fmt(p);
  } else {
    // Hydrodynamic comparison: binned empirical mean vs the binned PDE
    // solution (and the exact heat solution for the linear family).
    const DensityProfile pde0 = DensityProfile::scalar(rho0, 0.0);
    double max_l1_pde = 0.0, max_l1_heat = 0.0;
    Csv csv((fs::path(out_dir) / "hydro_compare.csv").string(), "time,l1_pde,l1_heat");
    for (std::size_t ti = 0; ti < n_times; ++ti) {
      const auto sol = solve_hydro(thermo, pde0, times[ti]);
      std::vector<double> pde_binned(static_cast<std::size_t>(n_bins), 0.0);
      for (int b = 0; b < n_bins; ++b) {
        double acc = 0.0;
        for (int j = 0; j < bin; ++j) acc += sol.comps[0][static_cast<std::size_t>(b * bin + j)];
        pde_binned[static_cast<std::size_t>(b)] = acc / bin;
      }
      double l1 = 0.0, l1_heat = 0.0;
      for (int b = 0; b < n_bins; ++b) {
        double acc = 0.0;
        for (long r = 0; r < replicas; ++r)
          acc += profiles[static_cast<std::size_t>(r)]
                         [ti * static_cast<std::size_t>(n_bins) + static_cast<std::size_t>(b)];
        acc /= static_cast<double>(replicas);
        l1 += std::abs(acc - pde_binned[static_cast<std::size_t>(b)]);
        if (rate.family() == RateFamily::linear && prof.kind == "sinusoid") {
          // phi(rho) = theta rho: modes decay exactly at rate theta (2 pi z)^2 / 2.
          double heat_acc = 0.0;
          const double decay =
              std::exp(-0.5 * rate.theta() * std::pow(2.0 * M_PI * prof.z, 2) * times[ti]);
          for (int j = 0; j < bin; ++j) {
            const double x = static_cast<double>(b * bin + j) / n;
            heat_acc += prof.a + prof.b * decay * std::sin(2.0 * M_PI * prof.z * x);
          }
          l1_heat += std::abs(acc - heat_acc / bin);
        }
      }
      l1 /= n_bins;
      l1_heat /= n_bins;
      max_l1_pde = std::max(max_l1_pde, l1);
      max_l1_heat = std::max(max_l1_heat, l1_heat);
      csv.row({fmt(times[ti]), fmt(l1), fmt(l1_heat)});
    }
    res.metrics["max_l1_pde"] = max_l1_pde;
    res.metrics["max_l1_heat"] = max_l1_heat;
    const double l1_max = cfg.get_double("l1_max", 0.02);
    res.pass = max_l1_pde <= l1_max &&
               (rate.family() != RateFamily::linear || max_l1_heat <= l1_max);
    res.summary = "hydrodynamic L1 error " + fmt(max_l1_pde);
  }
  return res;
}

// ---------------------------------------------------------------------------
// hydro

ExperimentResult run_hydro(const Config& cfg, const std::string& out_dir) {
  const ThermoTable thermo(rate_from_config(cfg));
  const int m = static_cast<int>(cfg.get_long("grid_m", 256));
  if (m < 4) throw std::invalid_argument("grid_m: must be >= 4");
  const auto times = sorted_times(cfg, {0.1});
  const ProfileSpec prof = profile_from_config(cfg, cfg.get_double("rho", 1.0));

  DensityProfile state = DensityProfile::scalar(make_profile(prof.kind, m, prof.a, prof.b, prof.z), 0.0);
  const double mean0 = state.mean(0);

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "hydro.csv").string(), "time,x,rho");
  double prev_t = 0.0;
  double max_drift = 0.0;
  long clip_events = 0;
  for (double t : times) {
    auto hr = solve_hydro_path(thermo, state, t - prev_t, 2);
    state = hr.final;
    clip_events += hr.clip_events;
    prev_t = t;
    for (int j = 0; j < m; ++j)
      csv.row({fmt(t), fmt(static_cast<double>(j) / m), fmt(state.comps[0][static_cast<std::size_t>(j)])});
    max_drift = std::max(max_drift, std::abs(state.mean(0) - mean0));
  }
  res.metrics["max_mean_drift"] = max_drift;
  res.metrics["clip_events"] = static_cast<double>(clip_events);
  res.pass = max_drift <= 1e-10 * std::max(1.0, times.back()) && clip_events == 0;
  res.summary = "mean drift " + fmt(max_drift);
  return res;
}

// ---------------------------------------------------------------------------
// fluctuation experiments

struct FluctCells {
  std::vector<double> times;
  std::vector<int> z_list;
  int cell(std::size_t ti, std::size_t zi) const {
    return static_cast<int>(ti * z_list.size() + zi);
  }
  int count() const { return static_cast<int>(times.size() * z_list.size()); }
};

ExperimentResult run_fluct_eq(const Config& cfg, const std::string& out_dir, int threads) {
  const RateFunction rate = rate_from_config(cfg);
  const ThermoTable thermo(rate);
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 4) throw std::invalid_argument("n_sites: must be >= 4");
  const double rho = cfg.get_double("rho", 1.0);
  if (!(rho > 0.0)) throw std::invalid_argument("rho: must be > 0");
  FluctCells cells{sorted_times(cfg, {0.2}), cfg.get_ints("z_list", {1, 2, 3})};
  for (int z : cells.z_list)
    if (z == 0 || std::abs(z) >= n / 2)
      throw std::invalid_argument("z_list: modes must satisfy 0 < |z| < n_sites/2");
  const long replicas = require_replicas(cfg, 2000);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const double k_sigma = cfg.get_double("k_sigma", 3.0);

  const double phi = thermo.fugacity_of_density(rho);
  const SiteMarginal marginal(thermo, phi);
  const double chi = thermo.transport_coefficients(rho).chi;

  std::vector<std::vector<double>> e_z;
  for (int z : cells.z_list) e_z.push_back(basis_e(z, n).samples);
  const std::vector<double> centering(static_cast<std::size_t>(n), rho);

  ReplicaEnsemble ens(cells.count(), replicas);
  parallel_for(replicas, threads, [&](long r) {
    RandomStream init = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 2);
    Configuration c;
    c.counts.resize(static_cast<std::size_t>(n));
    for (auto& v : c.counts) v = marginal.sample(init);
    c.recompute_total();
    SimState sim(rate, std::move(c),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 1));
    for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
      sim.run_until_macro(cells.times[ti]);
      for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi)
        ens.set(r, cells.cell(ti, zi),
                fluctuation_field(sim.counts(), centering, e_z[zi]));
    }
  });

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "fluct_eq.csv").string(),
          "time,z,mean,se_mean,var,se_var,predicted,z_score,pass");
  double max_abs_z = 0.0;
  for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
    for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi) {
      const Moments m = ens.moments(cells.cell(ti, zi));
      const Verdict v = compare_to_prediction(m.var, m.se_var, chi, k_sigma);
      max_abs_z = std::max(max_abs_z, std::abs(v.z_score));
      res.pass = res.pass && v.pass;
      csv.row({fmt(cells.times[ti]), std::to_string(cells.z_list[zi]), fmt(m.mean),
               fmt(m.se_mean), fmt(m.var), fmt(m.se_var), fmt(chi), fmt(v.z_score),
               v.pass ? "1" : "0"});
    }
  }
  res.metrics["max_abs_z"] = max_abs_z;
  res.metrics["predicted"] = chi;
  res.summary = "equilibrium field variance vs chi, max |z| = " + fmt(max_abs_z);
  return res;
}

ExperimentResult run_fluct_neq(const Config& cfg, const std::string& out_dir, int threads) {
  const RateFunction rate = rate_from_config(cfg);
  const ThermoTable thermo(rate);
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 4) throw std::invalid_argument("n_sites: must be >= 4");
  FluctCells cells{sorted_times(cfg, {0.05, 0.1}), cfg.get_ints("z_list", {1})};
  const long replicas = require_replicas(cfg, 2000);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const double k_sigma = cfg.get_double("k_sigma", 3.0);
  const ProfileSpec prof = profile_from_config(cfg, 1.0);
  if (prof.kind == "constant")
    throw std::invalid_argument("rho0: fluct-neq expects a non-constant profile");

  const std::vector<double> rho0 = make_profile(prof.kind, n, prof.a, prof.b, prof.z);
  const double t_max = cells.times.back();
  const auto hydro = solve_hydro_path(thermo, DensityProfile::scalar(rho0, 0.0), t_max,
                                      static_cast<int>(cfg.get_long("path_frames", 513)));
  const auto phi_interp = thermo.fugacity_interpolant(
      1.25 * *std::max_element(rho0.begin(), rho0.end()) + 1.0);

  // Predictions: Var<Y_0, P^D(t,0) f> + OU variance accumulated over [0,t].
  std::vector<double> predicted(static_cast<std::size_t>(cells.count()), 0.0);
  for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
    for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi) {
      const TestFunction f = basis_e(cells.z_list[zi], n);
      const double t = cells.times[ti];
      const TestFunction g = semigroup_apply(thermo, f, 0.0, t, SemigroupKind::D, hydro.path);
      double var0 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double r = rho0[static_cast<std::size_t>(j)];
        const double sigma2 = r > 0.0 ? phi_interp.phi(r) / phi_interp.dphi(r) : 0.0;
        var0 += g.samples[static_cast<std::size_t>(j)] * g.samples[static_cast<std::size_t>(j)] *
                sigma2;
      }
      var0 /= n;
      predicted[static_cast<std::size_t>(cells.cell(ti, zi))] =
          var0 + ou_variance(thermo, f, 0.0, t, NoiseKind::colour_blind, hydro.path, 0,
                             static_cast<int>(cfg.get_long("quad_nodes", 129)));
    }
  }

  // Per-site marginals of the local-equilibrium start.
  std::vector<SiteMarginal> marginals;
  marginals.reserve(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x)
    marginals.emplace_back(thermo, thermo.fugacity_of_density(rho0[static_cast<std::size_t>(x)]));

  std::vector<std::vector<double>> e_z;
  for (int z : cells.z_list) e_z.push_back(basis_e(z, n).samples);
  std::vector<std::vector<double>> centerings(cells.times.size());
  for (std::size_t ti = 0; ti < cells.times.size(); ++ti)
    hydro.path.comp_at(cells.times[ti], 0, centerings[ti]);

  ReplicaEnsemble ens(cells.count(), replicas);
  parallel_for(replicas, threads, [&](long r) {
    RandomStream init = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 2);
    Configuration c;
    c.counts.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
      c.counts[static_cast<std::size_t>(x)] =
          marginals[static_cast<std::size_t>(x)].sample(init);
    c.recompute_total();
    SimState sim(rate, std::move(c),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 1));
    for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
      sim.run_until_macro(cells.times[ti]);
      for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi)
        ens.set(r, cells.cell(ti, zi),
                fluctuation_field(sim.counts(), centerings[ti], e_z[zi]));
    }
  });

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "fluct_neq.csv").string(),
          "time,z,mean,se_mean,var,se_var,predicted,z_score,pass");
  double max_abs_z = 0.0;
  for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
    for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi) {
      const Moments m = ens.moments(cells.cell(ti, zi));
      const double pred = predicted[static_cast<std::size_t>(cells.cell(ti, zi))];
      const Verdict v = compare_to_prediction(m.var, m.se_var, pred, k_sigma);
      max_abs_z = std::max(max_abs_z, std::abs(v.z_score));
      res.pass = res.pass && v.pass;
      csv.row({fmt(cells.times[ti]), std::to_string(cells.z_list[zi]), fmt(m.mean),
               fmt(m.se_mean), fmt(m.var), fmt(m.se_var), fmt(pred), fmt(v.z_score),
               v.pass ? "1" : "0"});
    }
  }
  res.metrics["max_abs_z"] = max_abs_z;
  res.summary = "nonequilibrium OU variance, max |z| = " + fmt(max_abs_z);
  return res;
}

ExperimentResult run_colour_fluct(const Config& cfg, const std::string& out_dir, int threads) {
  const RateFunction rate = rate_from_config(cfg);
  const ThermoTable thermo(rate);
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 4) throw std::invalid_argument("n_sites: must be >= 4");
  const std::vector<double> rho_vec = cfg.get_doubles("rho_vec", {0.5, 0.5});
  if (rho_vec.size() < 2) throw std::invalid_argument("rho_vec: need >= 2 colours");
  double rho = 0.0;
  for (double v : rho_vec) {
    if (!(v > 0.0)) throw std::invalid_argument("rho_vec: colour densities must be > 0");
    rho += v;
  }
  FluctCells cells{sorted_times(cfg, {0.1}), cfg.get_ints("z_list", {1})};
  const long replicas = require_replicas(cfg, 2000);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const double k_sigma = cfg.get_double("k_sigma", 3.0);

  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(rho));
  std::vector<double> p(rho_vec.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rho_vec[i] / rho;
  // Stationary deviation-field variance rho^1 (1 - rho^1/rho).
  const double predicted = rho_vec[0] * (1.0 - rho_vec[0] / rho);
  const double share = rho_vec[0] / rho;

  std::vector<std::vector<double>> e_z;
  for (int z : cells.z_list) e_z.push_back(basis_e(z, n).samples);
  const std::vector<double> centering_blind(static_cast<std::size_t>(n), rho);
  const std::vector<double> centering_colour(static_cast<std::size_t>(n), rho_vec[0]);

  ReplicaEnsemble ens(cells.count(), replicas);
  parallel_for(replicas, threads, [&](long r) {
    RandomStream init = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 2);
    RandomStream split_rng = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 3);
    Configuration c;
    c.counts.resize(static_cast<std::size_t>(n));
    for (auto& v : c.counts) v = marginal.sample(init);
    c.recompute_total();
    ColourConfiguration cc = colour_split(c, p, split_rng);
    SimState sim(rate, std::move(cc),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 1));
    for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
      sim.run_until_macro(cells.times[ti]);
      for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi) {
        const double y1 = fluctuation_field(sim.colour_counts(0), centering_colour, e_z[zi]);
        const double y = fluctuation_field(sim.counts(), centering_blind, e_z[zi]);
        ens.set(r, cells.cell(ti, zi), y1 - share * y);
      }
    }
  });

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "colour_fluct.csv").string(),
          "time,z,mean,se_mean,var,se_var,predicted,z_score,pass");
  double max_abs_z = 0.0;
  for (std::size_t ti = 0; ti < cells.times.size(); ++ti) {
    for (std::size_t zi = 0; zi < cells.z_list.size(); ++zi) {
      const Moments m = ens.moments(cells.cell(ti, zi));
      const Verdict v = compare_to_prediction(m.var, m.se_var, predicted, k_sigma);
      max_abs_z = std::max(max_abs_z, std::abs(v.z_score));
      res.pass = res.pass && v.pass;
      csv.row({fmt(cells.times[ti]), std::to_string(cells.z_list[zi]), fmt(m.mean),
               fmt(m.se_mean), fmt(m.var), fmt(m.se_var), fmt(predicted), fmt(v.z_score),
               v.pass ? "1" : "0"});
    }
  }
  res.metrics["max_abs_z"] = max_abs_z;
  res.metrics["predicted"] = predicted;
  res.summary = "deviation field variance, max |z| = " + fmt(max_abs_z);
  return res;
}

// ---------------------------------------------------------------------------
// tagged

ExperimentResult run_tagged(const Config& cfg, const std::string& out_dir, int threads) {
  const RateFunction rate = rate_from_config(cfg);
  const ThermoTable thermo(rate);
  const int n = static_cast<int>(cfg.get_long("n_sites", 0));
  if (n < 4) throw std::invalid_argument("n_sites: must be >= 4");
  const double rho = cfg.get_double("rho", 1.0);
  if (!(rho > 0.0)) throw std::invalid_argument("rho: must be > 0");
  const auto times = sorted_times(cfg, {0.5});
  const long want_tags = require_replicas(cfg, 5000);
  const long tags_per_run =
      std::max<long>(1, cfg.get_long("tags_per_run",
                                     std::min<long>(static_cast<long>(n * rho), 256)));
  const long runs = (want_tags + tags_per_run - 1) / tags_per_run;
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const double rel_tol = cfg.get_double("rel_tol", 0.05);

  const double big_s = thermo.transport_coefficients(rho).S;
  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(rho));

  // displacement samples per (time, run): slot layout keeps the reduce
  // deterministic.
  std::vector<std::vector<std::vector<double>>> samples(
      times.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(runs)));

  parallel_for(runs, threads, [&](long r) {
    RandomStream init = RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 2);
    Configuration c;
    c.counts.resize(static_cast<std::size_t>(n));
    for (auto& v : c.counts) v = marginal.sample(init);
    c.recompute_total();
    const long n_particles = c.total;
    SimState sim(rate, std::move(c),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(seed, static_cast<std::uint64_t>(r), 1),
                 std::vector<int>{});
    const long tags = std::min(tags_per_run, n_particles);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      sim.run_until_macro(times[ti]);
      auto& slot = samples[ti][static_cast<std::size_t>(r)];
      slot.resize(static_cast<std::size_t>(tags));
      for (long id = 0; id < tags; ++id)
        slot[static_cast<std::size_t>(id)] = sim.tagged_displacement(id);
    }
  });

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "tagged.csv").string(),
          "time,n_tags,var,se_var,predicted,ratio,pass");
  double worst_ratio_err = 0.0;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    // Pooled variance with a leave-one-run-out jackknife (tags within a run
    // are weakly dependent; batching over runs absorbs that).
    std::vector<double> all;
    std::vector<double> run_sum(static_cast<std::size_t>(runs), 0.0);
    std::vector<double> run_sum2(static_cast<std::size_t>(runs), 0.0);
    std::vector<long> run_n(static_cast<std::size_t>(runs), 0);
    for (long r = 0; r < runs; ++r) {
      for (double d : samples[ti][static_cast<std::size_t>(r)]) {
        all.push_back(d);
        run_sum[static_cast<std::size_t>(r)] += d;
        run_sum2[static_cast<std::size_t>(r)] += d * d;
        ++run_n[static_cast<std::size_t>(r)];
      }
    }
    const double n_all = static_cast<double>(all.size());
    double s1 = 0.0, s2 = 0.0;
    for (double d : all) {
      s1 += d;
      s2 += d * d;
    }
    const double var = (s2 - s1 * s1 / n_all) / (n_all - 1.0);
    // Jackknife over runs.
    double jk_mean = 0.0;
    std::vector<double> jk(static_cast<std::size_t>(runs), 0.0);
    for (long r = 0; r < runs; ++r) {
      const double s1p = s1 - run_sum[static_cast<std::size_t>(r)];
      const double s2p = s2 - run_sum2[static_cast<std::size_t>(r)];
      const double np = n_all - static_cast<double>(run_n[static_cast<std::size_t>(r)]);
      jk[static_cast<std::size_t>(r)] = (s2p - s1p * s1p / np) / (np - 1.0);
      jk_mean += jk[static_cast<std::size_t>(r)];
    }
    jk_mean /= static_cast<double>(runs);
    double jk_dev = 0.0;
    for (double v : jk) jk_dev += (v - jk_mean) * (v - jk_mean);
    const double se_var =
        std::sqrt(static_cast<double>(runs - 1) / static_cast<double>(runs) * jk_dev);

    const double predicted = big_s * times[ti];
    const double ratio = var / predicted;
    const bool pass = std::abs(ratio - 1.0) <= rel_tol;
    res.pass = res.pass && pass;
    worst_ratio_err = std::max(worst_ratio_err, std::abs(ratio - 1.0));
    csv.row({fmt(times[ti]), std::to_string(static_cast<long>(n_all)), fmt(var), fmt(se_var),
             fmt(predicted), fmt(ratio), pass ? "1" : "0"});
  }
  res.metrics["worst_ratio_err"] = worst_ratio_err;
  res.metrics["self_diffusion"] = big_s;
  res.summary = "tagged MSD vs S(rho) t, worst rel err " + fmt(worst_ratio_err);
  return res;
}

// ---------------------------------------------------------------------------
// clt-check

ExperimentResult run_clt_check(const Config& cfg, const std::string& out_dir) {
  const ThermoTable thermo(rate_from_config(cfg));
  const double rho = cfg.get_double("rho", 1.0);
  if (!(rho > 0.0)) throw std::invalid_argument("rho: must be > 0");
  const auto n_list = cfg.get_ints("n_list", {16, 64, 256});
  const double phi = thermo.fugacity_of_density(rho);

  ExperimentResult res;
  Csv csv((fs::path(out_dir) / "clt_check.csv").string(),
          "n_sites,sigma2,max_err_j2,max_err_j3,gain");
  std::vector<double> errs2;
  double last_gain = 0.0;
  for (int n : n_list) {
    if (n < 2) throw std::invalid_argument("n_list: entries must be >= 2");
    const auto table = total_pmf_table(thermo, n, phi);
    const EdgeworthExpansion e2(thermo, rho, 2);
    const EdgeworthExpansion e3(thermo, rho, 3);
    const double sigma = e2.sigma;
    const double scale = std::sqrt(static_cast<double>(n)) * sigma;
    double max2 = 0.0, max3 = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double z = (static_cast<double>(i) - n * rho) / scale;
      const double ex = table[i] * scale;  // sqrt(N sigma^2) * pmf
      max2 = std::max(max2, std::abs(ex - e2.series(z, n)));
      max3 = std::max(max3, std::abs(ex - e3.series(z, n)));
    }
    const double gain = max3 > 0.0 ? max2 / max3 : 0.0;
    errs2.push_back(max2);
    last_gain = gain;
    csv.row({std::to_string(n), fmt(sigma * sigma), fmt(max2), fmt(max3), fmt(gain)});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errs2.size(); ++i) decreasing = decreasing && errs2[i] < errs2[i - 1];
  const double err_max = cfg.get_double("clt_err_max", 0.02);
  const double gain_min = cfg.get_double("clt_gain_min", 2.0);
  res.metrics["err_j2_last"] = errs2.back();
  res.metrics["gain_last"] = last_gain;
  res.metrics["decreasing"] = decreasing ? 1.0 : 0.0;
  res.pass = decreasing && errs2.back() <= err_max && last_gain >= gain_min;
  res.summary = "local CLT err " + fmt(errs2.back()) + ", g1 gain " + fmt(last_gain);
  return res;
}

}  // namespace

int effective_threads(int requested) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  if (const char* env = std::getenv("ZRP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) t = std::min(t, cap);
  }
  return t;
}

ExperimentResult run_experiment(Config cfg, const std::string& experiment,
                                const std::string& out_dir, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.select_section(experiment);
  fs::create_directories(out_dir);
  const int use_threads = effective_threads(threads);

  ExperimentResult res;
  if (experiment == "thermo") res = run_thermo(cfg, out_dir);
  else if (experiment == "sample") res = run_sample(cfg, out_dir);
  else if (experiment == "simulate") res = run_simulate(cfg, out_dir, use_threads);
  else if (experiment == "hydro") res = run_hydro(cfg, out_dir);
  else if (experiment == "fluct-eq") res = run_fluct_eq(cfg, out_dir, use_threads);
  else if (experiment == "fluct-neq") res = run_fluct_neq(cfg, out_dir, use_threads);
  else if (experiment == "colour-fluct") res = run_colour_fluct(cfg, out_dir, use_threads);
  else if (experiment == "tagged") res = run_tagged(cfg, out_dir, use_threads);
  else if (experiment == "clt-check") res = run_clt_check(cfg, out_dir);
  else throw std::invalid_argument("unknown experiment: " + experiment);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out_dir, experiment, cfg, use_threads, wall, res);
  return res;
}

}  // namespace zrp
