#pragma once

#include <cstdint>
#include <vector>

#include "zrp/rng.hpp"
#include "zrp/thermo.hpp"

namespace zrp {

// Occupancy counts per site on the discrete circle.
struct Configuration {
  std::vector<std::int32_t> counts;
  std::int64_t total = 0;

  int n_sites() const { return static_cast<int>(counts.size()); }
  void recompute_total() {
    total = 0;
    for (auto c : counts) total += c;
  }
};

// Per-colour occupancy vectors; the colour-blind contraction is their sum.
struct ColourConfiguration {
  std::vector<std::vector<std::int32_t>> counts_i;  // [colour][site]

  int n_colours() const { return static_cast<int>(counts_i.size()); }
  int n_sites() const { return counts_i.empty() ? 0 : static_cast<int>(counts_i[0].size()); }
  Configuration contract() const;
};

// Cached single-site marginal mu_phi(eta(x) = k) = phi^k / (Z(phi) c(k)!),
// truncated where the tail drops below tail_tol.  Provides exact pmf values
// and inverse-cdf sampling.
class SiteMarginal {
 public:
  SiteMarginal(const ThermoTable& thermo, double phi, double tail_tol = 1e-14);

  double phi() const { return phi_; }
  int max_k() const { return static_cast<int>(pmf_.size()) - 1; }
  double pmf(int k) const {
    return (k < 0 || k > max_k()) ? 0.0 : pmf_[static_cast<std::size_t>(k)];
  }
  const std::vector<double>& pmf_table() const { return pmf_; }
  int sample(RandomStream& rng) const;

  double mean() const { return mean_; }
  double variance() const { return var_; }
  // Cumulants of the marginal (kappa_2 = variance).
  double kappa3() const { return kappa3_; }
  double kappa4() const { return kappa4_; }

 private:
  double phi_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double mean_ = 0.0, var_ = 0.0, kappa3_ = 0.0, kappa4_ = 0.0;
};

double site_marginal_pmf(const ThermoTable& thermo, int k, double phi);

// N iid draws from the marginal at phi(rho).
Configuration sample_grand_canonical(const ThermoTable& thermo, int n_sites, double rho,
                                     RandomStream& rng);

// Product measure with site-dependent densities rho_at_site (local
// equilibrium start for the nonequilibrium experiments).
Configuration sample_product_profile(const ThermoTable& thermo,
                                     const std::vector<double>& rho_at_site,
                                     RandomStream& rng);

// Exact canonical sample: mu_phi conditioned on the total being n_total,
// drawn by sequential conditioning with convolution tables.  The phi used is
// phi(n_total / n_sites); any phi gives the same conditional law.
Configuration sample_canonical(const ThermoTable& thermo, int n_sites,
                               std::int64_t n_total, RandomStream& rng);

// Conditional pmf P(eta(0) = j | sum = n_total) under mu_phi for an explicit
// phi (exposed to check the phi-invariance of the canonical ensemble).
std::vector<double> canonical_site_pmf(const ThermoTable& thermo, int n_sites,
                                       std::int64_t n_total, double phi);

// Exact P(sum of n_sites iid sites = n) by iterated convolution.
double exact_total_pmf(const ThermoTable& thermo, int n_sites, std::int64_t n, double phi);
// The full distribution of the total (index = n).
std::vector<double> total_pmf_table(const ThermoTable& thermo, int n_sites, double phi);

// Probabilists' Hermite polynomial H_m via the three-term recurrence.
double hermite(int m, double x);

// Edgeworth correction terms g_0 .. g_{J-2} built from the marginal cumulants;
// supports J <= 4 (g_0, g_1, g_2).
struct EdgeworthExpansion {
  int J = 2;
  double sigma = 0.0, kappa3 = 0.0, kappa4 = 0.0;

  EdgeworthExpansion(const ThermoTable& thermo, double rho, int J);
  // g_j(z); g_0 is the standard normal density.
  double g(int j, double z) const;
  // sum_{j <= J-2} N^{-j/2} g_j(z).
  double series(double z, double n_sites) const;
};

// (1/sqrt(N sigma^2)) sum_{j<=J-2} N^{-j/2} g_j(z), z = (n - N rho)/(sigma sqrt N).
double edgeworth_pmf_approx(const ThermoTable& thermo, int n_sites, std::int64_t n,
                            double rho, int J);

// Independent per-particle colour labels with probabilities p (multinomial
// given the totals).
ColourConfiguration colour_split(const Configuration& config, const std::vector<double>& p,
                                 RandomStream& rng);

}  // namespace zrp
