#include "zrp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace zrp {

Configuration ColourConfiguration::contract() const {
  Configuration c;
  if (counts_i.empty()) return c;
  c.counts.assign(counts_i[0].size(), 0);
  for (const auto& colour : counts_i) {
    if (colour.size() != c.counts.size())
      throw std::invalid_argument("colour configuration has ragged sites");
    for (std::size_t x = 0; x < colour.size(); ++x) c.counts[x] += colour[x];
  }
  c.recompute_total();
  return c;
}

SiteMarginal::SiteMarginal(const ThermoTable& thermo, double phi, double tail_tol) {
  if (!(phi >= 0.0)) throw std::invalid_argument("phi must be >= 0");
  phi_ = phi;
  const double z = thermo.partition_function(phi, 0);
  const auto& rate = thermo.rate();

  pmf_.clear();
  pmf_.push_back(1.0 / z);
  if (phi > 0.0) {
    double t = 1.0 / z;  // phi^k / (Z c(k)!)
    double acc = t;
    for (int k = 1; k < 2000000; ++k) {
      const double c = rate(k);
      if (!(c > 0.0)) throw std::runtime_error("invalid rate in site marginal");
      t *= phi / c;
      pmf_.push_back(t);
      acc += t;
      if (1.0 - acc < tail_tol) break;
    }
  }
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    acc += pmf_[k];
    cdf_[k] = acc;
  }

  // Central moments for the cumulants.
  double m1 = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) m1 += static_cast<double>(k) * pmf_[k];
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    const double d = static_cast<double>(k) - m1;
    const double p = pmf_[k];
    m2 += d * d * p;
    m3 += d * d * d * p;
    m4 += d * d * d * d * p;
  }
  mean_ = m1;
  var_ = m2;
  kappa3_ = m3;
  kappa4_ = m4 - 3.0 * m2 * m2;
}

int SiteMarginal::sample(RandomStream& rng) const {
  const double u = rng.next_unit();
  // cdf_ is short (tail < 1e-14); linear scan beats binary search for the
  // typical head-heavy draw.
  for (std::size_t k = 0; k < cdf_.size(); ++k)
    if (u < cdf_[k]) return static_cast<int>(k);
  return static_cast<int>(cdf_.size()) - 1;
}

double site_marginal_pmf(const ThermoTable& thermo, int k, double phi) {
  if (k < 0) return 0.0;
  if (phi == 0.0) return k == 0 ? 1.0 : 0.0;
  const double z = thermo.partition_function(phi, 0);
  double t = 1.0;
  const auto& rate = thermo.rate();
  for (int j = 1; j <= k; ++j) {
    const double c = rate(j);
    if (!(c > 0.0)) throw std::runtime_error("invalid rate in site marginal");
    t *= phi / c;
  }
  return t / z;
}

Configuration sample_grand_canonical(const ThermoTable& thermo, int n_sites, double rho,
                                     RandomStream& rng) {
  if (n_sites < 1) throw std::invalid_argument("n_sites must be >= 1");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  Configuration c;
  c.counts.assign(static_cast<std::size_t>(n_sites), 0);
  if (rho == 0.0) return c;
  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(rho));
  for (auto& v : c.counts) v = marginal.sample(rng);
  c.recompute_total();
  return c;
}

Configuration sample_product_profile(const ThermoTable& thermo,
                                     const std::vector<double>& rho_at_site,
                                     RandomStream& rng) {
  Configuration c;
  c.counts.assign(rho_at_site.size(), 0);
  // The profile grids used here carry few distinct densities only in trivial
  // cases; build one marginal per site but reuse when the density repeats.
  double last_rho = -1.0;
  std::unique_ptr<SiteMarginal> marginal;
  for (std::size_t x = 0; x < rho_at_site.size(); ++x) {
    const double r = rho_at_site[x];
    if (!(r >= 0.0)) throw std::invalid_argument("profile density must be >= 0");
    if (r == 0.0) {
      c.counts[x] = 0;
      continue;
    }
    if (r != last_rho) {
      marginal = std::make_unique<SiteMarginal>(thermo, thermo.fugacity_of_density(r));
      last_rho = r;
    }
    c.counts[x] = marginal->sample(rng);
  }
  c.recompute_total();
  return c;
}

namespace {

// Convolution tables Q[m][s] = P(sum of m iid sites = s), s <= n_total.
std::vector<std::vector<double>> convolution_tables(const SiteMarginal& marginal,
                                                    int n_sites, std::int64_t n_total) {
  const std::size_t smax = static_cast<std::size_t>(n_total);
  const int ksup = std::min<std::int64_t>(marginal.max_k(), n_total);
  std::vector<std::vector<double>> q(static_cast<std::size_t>(n_sites) + 1);
  q[0].assign(smax + 1, 0.0);
  q[0][0] = 1.0;
  for (int m = 1; m <= n_sites; ++m) {
    auto& cur = q[static_cast<std::size_t>(m)];
    const auto& prev = q[static_cast<std::size_t>(m) - 1];
    cur.assign(smax + 1, 0.0);
    for (std::size_t s = 0; s <= smax; ++s) {
      double acc = 0.0;
      const int jmax = std::min<std::int64_t>(ksup, static_cast<std::int64_t>(s));
      for (int j = 0; j <= jmax; ++j) acc += marginal.pmf(j) * prev[s - static_cast<std::size_t>(j)];
      cur[s] = acc;
    }
  }
  return q;
}

}  // namespace

Configuration sample_canonical(const ThermoTable& thermo, int n_sites,
                               std::int64_t n_total, RandomStream& rng) {
  if (n_sites < 1) throw std::invalid_argument("n_sites must be >= 1");
  if (n_total < 0) throw std::invalid_argument("n_total must be >= 0 (infeasible)");
  Configuration c;
  c.counts.assign(static_cast<std::size_t>(n_sites), 0);
  if (n_total == 0) return c;

  const double rho = static_cast<double>(n_total) / n_sites;
  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(rho));
  const auto q = convolution_tables(marginal, n_sites, n_total);

  std::int64_t remaining = n_total;
  for (int x = 0; x < n_sites; ++x) {
    const int m_left = n_sites - x - 1;  // sites after this one
    if (m_left == 0) {
      c.counts[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(remaining);
      break;
    }
    const auto& qm = q[static_cast<std::size_t>(m_left)];
    const double denom = q[static_cast<std::size_t>(m_left) + 1][static_cast<std::size_t>(remaining)];
    double u = rng.next_unit() * denom;
    const std::int64_t jmax = std::min<std::int64_t>(remaining, marginal.max_k());
    std::int64_t drawn = jmax;
    for (std::int64_t j = 0; j <= jmax; ++j) {
      const double w = marginal.pmf(static_cast<int>(j)) *
                       qm[static_cast<std::size_t>(remaining - j)];
      if (u < w) {
        drawn = j;
        break;
      }
      u -= w;
    }
    c.counts[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(drawn);
    remaining -= drawn;
  }
  c.recompute_total();
  if (c.total != n_total) throw std::logic_error("canonical sampler lost particles");
  return c;
}

std::vector<double> canonical_site_pmf(const ThermoTable& thermo, int n_sites,
                                       std::int64_t n_total, double phi) {
  if (n_sites < 2) throw std::invalid_argument("need n_sites >= 2");
  if (n_total < 0) throw std::invalid_argument("n_total must be >= 0");
  const SiteMarginal marginal(thermo, phi);
  const auto q = convolution_tables(marginal, n_sites, n_total);
  const double denom = q[static_cast<std::size_t>(n_sites)][static_cast<std::size_t>(n_total)];
  std::vector<double> pmf(static_cast<std::size_t>(n_total) + 1, 0.0);
  for (std::int64_t j = 0; j <= n_total; ++j) {
    pmf[static_cast<std::size_t>(j)] =
        marginal.pmf(static_cast<int>(j)) *
        q[static_cast<std::size_t>(n_sites) - 1][static_cast<std::size_t>(n_total - j)] / denom;
  }
  return pmf;
}

std::vector<double> total_pmf_table(const ThermoTable& thermo, int n_sites, double phi) {
  if (n_sites < 1) throw std::invalid_argument("n_sites must be >= 1");
  const SiteMarginal marginal(thermo, phi, 1e-14);
  const auto& site = marginal.pmf_table();
  std::vector<double> total = site;
  for (int m = 2; m <= n_sites; ++m) {
    std::vector<double> next(total.size() + site.size() - 1, 0.0);
    for (std::size_t s = 0; s < total.size(); ++s) {
      const double ts = total[s];
      if (ts == 0.0) continue;
      for (std::size_t j = 0; j < site.size(); ++j) next[s + j] += ts * site[j];
    }
    total.swap(next);
  }
  return total;
}

double exact_total_pmf(const ThermoTable& thermo, int n_sites, std::int64_t n, double phi) {
  if (n < 0) return 0.0;
  if (n_sites == 1) return site_marginal_pmf(thermo, static_cast<int>(n), phi);
  const auto table = total_pmf_table(thermo, n_sites, phi);
  return n < static_cast<std::int64_t>(table.size()) ? table[static_cast<std::size_t>(n)] : 0.0;
}

double hermite(int m, double x) {
  if (m < 0) throw std::invalid_argument("hermite degree must be >= 0");
  if (m == 0) return 1.0;
  double hm1 = 1.0, h = x;
  for (int n = 1; n < m; ++n) {
    const double next = x * h - n * hm1;
    hm1 = h;
    h = next;
  }
  return h;
}

EdgeworthExpansion::EdgeworthExpansion(const ThermoTable& thermo, double rho, int J_)
    : J(J_) {
  if (!(rho > 0.0)) throw std::invalid_argument("edgeworth needs rho > 0");
  if (J < 2 || J > 4) throw std::invalid_argument("edgeworth supports 2 <= J <= 4");
  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(rho), 1e-14);
  sigma = std::sqrt(marginal.variance());
  kappa3 = marginal.kappa3();
  kappa4 = marginal.kappa4();
}

double EdgeworthExpansion::g(int j, double z) const {
  const double g0 = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  if (j == 0) return g0;
  const double s3 = sigma * sigma * sigma;
  if (j == 1) return g0 * hermite(3, z) * kappa3 / (6.0 * s3);
  if (j == 2) {
    const double l3 = kappa3 / (6.0 * s3);               // kappa3 / (3! sigma^3)
    const double l4 = kappa4 / (24.0 * s3 * sigma);      // kappa4 / (4! sigma^4)
    return g0 * (0.5 * hermite(6, z) * l3 * l3 + hermite(4, z) * l4);
  }
  throw std::invalid_argument("edgeworth implemented to g_2 only");
}

double EdgeworthExpansion::series(double z, double n_sites) const {
  double acc = 0.0;
  for (int j = 0; j <= J - 2; ++j) acc += std::pow(n_sites, -0.5 * j) * g(j, z);
  return acc;
}

double edgeworth_pmf_approx(const ThermoTable& thermo, int n_sites, std::int64_t n,
                            double rho, int J) {
  const EdgeworthExpansion e(thermo, rho, J);
  const double scale = std::sqrt(static_cast<double>(n_sites)) * e.sigma;
  const double z = (static_cast<double>(n) - n_sites * rho) / scale;
  return e.series(z, static_cast<double>(n_sites)) / scale;
}

ColourConfiguration colour_split(const Configuration& config, const std::vector<double>& p,
                                 RandomStream& rng) {
  const int k = static_cast<int>(p.size());
  if (k < 1) throw std::invalid_argument("colour_split needs at least one colour");
  double sum = 0.0;
  for (double pi : p) {
    if (!(pi >= 0.0)) throw std::invalid_argument("colour probabilities must be >= 0");
    sum += pi;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("colour probabilities must sum to 1");

  ColourConfiguration cc;
  cc.counts_i.assign(static_cast<std::size_t>(k),
                     std::vector<std::int32_t>(config.counts.size(), 0));
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  for (std::size_t x = 0; x < config.counts.size(); ++x) {
    for (std::int32_t m = 0; m < config.counts[x]; ++m) {
      const double u = rng.next_unit();
      std::size_t i = 0;
      while (u >= cdf[i]) ++i;
      ++cc.counts_i[i][x];
    }
  }
  return cc;
}

}  // namespace zrp
