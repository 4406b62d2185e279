#include "zrp/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace zrp {

namespace {
constexpr int kTermCap = 1000000;
}

ThermoTable::ThermoTable(RateFunction rate, double series_tol, double phi_max)
    : rate_(std::move(rate)), series_tol_(series_tol), phi_max_(phi_max) {
  if (!(series_tol_ > 0.0)) throw std::invalid_argument("series_tol must be > 0");
  if (rate_(0) != 0.0) throw std::invalid_argument("rate must satisfy c(0) = 0");
}

// Z^(order) summed directly: term_k = w(k) * phi^(k-order) / c(k)! with the
// falling-factorial weight of the derivative.  Terms are built recursively;
// stop once the term is below series_tol * sum and the term ratio is < 1/2.
double ThermoTable::partition_function(double phi, int order) const {
  if (!(phi >= 0.0)) throw std::invalid_argument("phi must be >= 0");
  if (order < 0 || order > 2) throw std::invalid_argument("order must be 0, 1 or 2");

  if (phi == 0.0) {
    // Only the k = order term survives: Z(0) = 1, Z'(0) = 1/c(1)!,
    // Z''(0) = 2/c(2)!.
    last_terms_ = order;
    if (order == 0) return 1.0;
    const double c1 = rate_(1);
    if (!(c1 > 0.0)) throw std::runtime_error("invalid rate: c(1) <= 0");
    if (order == 1) return 1.0 / c1;
    const double c2 = rate_(2);
    if (!(c2 > 0.0)) throw std::runtime_error("invalid rate: c(2) <= 0");
    return 2.0 / (c1 * c2);
  }

  // t_k = phi^k / c(k)!; derivative weights k, k(k-1).  Stop once the term
  // is below series_tol * sum with the term ratio r = phi/c(k+1) bounded
  // away from 1 (geometric tail <= 1.5 term); the ratio must fall below 1
  // within the cap, which holds for every (LG)+(M) rate.
  double t = 1.0;  // k = 0
  double sum = (order == 0) ? 1.0 : 0.0;
  for (int k = 1; k <= kTermCap; ++k) {
    const double c = rate_(k);
    if (!(c > 0.0)) {
      throw std::runtime_error(
          "partition function does not converge: c(" + std::to_string(k) +
          ") = " + std::to_string(c));
    }
    t *= phi / c;
    double term = t;
    if (order == 1) term = k * t / phi;
    if (order == 2) term = static_cast<double>(k) * (k - 1) * t / (phi * phi);
    sum += term;
    if (k > order && phi / rate_(k + 1) < 0.6 && term < 0.5 * series_tol_ * sum) {
      last_terms_ = k;
      return sum;
    }
  }
  throw std::runtime_error("partition function did not converge within the term cap");
}

double ThermoTable::density_of_fugacity(double phi) const {
  if (!(phi >= 0.0)) throw std::invalid_argument("phi must be >= 0");
  if (phi == 0.0) return 0.0;
  return phi * partition_function(phi, 1) / partition_function(phi, 0);
}

double ThermoTable::variance_at_phi(double phi) const {
  if (phi == 0.0) return 0.0;
  const double z = partition_function(phi, 0);
  const double z1 = partition_function(phi, 1);
  const double z2 = partition_function(phi, 2);
  const double rho = phi * z1 / z;
  // E[eta(eta-1)] = phi^2 Z''/Z.
  return phi * phi * z2 / z + rho - rho * rho;
}

double ThermoTable::fugacity_of_density(double rho) const {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (rho == 0.0) return 0.0;

  // Bracket [lo, hi] with rho(hi) >= rho; rho(phi) is strictly increasing.
  double lo = 0.0, hi = std::max(rho * rate_(1), 1e-8);
  while (density_of_fugacity(hi) < rho) {
    lo = hi;
    hi *= 2.0;
    if (hi > phi_max_)
      throw std::out_of_range("fugacity_of_density: rho not representable below phi_max");
  }

  double phi = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = density_of_fugacity(phi) - rho;
    if (std::abs(f) <= 1e-13 * std::max(1.0, rho)) return phi;
    if (f > 0.0) hi = phi; else lo = phi;
    const double drho = variance_at_phi(phi) / phi;  // rho'(phi)
    double next = phi - f / drho;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);  // safeguard
    if (std::abs(next - phi) <= 1e-12 * (1.0 + std::abs(phi))) return next;
    phi = next;
  }
  return phi;
}

Transport ThermoTable::transport_coefficients(double rho) const {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  Transport tc;
  if (rho == 0.0) {
    // L'Hopital limits on the series.
    tc.S = tc.D = rate_(1);
    tc.chi = 0.0;
    tc.sigma2 = 0.0;
    tc.Sprime_rho = 0.0;
    return tc;
  }
  const double phi = fugacity_of_density(rho);
  const double var = variance_at_phi(phi);
  tc.sigma2 = var;
  tc.D = phi / var;      // phi'(rho) = phi / sigma^2
  tc.S = phi / rho;
  tc.chi = phi / tc.D;   // = sigma^2
  tc.Sprime_rho = tc.D - tc.S;
  return tc;
}

ColourCoefficients ThermoTable::colour_coefficients(const std::vector<double>& rho_vec) const {
  const int k = static_cast<int>(rho_vec.size());
  if (k < 1) throw std::invalid_argument("colour_coefficients: empty density vector");
  double rho = 0.0;
  for (double r : rho_vec) {
    if (!(r >= 0.0)) throw std::invalid_argument("colour densities must be >= 0");
    rho += r;
  }
  if (!(rho > 0.0)) throw std::invalid_argument("colour_coefficients: all-zero density vector");

  const Transport tc = transport_coefficients(rho);
  const double phi = tc.S * rho;
  ColourCoefficients cc;
  cc.k = k;
  cc.rho_vec = rho_vec;
  cc.phi_vec.resize(rho_vec.size());
  cc.D_matrix.assign(static_cast<std::size_t>(k) * k, 0.0);
  cc.A_diag.resize(rho_vec.size());
  const double chiD_over_rho = tc.chi * tc.D / rho;
  const double coupling = (tc.D - tc.S) / rho;
  for (int i = 0; i < k; ++i) {
    cc.phi_vec[static_cast<std::size_t>(i)] = rho_vec[static_cast<std::size_t>(i)] / rho * phi;
    cc.A_diag[static_cast<std::size_t>(i)] = chiD_over_rho * rho_vec[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      double v = coupling * rho_vec[static_cast<std::size_t>(i)];
      if (i == j) v += tc.S;
      cc.D_matrix[static_cast<std::size_t>(i) * k + j] = v;
    }
  }
  return cc;
}

double ThermoTable::moment(int j, double rho) const {
  if (j < 0) throw std::invalid_argument("moment order must be >= 0");
  if (j == 0) return 1.0;
  const double phi = fugacity_of_density(rho);
  const double z = partition_function(phi, 0);
  double t = 1.0;  // phi^k / c(k)!
  double sum = 0.0;
  for (int k = 1; k <= kTermCap; ++k) {
    const double c = rate_(k);
    if (!(c > 0.0)) throw std::runtime_error("moment series does not converge");
    t *= phi / c;
    const double term = std::pow(static_cast<double>(k), j) * t;
    sum += term;
    if (term < series_tol_ * sum && phi / c < 0.5 && k > j) break;
    if (k == kTermCap) throw std::runtime_error("moment series did not converge");
  }
  return sum / z;
}

FugacityInterpolant::FugacityInterpolant(std::vector<double> phi_nodes,
                                         std::vector<double> dphi_nodes, double rho_max)
    : phi_(std::move(phi_nodes)), dphi_(std::move(dphi_nodes)), rho_max_(rho_max) {
  if (phi_.size() != dphi_.size() || phi_.size() < 2)
    throw std::invalid_argument("bad interpolant node data");
  h_ = rho_max_ / static_cast<double>(phi_.size() - 1);
}

double FugacityInterpolant::phi(double rho) const {
  if (rho <= 0.0) return 0.0;
  if (rho >= rho_max_)
    return phi_.back() + dphi_.back() * (rho - rho_max_);  // linear continuation
  const double u = rho / h_;
  const std::size_t i = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(i);
  const double p0 = phi_[i], p1 = phi_[i + 1];
  const double m0 = dphi_[i] * h_, m1 = dphi_[i + 1] * h_;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 +
         (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
}

double FugacityInterpolant::dphi(double rho) const {
  if (rho < 0.0) rho = 0.0;
  if (rho >= rho_max_) return dphi_.back();
  const double u = rho / h_;
  const std::size_t i = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(i);
  const double p0 = phi_[i], p1 = phi_[i + 1];
  const double m0 = dphi_[i] * h_, m1 = dphi_[i + 1] * h_;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 +
          (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * m1) /
         h_;
}

FugacityInterpolant ThermoTable::fugacity_interpolant(double rho_max, int nodes) const {
  if (!(rho_max > 0.0) || nodes < 2)
    throw std::invalid_argument("fugacity_interpolant: bad arguments");
  std::vector<double> p(static_cast<std::size_t>(nodes));
  std::vector<double> dp(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    const double rho = rho_max * static_cast<double>(i) / (nodes - 1);
    if (i == 0) {
      p[0] = 0.0;
      dp[0] = rate_(1);  // phi'(0) = c(1)
      continue;
    }
    const double phi = fugacity_of_density(rho);
    p[static_cast<std::size_t>(i)] = phi;
    dp[static_cast<std::size_t>(i)] = phi / variance_at_phi(phi);
  }
  return FugacityInterpolant(std::move(p), std::move(dp), rho_max);
}

}  // namespace zrp
