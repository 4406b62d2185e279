#pragma once

#include <vector>

#include "zrp/rates.hpp"

namespace zrp {

// Transport and equilibrium coefficients at a single density.
struct Transport {
  double D = 0.0;           // bulk diffusion, phi'(rho)
  double S = 0.0;           // self diffusion, phi(rho)/rho
  double chi = 0.0;         // static compressibility, phi/phi'
  double sigma2 = 0.0;      // single-site variance of the marginal
  double Sprime_rho = 0.0;  // S'(rho) * rho = D - S
};

// k-colour diffusion and noise matrices at a density vector.
struct ColourCoefficients {
  int k = 0;
  std::vector<double> rho_vec;   // per-colour densities
  std::vector<double> phi_vec;   // phi_i = (rho^i/rho) phi(rho)
  std::vector<double> D_matrix;  // k x k, row-major; D(i,j) = S dij + (D-S)/rho * rho^i
  std::vector<double> A_diag;    // diagonal of A_k: [chi D](rho)/rho * rho^i
  double d_at(int i, int j) const { return D_matrix[static_cast<std::size_t>(i) * k + j]; }
};

// Lightweight cubic-Hermite interpolant of rho -> phi(rho), built from exact
// node values and exact derivatives phi' = phi/sigma^2.  Used by the PDE hot
// loops; interpolation error is far below solver truncation error.
class FugacityInterpolant {
 public:
  FugacityInterpolant() = default;
  FugacityInterpolant(std::vector<double> phi_nodes, std::vector<double> dphi_nodes,
                      double rho_max);
  double phi(double rho) const;
  double dphi(double rho) const;
  double rho_max() const { return rho_max_; }

 private:
  std::vector<double> phi_, dphi_;
  double h_ = 1.0, rho_max_ = 0.0;
};

// Equilibrium thermodynamics of a zero-range rate: the partition function
// Z(phi) = sum_k phi^k / c(k)!, the fugacity/density inversion, and the
// transport coefficients.  Immutable after construction; concurrent reads are
// safe.
class ThermoTable {
 public:
  explicit ThermoTable(RateFunction rate, double series_tol = 1e-14,
                       double phi_max = 1e9);

  const RateFunction& rate() const { return rate_; }
  double series_tol() const { return series_tol_; }
  double phi_max() const { return phi_max_; }
  int last_truncation_index() const { return last_terms_; }

  // Z (order 0), Z' (order 1), Z'' (order 2) at phi >= 0.  Throws
  // std::runtime_error with a nonconvergence message if the term ratio fails
  // to drop below 1 within the term cap (invalid rate).
  double partition_function(double phi, int order = 0) const;

  double density_of_fugacity(double phi) const;
  // Inverse of the above; bracketing + Newton, 1e-12 absolute tolerance.
  double fugacity_of_density(double rho) const;

  Transport transport_coefficients(double rho) const;
  ColourCoefficients colour_coefficients(const std::vector<double>& rho_vec) const;

  // j-th raw moment of the single-site marginal at density rho (diagnostic;
  // direct series summation).
  double moment(int j, double rho) const;

  // Interpolant covering [0, rho_max] with the given node count.
  FugacityInterpolant fugacity_interpolant(double rho_max, int nodes = 4097) const;

 private:
  double variance_at_phi(double phi) const;

  RateFunction rate_;
  double series_tol_;
  double phi_max_;
  mutable int last_terms_ = 0;
};

}  // namespace zrp
