#include "zrp/fields.hpp"

#include <cmath>
#include <stdexcept>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace zrp {

namespace {

// Index stride for restricting an M-grid to the N lattice points.
std::size_t restriction_stride(std::size_t m_grid, std::size_t n) {
  if (m_grid == 0 || m_grid % n != 0)
    throw std::invalid_argument("grid resolution must be a multiple of the lattice size");
  return m_grid / n;
}

}  // namespace

double fluctuation_field(const std::vector<std::int32_t>& counts,
                         const std::vector<double>& centering_grid,
                         const std::vector<double>& f_grid) {
  const std::size_t n = counts.size();
  if (n == 0) throw std::invalid_argument("empty configuration");
  const std::size_t sc = restriction_stride(centering_grid.size(), n);
  const std::size_t sf = restriction_stride(f_grid.size(), n);
  double acc = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    acc += f_grid[x * sf] * (static_cast<double>(counts[x]) - centering_grid[x * sc]);
  return acc / std::sqrt(static_cast<double>(n));
}

double h_minus_m_norm(const std::vector<double>& coefficients_by_z, int m) {
  if (coefficients_by_z.size() % 2 != 1)
    throw std::invalid_argument("coefficients must cover z = -z_max..z_max");
  const int z_max = static_cast<int>(coefficients_by_z.size() / 2);
  double acc = 0.0;
  for (int z = -z_max; z <= z_max; ++z) {
    const double c = coefficients_by_z[static_cast<std::size_t>(z + z_max)];
    const double gamma = 1.0 + 4.0 * M_PI * M_PI * static_cast<double>(z) * z;
    acc += c * c * std::pow(gamma, -m);
  }
  return std::sqrt(acc);
}

double star_norm(const std::vector<double>& f) {
  const std::size_t n = f.size();
  if (n < 2) throw std::invalid_argument("star_norm needs >= 2 sites");
  double mean = 0.0;
  for (double v : f) mean += v;
  if (std::abs(mean) > 1e-10 * static_cast<double>(n))
    throw std::invalid_argument("star_norm requires a mean-zero input");

  // -Lap_N has eigenvalues 4 N^2 sin^2(pi z / N) on the e_z grid basis; the
  // z = 0 mode is excluded by the mean-zero constraint.
  const double nn = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t z = 1; z <= n / 2; ++z) {
    const double lambda = 4.0 * nn * nn * std::sin(M_PI * static_cast<double>(z) / nn) *
                          std::sin(M_PI * static_cast<double>(z) / nn);
    // cos branch
    double cc = 0.0, cs = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double arg = 2.0 * M_PI * static_cast<double>(z) * static_cast<double>(x) / nn;
      cc += f[x] * std::sqrt(2.0) * std::cos(arg);
      cs += f[x] * std::sqrt(2.0) * std::sin(arg);
    }
    cc /= nn;
    cs /= nn;
    if (z == n / 2 && n % 2 == 0) {
      // Nyquist mode: the sampled cos branch has grid norm 2, sin vanishes.
      acc += (cc * cc / 2.0) / lambda;
    } else {
      acc += (cc * cc + cs * cs) / lambda;
    }
  }
  return acc;
}

}  // namespace zrp
