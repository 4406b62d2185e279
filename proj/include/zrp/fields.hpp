#pragma once

#include <cstdint>
#include <vector>

#include "zrp/measures.hpp"
#include "zrp/pde.hpp"

namespace zrp {

// <Y, f> = N^{-1/2} sum_x f(x/N) (eta(x) - rho(x/N)).  The centering profile
// and the test function live on grids whose size is a multiple of N and are
// restricted by subsampling.
double fluctuation_field(const std::vector<std::int32_t>& counts,
                         const std::vector<double>& centering_grid,
                         const std::vector<double>& f_grid);

// sqrt( sum_{|z| <= z_max} <F,e_z>^2 gamma_z^{-m} ), gamma_z = 1 + 4 pi^2 z^2.
// Coefficients are indexed z = -z_max..z_max (position z + z_max).
double h_minus_m_norm(const std::vector<double>& coefficients_by_z, int m);

// (1/N) sum f(x) [-Lap_N^{-1} f](x) for mean-zero f on T^N, with
// Lap_N h = N^2 (h(x+1) - 2h(x) + h(x-1)); the quadratic form behind the
// ||.||_* norm.  Solved spectrally with the mean-zero constraint.  For the
// grid mode e_z this equals 1 / (4 N^2 sin^2(pi z / N)).
double star_norm(const std::vector<double>& f);

}  // namespace zrp
