#pragma once

#include <cstdint>
#include <vector>

#include "zrp/thermo.hpp"

namespace zrp {

// Grid function(s) on the uniform torus grid x_j = j/M, one vector per colour.
struct DensityProfile {
  std::vector<std::vector<double>> comps;  // [colour][grid point]
  double time = 0.0;

  static DensityProfile scalar(std::vector<double> grid, double time = 0.0) {
    DensityProfile p;
    p.comps.push_back(std::move(grid));
    p.time = time;
    return p;
  }
  int n_colours() const { return static_cast<int>(comps.size()); }
  int grid_size() const { return comps.empty() ? 0 : static_cast<int>(comps[0].size()); }
  std::vector<double> total() const;
  double mean(int colour) const;
};

// Profile specs used by the CLI: constant a, sinusoid a + b sin(2 pi z x),
// step (a on [0,1/2), b on [1/2,1)).
std::vector<double> make_profile(const std::string& kind, int m_grid, double a, double b,
                                 int z);

// Test function as samples on the uniform grid, with a smoothness tag.
struct TestFunction {
  std::vector<double> samples;
  int smoothness = 3;
};

// e_0 = 1, e_z = sqrt(2) cos(2 pi z x) for z > 0, sqrt(2) sin(2 pi |z| x) for
// z < 0, sampled on m_grid points.
TestFunction basis_e(int z, int m_grid);
double basis_value(int z, double x);
// Grid inner products <F, e_z> for z = -z_max..z_max (index z + z_max).
std::vector<double> grid_coefficients(const std::vector<double>& grid_fn, int z_max);

// Stored solver trajectory: frames at uniform times, linear interpolation
// between them.
class RhoPath {
 public:
  RhoPath() = default;
  RhoPath(std::vector<double> times, std::vector<DensityProfile> frames);
  static RhoPath constant(DensityProfile profile, double t0, double t1);

  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  int n_colours() const { return frames_.front().n_colours(); }
  int grid_size() const { return frames_.front().grid_size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<DensityProfile>& frames() const { return frames_; }

  // Interpolated component / colour-blind total at time t (throws outside
  // the stored range).
  void comp_at(double t, int colour, std::vector<double>& out) const;
  void total_at(double t, std::vector<double>& out) const;
  DensityProfile at(double t) const;

 private:
  std::pair<std::size_t, double> locate(double t) const;
  std::vector<double> times_;
  std::vector<DensityProfile> frames_;
};

struct HydroResult {
  DensityProfile final;
  RhoPath path;
  long steps = 0;
  long clip_events = 0;  // negative-undershoot clips (expected 0 in tests)
};

// Method-of-lines solution of the discretized hydrodynamic equation
//   scalar:  d rho/dt = 1/2 M^2 [phi(rho_{j+1}) - 2 phi(rho_j) + phi(rho_{j-1})]
//   colour:  d rho/dt = 1/2 grad_M ( D_k(rho) grad_M rho )   (flux form)
// with RK4 in time and CFL dt = 0.4 / (M^2 max phi'(rho)).  The flux form
// uses the secant of phi on each edge, which makes the colour system contract
// to the scalar stencil exactly.  Frames are stored at n_frames uniform times
// for later semigroup / variance evaluation.
HydroResult solve_hydro_path(const ThermoTable& thermo, const DensityProfile& rho0,
                             double t, int n_frames = 513);
DensityProfile solve_hydro(const ThermoTable& thermo, const DensityProfile& rho0, double t);

enum class SemigroupKind { D, S };

// P(t,s) f: value at time t of dg/du = 1/2 coef(rho_u) Lap g, g_s = f, with
// coef = D(rho) or S(rho) along the stored path.
TestFunction semigroup_apply(const ThermoTable& thermo, const TestFunction& f, double s,
                             double t, SemigroupKind kind, const RhoPath& path);

// A^i_t h = (D-S)(rho_t)/rho_t * rho^i_t * Lap h  (= S'(rho) rho^i Lap h).
TestFunction colour_drift_apply(const ThermoTable& thermo, const TestFunction& h,
                                int colour, const RhoPath& path, double t);

enum class NoiseKind { colour_blind, colour_i, deviation_i };

// int_s^t int noise(rho_u, x) [grad P(.,u) f]^2 dx du with
//   colour_blind: noise = phi(rho_u),                   semigroup P^D
//   colour_i:     noise = [chi D](rho_u)/rho_u rho^i_u, semigroup P^S
//   deviation_i:  noise = S(rho_u) rho^i_u (1 - rho^i_u/rho_u), semigroup P^S
// Trapezoidal quadrature over quad_nodes times in [s, t].
double ou_variance(const ThermoTable& thermo, const TestFunction& f, double s, double t,
                   NoiseKind kind, const RhoPath& path, int colour = 0,
                   int quad_nodes = 129);

}  // namespace zrp
