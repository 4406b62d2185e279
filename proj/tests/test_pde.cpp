#include <doctest.h>

#include <cmath>
#include <vector>

#include "zrp/pde.hpp"
#include "zrp/rng.hpp"

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

using namespace zrp;

namespace {
const RateFunction doc_rate = RateFunction::custom_table({0.0, 1.0, 1.0});
}

TEST_CASE("basis functions are grid-orthonormal") {
  const int m = 128;
  for (int z : {-5, -1, 0, 1, 2, 5}) {
    for (int w : {-5, -1, 0, 1, 2, 5}) {
      const auto ez = basis_e(z, m).samples;
      const auto ew = basis_e(w, m).samples;
      double dot = 0.0;
      for (int j = 0; j < m; ++j)
        dot += ez[static_cast<std::size_t>(j)] * ew[static_cast<std::size_t>(j)];
      dot /= m;
      CHECK(dot == doctest::Approx(z == w ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("constant profile is a fixed point") {
  const ThermoTable t(doc_rate);
  const auto sol = solve_hydro(t, DensityProfile::scalar(std::vector<double>(64, 0.7)), 0.4);
  for (double v : sol.comps[0]) CHECK(v == doctest::Approx(0.7).epsilon(1e-13));
}

TEST_CASE("heat-kernel mode decay for the linear rate") {
  // phi(rho) = rho: exact solution 1 + 0.2 e^{-2 pi^2 t} sin(2 pi x).
  const ThermoTable t(RateFunction::linear(1.0));
  const int m = 256;
  const double tt = 0.1;
  const auto sol =
      solve_hydro(t, DensityProfile::scalar(make_profile("sinusoid", m, 1.0, 0.2, 1)), tt);
  const double decay = std::exp(-2.0 * M_PI * M_PI * tt);
  double max_err = 0.0;
  for (int j = 0; j < m; ++j) {
    const double x = static_cast<double>(j) / m;
    const double exact = 1.0 + 0.2 * decay * std::sin(2.0 * M_PI * x);
    max_err = std::max(max_err, std::abs(sol.comps[0][static_cast<std::size_t>(j)] - exact));
  }
  CHECK(max_err <= 1e-5);
}

TEST_CASE("second-order spatial convergence") {
  const ThermoTable t(RateFunction::linear(1.0));
  const double tt = 0.05;
  const double decay = std::exp(-2.0 * M_PI * M_PI * tt);
  double errs[2];
  const int grids[2] = {64, 128};
  for (int g = 0; g < 2; ++g) {
    const int m = grids[g];
    const auto sol =
        solve_hydro(t, DensityProfile::scalar(make_profile("sinusoid", m, 1.0, 0.2, 1)), tt);
    double max_err = 0.0;
    for (int j = 0; j < m; ++j) {
      const double x = static_cast<double>(j) / m;
      const double exact = 1.0 + 0.2 * decay * std::sin(2.0 * M_PI * x);
      max_err = std::max(max_err, std::abs(sol.comps[0][static_cast<std::size_t>(j)] - exact));
    }
    errs[g] = max_err;
  }
  CHECK(errs[0] / errs[1] > 3.5);
  CHECK(errs[0] / errs[1] < 4.5);
}

TEST_CASE("mean conservation and no clipping") {
  const ThermoTable t(doc_rate);
  const auto hr = solve_hydro_path(
      t, DensityProfile::scalar(make_profile("sinusoid", 128, 1.0, 0.5, 2)), 0.3, 9);
  CHECK(hr.clip_events == 0);
  CHECK(std::abs(hr.final.mean(0) - 1.0) <= 1e-10);
}

TEST_CASE("colour system contracts to the scalar equation exactly") {
  const ThermoTable t(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}));
  const int m = 64;
  DensityProfile rho0;
  rho0.comps.push_back(make_profile("sinusoid", m, 0.6, 0.25, 1));
  rho0.comps.push_back(make_profile("sinusoid", m, 0.5, 0.2, 2));
  const auto colour = solve_hydro(t, rho0, 0.1);
  const auto scalar = solve_hydro(t, DensityProfile::scalar(rho0.total()), 0.1);
  double max_err = 0.0;
  const auto total = colour.total();
  for (int j = 0; j < m; ++j)
    max_err = std::max(max_err, std::abs(total[static_cast<std::size_t>(j)] -
                                         scalar.comps[0][static_cast<std::size_t>(j)]));
  CHECK(max_err <= 1e-8);
  // per-colour means conserved as well
  CHECK(std::abs(colour.mean(0) - 0.6) <= 1e-10);
  CHECK(std::abs(colour.mean(1) - 0.5) <= 1e-10);
}

TEST_CASE("semigroup identities") {
  const ThermoTable t(doc_rate);
  const RhoPath path =
      RhoPath::constant(DensityProfile::scalar(std::vector<double>(64, 1.0)), 0.0, 1.0);
  const TestFunction f = basis_e(2, 64);
  const auto same = semigroup_apply(t, f, 0.3, 0.3, SemigroupKind::D, path);
  CHECK(same.samples == f.samples);

  const TestFunction ones = basis_e(0, 64);
  const auto still_ones = semigroup_apply(t, ones, 0.0, 0.5, SemigroupKind::S, path);
  for (double v : still_ones.samples) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("semigroup spectral decay at constant density") {
  // Constant-coefficient oracle: P(t,s) e_z = exp(-coef (2 pi z)^2 (t-s)/2) e_z.
  const ThermoTable t(doc_rate);
  const int m = 256;
  const RhoPath path =
      RhoPath::constant(DensityProfile::scalar(std::vector<double>(m, 1.0)), 0.0, 1.0);
  const auto tc = t.transport_coefficients(1.0);
  for (const auto kind : {SemigroupKind::D, SemigroupKind::S}) {
    const double coef = (kind == SemigroupKind::D) ? tc.D : tc.S;
    for (int z : {1, 2}) {
      const TestFunction f = basis_e(z, m);
      const auto g = semigroup_apply(t, f, 0.1, 0.4, kind, path);
      const double factor = std::exp(-0.5 * coef * std::pow(2.0 * M_PI * z, 2) * 0.3);
      double max_err = 0.0;
      for (int j = 0; j < m; ++j)
        max_err = std::max(max_err, std::abs(g.samples[static_cast<std::size_t>(j)] -
                                             factor * f.samples[static_cast<std::size_t>(j)]));
      CHECK(max_err <= 1e-6);
    }
  }
}

TEST_CASE("semigroup composition property") {
  const ThermoTable t(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}));
  const auto hydro = solve_hydro_path(
      t, DensityProfile::scalar(make_profile("sinusoid", 64, 1.0, 0.3, 1)), 0.2, 65);
  const TestFunction f = basis_e(1, 64);
  const auto direct = semigroup_apply(t, f, 0.0, 0.2, SemigroupKind::D, hydro.path);
  const auto half = semigroup_apply(t, f, 0.0, 0.1, SemigroupKind::D, hydro.path);
  const auto composed = semigroup_apply(t, half, 0.1, 0.2, SemigroupKind::D, hydro.path);
  for (int j = 0; j < 64; ++j)
    CHECK(composed.samples[static_cast<std::size_t>(j)] ==
          doctest::Approx(direct.samples[static_cast<std::size_t>(j)]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("colour drift operator") {
  const int m = 64;
  // c(k) = k: D - S = 0, the operator vanishes.
  {
    const ThermoTable t(RateFunction::linear(1.0));
    DensityProfile prof;
    prof.comps.push_back(std::vector<double>(m, 0.5));
    prof.comps.push_back(std::vector<double>(m, 0.5));
    const RhoPath path = RhoPath::constant(prof, 0.0, 1.0);
    const auto out = colour_drift_apply(t, basis_e(1, m), 0, path, 0.5);
    for (double v : out.samples) CHECK(std::abs(v) <= 1e-10);
  }
  {
    const ThermoTable t(doc_rate);
    DensityProfile prof;
    prof.comps.push_back(std::vector<double>(m, 0.5));
    prof.comps.push_back(std::vector<double>(m, 0.5));
    const RhoPath path = RhoPath::constant(prof, 0.0, 1.0);
    // h = e_0: Lap h = 0.
    const auto zero = colour_drift_apply(t, basis_e(0, m), 0, path, 0.5);
    for (double v : zero.samples) CHECK(std::abs(v) <= 1e-12);
    // h = e_1 at rho = (0.5, 0.5): (D-S)/rho rho^1 (-(2 pi)^2) e_1, by hand.
    const auto tc = t.transport_coefficients(1.0);
    const double scale = (tc.D - tc.S) * 0.5 * (-std::pow(2.0 * M_PI, 2));
    const auto out = colour_drift_apply(t, basis_e(1, m), 0, path, 0.5);
    const auto e1 = basis_e(1, m);
    for (int j = 0; j < m; ++j)
      CHECK(out.samples[static_cast<std::size_t>(j)] ==
            doctest::Approx(scale * e1.samples[static_cast<std::size_t>(j)])
                .epsilon(1e-5)
                .scale(1.0));
  }
}

TEST_CASE("ou variance: Lyapunov limits at equilibrium") {
  const ThermoTable t(doc_rate);
  const int m = 64;
  DensityProfile two;
  two.comps.push_back(std::vector<double>(m, 0.5));
  two.comps.push_back(std::vector<double>(m, 0.5));
  const RhoPath path = RhoPath::constant(two, 0.0, 2.0);
  const auto tc = t.transport_coefficients(1.0);

  const TestFunction e1 = basis_e(1, m);
  CHECK(ou_variance(t, e1, 0.3, 0.3, NoiseKind::colour_blind, path) == 0.0);

  // Lyapunov oracle: int phi lambda e^{-D lambda u} du -> phi/D = chi.  The
  // slowest decay scale here is 1/(D lambda_1) ~ 0.1, so t - s = 1.2 leaves a
  // truncation residual ~7e-6 relative.
  const double horizon = 1.2;
  const double v_blind =
      ou_variance(t, e1, 0.0, horizon, NoiseKind::colour_blind, path, 0, 2049);
  CHECK(v_blind == doctest::Approx(tc.chi).epsilon(1e-3));

  // Deviation field: S rho^1 (1 - rho^1/rho) noise under P^S -> 0.25.
  const double v_dev =
      ou_variance(t, e1, 0.0, horizon, NoiseKind::deviation_i, path, 0, 2049);
  CHECK(v_dev == doctest::Approx(0.5 * (1.0 - 0.5)).epsilon(1e-3));

  // colour_i noise [chi D]/rho rho^1 = phi_1 under P^S; limit phi_1/S = rho^1.
  const double v_col = ou_variance(t, e1, 0.0, horizon, NoiseKind::colour_i, path, 0, 2049);
  CHECK(v_col == doctest::Approx(0.5).epsilon(1e-3));

  // monotone nondecreasing in t
  double prev = 0.0;
  for (double tt : {0.02, 0.05, 0.1, 0.3}) {
    const double v = ou_variance(t, e1, 0.0, tt, NoiseKind::colour_blind, path, 0, 129);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("rho path interpolation") {
  std::vector<double> times = {0.0, 1.0, 2.0};
  std::vector<DensityProfile> frames;
  for (double v : {0.0, 1.0, 4.0})
    frames.push_back(DensityProfile::scalar(std::vector<double>(8, v)));
  const RhoPath path(times, frames);
  std::vector<double> out;
  path.comp_at(0.5, 0, out);
  CHECK(out[0] == doctest::Approx(0.5));
  path.comp_at(1.5, 0, out);
  CHECK(out[0] == doctest::Approx(2.5));
  CHECK_THROWS(path.comp_at(2.5, 0, out));
}
