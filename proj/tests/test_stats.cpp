#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

using namespace zrp;

namespace {

std::vector<double> normal_samples(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; i += 2) {
    const double u1 = rng.next_unit_pos();
    const double u2 = rng.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out.push_back(r * std::cos(2.0 * M_PI * u2));
    if (static_cast<int>(out.size()) < n) out.push_back(r * std::sin(2.0 * M_PI * u2));
  }
  return out;
}

}  // namespace

TEST_CASE("degenerate and tiny ensembles") {
  const Moments constant = estimate_moments(std::vector<double>(50, 3.25));
  CHECK(constant.var == 0.0);
  CHECK(constant.se_mean == 0.0);
  CHECK(constant.se_var == 0.0);

  const Moments pair = estimate_moments({0.0, 2.0});
  CHECK(pair.mean == doctest::Approx(1.0));
  CHECK(pair.var == doctest::Approx(2.0));
}

TEST_CASE("normal stream moments sit inside the normal-theory bands") {
  const int n = 10000;
  const auto samples = normal_samples(n, 2024);
  const Moments m = estimate_moments(samples);
  CHECK(std::abs(m.mean) <= 4.0 * m.se_mean);
  CHECK(std::abs(m.var - 1.0) <= 4.0 * m.se_var);
  CHECK(std::abs(m.skew) <= 4.0 * std::sqrt(6.0 / n));
  CHECK(std::abs(m.ex_kurt) <= 4.0 * std::sqrt(24.0 / n));
}

TEST_CASE("aggregation is permutation invariant to 1e-12") {
  auto samples = normal_samples(5000, 77);
  const Moments a = estimate_moments(samples);
  std::sort(samples.begin(), samples.end());
  const Moments b = estimate_moments(samples);
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
  CHECK(a.var == doctest::Approx(b.var).epsilon(1e-12));
  CHECK(a.se_var == doctest::Approx(b.se_var).epsilon(1e-10));
}

TEST_CASE("compare_to_prediction") {
  const Verdict exact = compare_to_prediction(2.0, 0.1, 2.0, 3.0);
  CHECK(exact.pass);
  CHECK(exact.z_score == 0.0);

  const Verdict degenerate = compare_to_prediction(2.0, 0.0, 1.0, 3.0);
  CHECK_FALSE(degenerate.pass);
  CHECK(std::isinf(degenerate.z_score));

  // scale equivariance: var -> a^2 var, se -> a^2 se, z unchanged
  const Verdict base = compare_to_prediction(1.9, 0.05, 2.0, 3.0);
  const double a2 = 7.3 * 7.3;
  const Verdict scaled = compare_to_prediction(1.9 * a2, 0.05 * a2, 2.0 * a2, 3.0);
  CHECK(scaled.z_score == doctest::Approx(base.z_score).epsilon(1e-9));
  CHECK(scaled.pass == base.pass);
}

TEST_CASE("synthetic OU ensemble passes against the Lyapunov value") {
  // Oracle: exact AR(1) discretization of dX = -theta X dt + sigma dW has
  // stationary variance sigma^2 / (2 theta).
  const double theta = 2.0, sigma = 0.8, dt = 0.05;
  const double target = sigma * sigma / (2.0 * theta);
  const double a = std::exp(-theta * dt);
  const double noise_sd = std::sqrt(target * (1.0 - a * a));
  int passes = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    RandomStream rng(1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> samples;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
      double x = std::sqrt(target) * std::sqrt(-2.0 * std::log(rng.next_unit_pos())) *
                 std::cos(2.0 * M_PI * rng.next_unit());
      for (int s = 0; s < 40; ++s) {
        const double g = std::sqrt(-2.0 * std::log(rng.next_unit_pos())) *
                         std::cos(2.0 * M_PI * rng.next_unit());
        x = a * x + noise_sd * g;
      }
      samples.push_back(x);
    }
    const Moments m = estimate_moments(samples);
    if (compare_to_prediction(m.var, m.se_var, target, 3.0).pass) ++passes;
  }
  CHECK(passes >= trials - 1);  // ~99% of seeds at 3 sigma
}

TEST_CASE("chi square: exact proportions give the p = 1 boundary") {
  const std::vector<std::int64_t> counts = {25, 25, 25, 25};
  const std::vector<double> expected = {0.25, 0.25, 0.25, 0.25};
  CHECK(chi_square_gof(counts, expected) == doctest::Approx(1.0));
}

TEST_CASE("chi square: degenerate input throws") {
  CHECK_THROWS(chi_square_gof({10}, {1.0}));
  // Pooling a two-cell table with a tiny second cell collapses to one cell.
  CHECK_THROWS(chi_square_gof({1000, 0}, {0.9999999, 1e-7}));
}

TEST_CASE("chi square tail values") {
  // Reference: Q(x=3.84, dof=1) ~ 0.05; Q(x=0, dof) = 1.
  CHECK(chi_square_tail(0.0, 4.0) == 1.0);
  CHECK(chi_square_tail(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(chi_square_tail(18.307038, 10.0) == doctest::Approx(0.05).epsilon(1e-5));
}

TEST_CASE("chi square p-values are uniform under the null (KS)") {
  RandomStream rng(4242);
  const std::vector<double> pmf = {0.1, 0.2, 0.3, 0.25, 0.15};
  std::vector<double> pvals;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<std::int64_t> counts(pmf.size(), 0);
    for (int i = 0; i < 1000; ++i) {
      const double u = rng.next_unit();
      double acc = 0.0;
      for (std::size_t c = 0; c < pmf.size(); ++c) {
        acc += pmf[c];
        if (u < acc) {
          ++counts[c];
          break;
        }
      }
    }
    pvals.push_back(chi_square_gof(counts, pmf));
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    const double f = static_cast<double>(i + 1) / trials;
    ks = std::max(ks, std::abs(f - pvals[i]));
  }
  CHECK(ks <= 1.95 / std::sqrt(static_cast<double>(trials)));  // alpha ~ 0.001
}

TEST_CASE("replica ensemble slots reduce deterministically") {
  ReplicaEnsemble ens(2, 100);
  for (long r = 0; r < 100; ++r) {
    ens.set(r, 0, static_cast<double>(r));
    ens.set(r, 1, static_cast<double>(r % 7));
  }
  const Moments m0 = ens.moments(0);
  CHECK(m0.mean == doctest::Approx(49.5));
  CHECK(m0.n == 100);
}
