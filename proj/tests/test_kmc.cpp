#include <doctest.h>

#include <cmath>
#include <vector>

#include "zrp/kmc.hpp"
#include "zrp/stats.hpp"
#include "zrp/thermo.hpp"

using namespace zrp;

namespace {

Configuration constant_config(int n, std::int32_t m) {
  Configuration c;
  c.counts.assign(static_cast<std::size_t>(n), m);
  c.recompute_total();
  return c;
}

SimState equilibrium_sim(const RateFunction& rate, const ThermoTable& thermo, int n,
                         double rho, std::uint64_t seed, std::uint64_t rep) {
  RandomStream init = RandomStream::for_replica(seed, rep, 2);
  Configuration c = sample_grand_canonical(thermo, n, rho, init);
  return SimState(rate, std::move(c), RandomStream::for_replica(seed, rep, 0),
                  RandomStream::for_replica(seed, rep, 1));
}

}  // namespace

TEST_CASE("weight tree: set/sample/total and exact audit") {
  WeightTree tree(11);
  std::vector<double> w = {0.0, 1.0, 2.5, 0.0, 4.0, 0.25, 3.25, 0.5, 1.0, 0.0, 7.5};
  tree.assign(w);
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(tree.total() == doctest::Approx(total).epsilon(1e-15));
  tree.set(3, 2.0);
  tree.set(10, 0.0);
  w[3] = 2.0;
  w[10] = 0.0;
  WeightTree fresh(11);
  fresh.assign(w);
  CHECK(fresh.nodes() == tree.nodes());  // exact, not approximate
}

TEST_CASE("weight tree sampling frequencies follow the weights") {
  // Multinomial oracle on a frozen snapshot.
  WeightTree tree(8);
  std::vector<double> w = {0.0, 1.0, 2.0, 3.0, 0.0, 1.5, 0.5, 2.0};
  tree.assign(w);
  RandomStream rng(99);
  const int draws = 1000000;
  std::vector<int> hits(8, 0);
  for (int i = 0; i < draws; ++i)
    ++hits[static_cast<std::size_t>(tree.sample(rng.next_unit() * tree.total()))];
  for (int x = 0; x < 8; ++x) {
    const double p = w[static_cast<std::size_t>(x)] / tree.total();
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(hits[static_cast<std::size_t>(x)] / static_cast<double>(draws) - p) <=
          4.0 * se + 1e-12);
  }
}

TEST_CASE("empty configuration produces no events") {
  SimState sim(RateFunction::linear(1.0), constant_config(8, 0), RandomStream(1),
               RandomStream(2));
  const Event ev = sim.step();
  CHECK_FALSE(ev.occurred);
  sim.run_until_macro(0.5);
  CHECK(sim.t_macro() == doctest::Approx(0.5));
  CHECK(sim.event_count() == 0);
}

TEST_CASE("t_macro = 0 leaves the state unchanged") {
  const ThermoTable thermo(RateFunction::linear(1.0));
  auto sim = equilibrium_sim(RateFunction::linear(1.0), thermo, 32, 1.0, 3, 0);
  const auto before = sim.counts();
  sim.run_until_macro(0.0);
  CHECK(sim.counts() == before);
  CHECK(sim.event_count() == 0);
}

TEST_CASE("single particle performs a rate-1 random walk") {
  // Closed-form oracle: displacement variance over macro time t is S(0) t = t
  // (exit rate c(1) = 1, 1/2 per direction, variance 1 per unit micro time).
  const int n = 8;
  Configuration c = constant_config(n, 0);
  c.counts[3] = 1;
  c.recompute_total();
  const int reps = 4000;
  const double t = 0.5;
  std::vector<double> disp;
  disp.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    SimState sim(RateFunction::linear(1.0), c,
                 RandomStream::for_replica(17, static_cast<std::uint64_t>(r), 0),
                 RandomStream::for_replica(17, static_cast<std::uint64_t>(r), 1),
                 std::vector<int>{});
    sim.run_until_macro(t);
    disp.push_back(sim.tagged_displacement(0));
  }
  const Moments m = estimate_moments(disp);
  CHECK(std::abs(m.mean) <= 4.0 * m.se_mean + 1e-12);
  CHECK(std::abs(m.var - t) <= 3.0 * m.se_var);
}

TEST_CASE("expected event count under diffusive scaling") {
  // Mean total rate N phi(rho) = N for c(k) = k at rho = 1; events over
  // t_macro = 0.1 are about N * 0.1 * N^2.
  const ThermoTable thermo(RateFunction::linear(1.0));
  const int n = 64;
  double events = 0.0;
  const int reps = 8;
  for (int r = 0; r < reps; ++r) {
    auto sim = equilibrium_sim(RateFunction::linear(1.0), thermo, n, 1.0, 23,
                               static_cast<std::uint64_t>(r));
    sim.run_until_macro(0.1);
    events += static_cast<double>(sim.event_count());
  }
  events /= reps;
  const double expected = n * 0.1 * n * n;
  CHECK(std::abs(events - expected) <= 0.1 * expected);
}

TEST_CASE("per-colour totals are conserved exactly") {
  const ThermoTable thermo(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}));
  RandomStream init(31), split_rng(32);
  Configuration c = sample_grand_canonical(thermo, 32, 1.2, init);
  ColourConfiguration cc = colour_split(c, {0.3, 0.3, 0.4}, split_rng);
  std::vector<std::int64_t> before(3, 0);
  for (int i = 0; i < 3; ++i)
    for (auto v : cc.counts_i[static_cast<std::size_t>(i)]) before[static_cast<std::size_t>(i)] += v;
  SimState sim(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}), std::move(cc),
               RandomStream(33), RandomStream(34));
  sim.run_until_macro(0.2);
  for (int i = 0; i < 3; ++i) {
    std::int64_t after = 0;
    for (auto v : sim.colour_counts(i)) after += v;
    CHECK(after == before[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("weight structure audit after many events") {
  const ThermoTable thermo(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}));
  auto sim = equilibrium_sim(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}), thermo, 64,
                             1.0, 41, 0);
  for (int chunk = 0; chunk < 3; ++chunk) {
    for (int e = 0; e < 100000; ++e) sim.step();
    CHECK(sim.audit_weights());
  }
}

TEST_CASE("registry positions stay consistent with the counts") {
  const ThermoTable thermo(RateFunction::linear(1.0));
  RandomStream init(51);
  Configuration c = sample_grand_canonical(thermo, 16, 1.0, init);
  SimState sim(RateFunction::linear(1.0), c, RandomStream(52), RandomStream(53),
               std::vector<int>{});
  sim.run_until_macro(0.3);
  // Rebuild counts from unwrapped positions mod N; must agree exactly.
  std::vector<std::int32_t> rebuilt(16, 0);
  for (const auto pos : sim.unwrapped_positions()) {
    const std::int64_t site = ((pos % 16) + 16) % 16;
    ++rebuilt[static_cast<std::size_t>(site)];
  }
  CHECK(rebuilt == sim.counts());
}

TEST_CASE("stationarity: pair marginal matches the product measure") {
  const RateFunction rate = RateFunction::linear(1.0);
  const ThermoTable thermo(rate);
  const SiteMarginal marginal(thermo, thermo.fugacity_of_density(1.0));
  const int kcut = 6;
  std::vector<std::int64_t> joint(static_cast<std::size_t>((kcut + 1) * (kcut + 1)), 0);
  const int reps = 3000;
  for (int r = 0; r < reps; ++r) {
    auto sim = equilibrium_sim(rate, thermo, 32, 1.0, 61, static_cast<std::uint64_t>(r));
    sim.run_until_macro(0.3);
    const auto& counts = sim.counts();
    const int a = std::min<std::int32_t>(counts[0], kcut);
    const int b = std::min<std::int32_t>(counts[1], kcut);
    ++joint[static_cast<std::size_t>(a * (kcut + 1) + b)];
  }
  std::vector<double> expected(joint.size());
  const auto cell_p = [&](int k) {
    if (k < kcut) return marginal.pmf(k);
    double tail = 1.0;
    for (int j = 0; j < kcut; ++j) tail -= marginal.pmf(j);
    return tail;
  };
  for (int a = 0; a <= kcut; ++a)
    for (int b = 0; b <= kcut; ++b)
      expected[static_cast<std::size_t>(a * (kcut + 1) + b)] = cell_p(a) * cell_p(b);
  CHECK(chi_square_gof(joint, expected) > 0.001);
}

TEST_CASE("matched-seed colour contraction is exact") {
  const ThermoTable thermo(RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5}));
  const RateFunction rate = RateFunction::e1_piecewise(1.0, 2, {0.0, 1.5});
  const std::uint64_t seed = 77;

  RandomStream init_a = RandomStream::for_replica(seed, 0, 2);
  Configuration blind_cfg = sample_grand_canonical(thermo, 32, 1.0, init_a);
  SimState blind(rate, blind_cfg, RandomStream::for_replica(seed, 0, 0),
                 RandomStream::for_replica(seed, 0, 1));

  RandomStream split_rng = RandomStream::for_replica(seed, 0, 3);
  ColourConfiguration cc = colour_split(blind_cfg, {0.5, 0.5}, split_rng);
  SimState coloured(rate, std::move(cc), RandomStream::for_replica(seed, 0, 0),
                    RandomStream::for_replica(seed, 0, 1));

  for (double t : {0.05, 0.1, 0.2}) {
    blind.run_until_macro(t);
    coloured.run_until_macro(t);
    CHECK(blind.counts() == coloured.counts());
    CHECK(blind.event_count() == coloured.event_count());
  }

  // The registry-tracked run contracts the same way.
  SimState tagged(rate, blind_cfg, RandomStream::for_replica(seed, 0, 0),
                  RandomStream::for_replica(seed, 0, 1), std::vector<int>{});
  tagged.run_until_macro(0.2);
  CHECK(tagged.counts() == blind.counts());
}

TEST_CASE("snapshot density") {
  SimState zero(RateFunction::linear(1.0), constant_config(16, 0), RandomStream(1),
                RandomStream(2));
  const auto p0 = zero.snapshot_density(4);
  for (double v : p0.comps[0]) CHECK(v == 0.0);

  SimState three(RateFunction::linear(1.0), constant_config(16, 3), RandomStream(1),
                 RandomStream(2));
  const auto p3 = three.snapshot_density(4);
  for (double v : p3.comps[0]) CHECK(v == doctest::Approx(3.0));

  CHECK_THROWS(three.snapshot_density(5));  // must divide N
}

TEST_CASE("equilibrium bin means concentrate around rho") {
  const ThermoTable thermo(RateFunction::linear(1.0));
  auto sim = equilibrium_sim(RateFunction::linear(1.0), thermo, 512, 1.0, 91, 0);
  sim.run_until_macro(0.02);
  const auto snap = sim.snapshot_density(16);
  for (double v : snap.comps[0]) CHECK(std::abs(v - 1.0) <= 4.0 * std::sqrt(1.0 / 16.0));
}
