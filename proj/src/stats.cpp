#include "zrp/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zrp {

namespace {

// Neumaier compensated summation; keeps aggregation insensitive to replica
// order well below the 1e-12 determinism budget.
struct Accumulator {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

Moments estimate_moments(const std::vector<double>& samples) {
  const long n = static_cast<long>(samples.size());
  if (n < 1) throw std::invalid_argument("estimate_moments: empty sample");
  Moments m;
  m.n = n;

  Accumulator s1;
  for (double x : samples) s1.add(x);
  m.mean = s1.value() / static_cast<double>(n);

  Accumulator s2, s3, s4;
  for (double x : samples) {
    const double d = x - m.mean;
    s2.add(d * d);
    s3.add(d * d * d);
    s4.add(d * d * d * d);
  }
  const double nn = static_cast<double>(n);
  const double m2 = s2.value() / nn;
  if (n >= 2) m.var = s2.value() / (nn - 1.0);
  m.se_mean = (n >= 2) ? std::sqrt(m.var / nn) : 0.0;
  if (m2 > 0.0) {
    m.skew = (s3.value() / nn) / std::pow(m2, 1.5);
    m.ex_kurt = (s4.value() / nn) / (m2 * m2) - 3.0;
  }
  m.se_skew = std::sqrt(6.0 / nn);
  m.se_ex_kurt = std::sqrt(24.0 / nn);

  if (n >= 3 && m2 > 0.0) {
    // Leave-one-out variances from the centred sums.
    const double sy2 = s2.value();
    std::vector<double> loo(samples.size());
    Accumulator lbar;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double y = samples[i] - m.mean;
      const double s1p = -y;            // sum of centred values without i
      const double s2p = sy2 - y * y;
      const double v = (s2p - s1p * s1p / (nn - 1.0)) / (nn - 2.0);
      loo[i] = v;
      lbar.add(v);
    }
    const double vbar = lbar.value() / nn;
    Accumulator dev;
    for (double v : loo) dev.add((v - vbar) * (v - vbar));
    m.se_var = std::sqrt((nn - 1.0) / nn * dev.value());
  }
  return m;
}

Verdict compare_to_prediction(double observed_var, double se_var, double predicted,
                              double k_sigma) {
  Verdict v;
  const double diff = observed_var - predicted;
  if (se_var > 0.0) {
    v.z_score = diff / se_var;
    v.pass = std::abs(diff) <= k_sigma * se_var;
  } else {
    v.z_score = (diff == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    v.pass = diff == 0.0;
  }
  return v;
}

double chi_square_tail(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double chi_square_gof(const std::vector<std::int64_t>& counts,
                      const std::vector<double>& expected_pmf) {
  if (counts.size() != expected_pmf.size() || counts.size() < 2)
    throw std::invalid_argument("chi_square_gof: need >= 2 matching cells");
  std::int64_t n = 0;
  for (auto c : counts) {
    if (c < 0) throw std::invalid_argument("chi_square_gof: negative count");
    n += c;
  }
  if (n == 0) throw std::invalid_argument("chi_square_gof: empty sample");
  double psum = 0.0;
  for (double p : expected_pmf) {
    if (!(p >= 0.0)) throw std::invalid_argument("chi_square_gof: negative probability");
    psum += p;
  }
  if (!(psum > 0.0)) throw std::invalid_argument("chi_square_gof: zero expected mass");

  // Greedy pooling so every pooled expected count is >= 5.
  std::vector<double> obs_p, exp_p;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    o_acc += static_cast<double>(counts[j]);
    e_acc += static_cast<double>(n) * expected_pmf[j] / psum;
    if (e_acc >= 5.0) {
      obs_p.push_back(o_acc);
      exp_p.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!exp_p.empty()) {
      obs_p.back() += o_acc;
      exp_p.back() += e_acc;
    } else {
      obs_p.push_back(o_acc);
      exp_p.push_back(e_acc);
    }
  }
  if (obs_p.size() < 2)
    throw std::invalid_argument("chi_square_gof: degenerate after pooling (single cell)");

  double chi2 = 0.0;
  for (std::size_t j = 0; j < obs_p.size(); ++j) {
    const double d = obs_p[j] - exp_p[j];
    chi2 += d * d / exp_p[j];
  }
  return chi_square_tail(chi2, static_cast<double>(obs_p.size()) - 1.0);
}

ReplicaEnsemble::ReplicaEnsemble(int n_cells, long n_replicas)
    : n_cells_(n_cells), n_replicas_(n_replicas) {
  if (n_cells < 1 || n_replicas < 1)
    throw std::invalid_argument("ReplicaEnsemble: need >= 1 cell and replica");
  cells_.assign(static_cast<std::size_t>(n_cells),
                std::vector<double>(static_cast<std::size_t>(n_replicas), 0.0));
}

void ReplicaEnsemble::set(long replica, int cell, double value) {
  cells_.at(static_cast<std::size_t>(cell)).at(static_cast<std::size_t>(replica)) = value;
}

Moments ReplicaEnsemble::moments(int cell) const {
  return estimate_moments(cells_.at(static_cast<std::size_t>(cell)));
}

}  // namespace zrp
