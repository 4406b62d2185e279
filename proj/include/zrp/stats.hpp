#pragma once

#include <cstdint>
#include <vector>

namespace zrp {

// Replica-ensemble moments. var is the unbiased sample variance; se_var is a
// leave-one-out jackknife standard error; skewness / excess kurtosis come
// with the normal-theory errors sqrt(6/R), sqrt(24/R).
struct Moments {
  long n = 0;
  double mean = 0.0, var = 0.0, skew = 0.0, ex_kurt = 0.0;
  double se_mean = 0.0, se_var = 0.0;
  double se_skew = 0.0, se_ex_kurt = 0.0;
};

Moments estimate_moments(const std::vector<double>& samples);

struct Verdict {
  bool pass = false;
  double z_score = 0.0;
};

// pass iff |observed_var - predicted| <= k_sigma * se_var.
Verdict compare_to_prediction(double observed_var, double se_var, double predicted,
                              double k_sigma);

// Pearson chi^2 goodness of fit; cells pooled from the tail so that every
// expected count is >= 5.  Returns the right-tail p-value.
double chi_square_gof(const std::vector<std::int64_t>& counts,
                      const std::vector<double>& expected_pmf);

// Right tail of the chi^2 distribution (exposed for tests).
double chi_square_tail(double x, double dof);

// Deterministic per-cell replica store: slot r is owned by replica r, so the
// final reduce is independent of completion order.
class ReplicaEnsemble {
 public:
  ReplicaEnsemble(int n_cells, long n_replicas);
  int n_cells() const { return n_cells_; }
  long n_replicas() const { return n_replicas_; }
  void set(long replica, int cell, double value);
  const std::vector<double>& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  Moments moments(int cell) const;

 private:
  int n_cells_;
  long n_replicas_;
  std::vector<std::vector<double>> cells_;  // [cell][replica]
};

}  // namespace zrp
