#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zrp {

enum class RateFamily { linear, e1_piecewise, e2_parity, custom_table };

std::string to_string(RateFamily family);
RateFamily rate_family_from_string(const std::string& name);

// Jump-rate law c(k) of the zero-range dynamics.  Immutable after
// construction; O(1) evaluation.  All built-in families are eventually linear
// (tables are extended with slope equal to their last increment), which keeps
// the Lipschitz bound (LG) finite by construction.
class RateFunction {
 public:
  // c(k) = theta * k.
  static RateFunction linear(double theta = 1.0);

  // c(k) = theta * k for k >= K0; below K0 the values head[1..K0-1] are used
  // (head[0] is ignored and fixed to 0).  head may be empty when K0 == 1.
  static RateFunction e1_piecewise(double theta, int K0, std::vector<double> head = {});

  // c(k) = theta1 * k for odd k, theta2 * k for even k (all k); K0 is kept as
  // metadata for where the guarantee is meant to hold.
  static RateFunction e2_parity(double theta1, double theta2, int K0);

  // Explicit table c(0..L-1); beyond the table the rate continues linearly
  // with slope equal to the last tabulated increment.
  static RateFunction custom_table(std::vector<double> table);

  double operator()(std::int64_t k) const {
    if (k <= 0) return 0.0;
    if (family_ == RateFamily::e2_parity)
      return (k & 1) ? theta1_ * static_cast<double>(k) : theta2_ * static_cast<double>(k);
    if (k < static_cast<std::int64_t>(table_.size())) return table_[static_cast<std::size_t>(k)];
    return table_.back() + tail_slope_ * static_cast<double>(k - (static_cast<std::int64_t>(table_.size()) - 1));
  }

  RateFamily family() const { return family_; }
  // Gap parameter used by the monotonicity assumption (M).
  int gap_k0() const { return k0_; }
  void set_gap_k0(int k0);

  // Family parameters (meaning depends on the family).
  double theta() const { return theta1_; }
  double theta2() const { return theta2_; }
  int K0() const { return K0_; }
  const std::vector<double>& table() const { return table_; }

  // Slope of c(k+1)-c(k) for large k.  For e2_parity the increments
  // alternate and are unbounded unless theta1 == theta2.
  bool tail_increments_bounded() const;
  // inf_k {c(k+k0)-c(k)} in the tail (exact for the eventually linear
  // families), used to make the finite-range certificate conclusive.
  double tail_gap(int k0) const;

 private:
  RateFunction() = default;

  RateFamily family_ = RateFamily::linear;
  double theta1_ = 1.0, theta2_ = 1.0;
  int K0_ = 1;
  int k0_ = 1;
  std::vector<double> table_;   // dense values c(0..L-1); unused for e2
  double tail_slope_ = 1.0;
};

// Finite-range certificate for the structural assumptions, over [0, k_max].
struct AssumptionReport {
  double a1 = 0.0;       // max_{k<k_max} |c(k+1)-c(k)|
  double a2 = 0.0;       // min_{k+k0<=k_max} c(k+k0)-c(k)
  bool lg_ok = false;    // (LG), finite scan + tail analysis
  bool m_ok = false;     // (M) for the declared k0
  double c1 = 0.0;       // largest c1 with c1*k <= c(k) on [1,k_max]
  double c2 = 0.0;       // smallest c2 with c(k) <= c2*k on [1,k_max]
  int k_max = 0;
  int k0 = 1;
  bool conclusive = false;  // the eventually-linear tail makes the scan decisive
};

// Scans c over [0, k_max] and combines with the family's tail behaviour.
// Throws std::invalid_argument if c(0) != 0, any c(k) < 0, or
// k_max < k0 + 2.
AssumptionReport validate_assumptions(const RateFunction& rate, int k_max);

}  // namespace zrp
