#include "zrp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zrp {

std::string to_string(RateFamily family) {
  switch (family) {
    case RateFamily::linear: return "linear";
    case RateFamily::e1_piecewise: return "e1_piecewise";
    case RateFamily::e2_parity: return "e2_parity";
    case RateFamily::custom_table: return "custom_table";
  }
  return "?";
}

RateFamily rate_family_from_string(const std::string& name) {
  if (name == "linear") return RateFamily::linear;
  if (name == "e1_piecewise" || name == "e1") return RateFamily::e1_piecewise;
  if (name == "e2_parity" || name == "e2") return RateFamily::e2_parity;
  if (name == "custom_table" || name == "table") return RateFamily::custom_table;
  throw std::invalid_argument("unknown rate family: " + name);
}

RateFunction RateFunction::linear(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("linear rate needs theta > 0");
  RateFunction r;
  r.family_ = RateFamily::linear;
  r.theta1_ = r.theta2_ = theta;
  r.table_ = {0.0, theta};
  r.tail_slope_ = theta;
  r.k0_ = 1;
  return r;
}

RateFunction RateFunction::e1_piecewise(double theta, int K0, std::vector<double> head) {
  if (!(theta > 0.0)) throw std::invalid_argument("e1 rate needs theta > 0");
  if (K0 < 1) throw std::invalid_argument("e1 rate needs K0 >= 1");
  if (static_cast<int>(head.size()) > K0)
    throw std::invalid_argument("e1 head longer than K0");
  RateFunction r;
  r.family_ = RateFamily::e1_piecewise;
  r.theta1_ = r.theta2_ = theta;
  r.K0_ = K0;
  r.table_.assign(static_cast<std::size_t>(K0) + 1, 0.0);
  for (int k = 1; k <= K0; ++k) {
    double v = (k < static_cast<int>(head.size())) ? head[static_cast<std::size_t>(k)]
                                                   : theta * k;
    if (k >= K0) v = theta * k;
    if (!(v >= 0.0)) throw std::invalid_argument("e1 head values must be >= 0");
    r.table_[static_cast<std::size_t>(k)] = v;
  }
  r.tail_slope_ = theta;
  r.k0_ = 1;
  return r;
}

RateFunction RateFunction::e2_parity(double theta1, double theta2, int K0) {
  if (!(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::invalid_argument("e2 rate needs theta1, theta2 > 0");
  if (K0 < 1) throw std::invalid_argument("e2 rate needs K0 >= 1");
  RateFunction r;
  r.family_ = RateFamily::e2_parity;
  r.theta1_ = theta1;
  r.theta2_ = theta2;
  r.K0_ = K0;
  r.k0_ = 2;  // increments of the same parity are the monotone ones
  return r;
}

RateFunction RateFunction::custom_table(std::vector<double> table) {
  if (table.size() < 2) throw std::invalid_argument("custom table needs at least c(0), c(1)");
  if (table[0] != 0.0) throw std::invalid_argument("custom table must have c(0) = 0");
  for (double v : table)
    if (!(v >= 0.0)) throw std::invalid_argument("custom table values must be >= 0");
  RateFunction r;
  r.family_ = RateFamily::custom_table;
  r.tail_slope_ = table[table.size() - 1] - table[table.size() - 2];
  r.theta1_ = r.theta2_ = r.tail_slope_;
  r.table_ = std::move(table);
  r.k0_ = 1;
  return r;
}

void RateFunction::set_gap_k0(int k0) {
  if (k0 < 1) throw std::invalid_argument("k0 must be >= 1");
  k0_ = k0;
}

bool RateFunction::tail_increments_bounded() const {
  if (family_ == RateFamily::e2_parity) return theta1_ == theta2_;
  return true;
}

double RateFunction::tail_gap(int k0) const {
  if (family_ == RateFamily::e2_parity) {
    if (k0 % 2 == 0) return std::min(theta1_, theta2_) * k0;
    // mixed parity: c(k+k0)-c(k) = (theta_opp - theta_same) k + theta_opp k0,
    // unbounded below when the slopes differ.
    if (theta1_ == theta2_) return theta1_ * k0;
    return -std::numeric_limits<double>::infinity();
  }
  return tail_slope_ * k0;
}

AssumptionReport validate_assumptions(const RateFunction& rate, int k_max) {
  const int k0 = rate.gap_k0();
  if (k_max < k0 + 2) throw std::invalid_argument("validate_assumptions: k_max < k0 + 2");
  if (rate(0) != 0.0) throw std::invalid_argument("rate must satisfy c(0) = 0");

  AssumptionReport rep;
  rep.k_max = k_max;
  rep.k0 = k0;

  double a1 = 0.0;
  double a2 = std::numeric_limits<double>::infinity();
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const double ck = rate(k);
    if (!(ck >= 0.0)) throw std::invalid_argument("rate must be nonnegative");
    if (k < k_max) a1 = std::max(a1, std::abs(rate(k + 1) - ck));
    if (k + k0 <= k_max) a2 = std::min(a2, rate(k + k0) - ck);
    if (k >= 1) {
      c1 = std::min(c1, ck / k);
      c2 = std::max(c2, ck / k);
    }
  }
  rep.a1 = a1;
  rep.a2 = a2;
  rep.c1 = c1;
  rep.c2 = c2;
  rep.lg_ok = rate.tail_increments_bounded();
  rep.m_ok = (a2 > 0.0) && (rate.tail_gap(k0) > 0.0);
  // The scan is conclusive once k_max covers the pre-linear head.
  rep.conclusive = rate.family() == RateFamily::e2_parity
                       ? true
                       : k_max >= static_cast<int>(rate.table().size()) + k0;
  return rep;
}

}  // namespace zrp
