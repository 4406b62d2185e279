#include "zrp/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zrp {

SimState::SimState(const RateFunction& rate, Configuration init, RandomStream main_stream,
                   RandomStream label_stream)
    : rate_(rate),
      n_(init.n_sites()),
      counts_(std::move(init.counts)),
      tree_(init.n_sites()),
      main_(main_stream),
      label_(label_stream) {
  if (n_ < 2) throw std::invalid_argument("SimState needs >= 2 sites");
  init_weights();
}

SimState::SimState(const RateFunction& rate, ColourConfiguration init,
                   RandomStream main_stream, RandomStream label_stream)
    : rate_(rate),
      n_(init.n_sites()),
      colours_mode_(true),
      tree_(init.n_sites() > 0 ? init.n_sites() : 1),
      main_(main_stream),
      label_(label_stream) {
  if (n_ < 2) throw std::invalid_argument("SimState needs >= 2 sites");
  n_colours_ = init.n_colours();
  if (n_colours_ < 1) throw std::invalid_argument("need >= 1 colour");
  colour_counts_ = std::move(init.counts_i);
  counts_.assign(static_cast<std::size_t>(n_), 0);
  for (const auto& cc : colour_counts_) {
    for (int x = 0; x < n_; ++x) {
      if (cc[static_cast<std::size_t>(x)] < 0)
        throw std::invalid_argument("negative colour occupancy");
      counts_[static_cast<std::size_t>(x)] += cc[static_cast<std::size_t>(x)];
    }
  }
  init_weights();
}

SimState::SimState(const RateFunction& rate, Configuration init, RandomStream main_stream,
                   RandomStream label_stream, std::vector<int> colour_of)
    : rate_(rate),
      n_(init.n_sites()),
      registry_(true),
      counts_(std::move(init.counts)),
      tree_(init.n_sites()),
      main_(main_stream),
      label_(label_stream) {
  if (n_ < 2) throw std::invalid_argument("SimState needs >= 2 sites");
  // Particle ids assigned site by site, left to right.
  members_.assign(static_cast<std::size_t>(n_), {});
  std::int64_t next_id = 0;
  for (int x = 0; x < n_; ++x) {
    for (std::int32_t j = 0; j < counts_[static_cast<std::size_t>(x)]; ++j) {
      members_[static_cast<std::size_t>(x)].push_back(static_cast<std::int32_t>(next_id));
      unwrapped_.push_back(x);
      ++next_id;
    }
  }
  initial_ = unwrapped_;
  colour_of_ = std::move(colour_of);
  if (!colour_of_.empty()) {
    if (static_cast<std::int64_t>(colour_of_.size()) != next_id)
      throw std::invalid_argument("colour_of size must match the particle count");
    n_colours_ = 1 + *std::max_element(colour_of_.begin(), colour_of_.end());
  }
  init_weights();
}

void SimState::init_weights() {
  total_ = 0;
  std::int32_t max_k = 0;
  for (auto c : counts_) {
    if (c < 0) throw std::invalid_argument("negative occupancy");
    total_ += c;
    max_k = std::max(max_k, c);
  }
  rate_cache_.resize(static_cast<std::size_t>(total_) + 2);
  for (std::size_t k = 0; k < rate_cache_.size(); ++k)
    rate_cache_[k] = rate_(static_cast<std::int64_t>(k));
  std::vector<double> w(static_cast<std::size_t>(n_), 0.0);
  for (int x = 0; x < n_; ++x)
    w[static_cast<std::size_t>(x)] = rate_of(counts_[static_cast<std::size_t>(x)]);
  tree_.assign(w);
}

const std::vector<std::int32_t>& SimState::colour_counts(int colour) const {
  if (colours_mode_) return colour_counts_.at(static_cast<std::size_t>(colour));
  if (colour == 0 && n_colours_ == 1) return counts_;
  throw std::logic_error("colour_counts: per-colour counts not tracked in this mode");
}

Configuration SimState::configuration() const {
  Configuration c;
  c.counts = counts_;
  c.total = total_;
  return c;
}

ColourConfiguration SimState::colour_configuration() const {
  ColourConfiguration cc;
  if (colours_mode_) {
    cc.counts_i = colour_counts_;
    return cc;
  }
  if (registry_ && !colour_of_.empty()) {
    cc.counts_i.assign(static_cast<std::size_t>(n_colours_),
                       std::vector<std::int32_t>(static_cast<std::size_t>(n_), 0));
    for (int x = 0; x < n_; ++x)
      for (auto id : members_[static_cast<std::size_t>(x)])
        ++cc.counts_i[static_cast<std::size_t>(colour_of_[static_cast<std::size_t>(id)])]
                     [static_cast<std::size_t>(x)];
    return cc;
  }
  cc.counts_i.push_back(counts_);
  return cc;
}

Event SimState::advance(double target_micro) {
  Event ev;
  const double w_total = tree_.total();
  if (!(w_total > 0.0)) {
    // Empty or frozen: time jumps to the target.
    if (std::isfinite(target_micro) && target_micro > t_micro_) t_micro_ = target_micro;
    return ev;
  }
  const double dt = main_.next_exp() / w_total;
  if (t_micro_ + dt >= target_micro) {
    // Left-continuous sample: the overshooting event is not applied.
    t_micro_ = target_micro;
    return ev;
  }

  const std::uint64_t u = main_.next_u64();
  const int dir = static_cast<int>(u & 1u);
  const double r = static_cast<double>(u >> 1) * 0x1.0p-63 * w_total;
  int x = tree_.sample(r);
  if (!(tree_.get(x) > 0.0)) {
    // Floating-point boundary landed on a weightless leaf; retry with a
    // fresh draw (probability ~2^-53 per event).
    do {
      x = tree_.sample(main_.next_unit() * w_total);
    } while (!(tree_.get(x) > 0.0));
  }
  const int y = dir ? (x + 1 == n_ ? 0 : x + 1) : (x == 0 ? n_ - 1 : x - 1);

  ev.occurred = true;
  ev.site_from = x;
  ev.site_to = y;
  ev.dt_micro = dt;
  t_micro_ += dt;
  ++events_;

  const std::size_t xs = static_cast<std::size_t>(x), ys = static_cast<std::size_t>(y);
  if (colours_mode_ && n_colours_ > 1) {
    // Jumping colour proportional to eta_i(x).
    std::int64_t pick =
        static_cast<std::int64_t>(label_.next_below(static_cast<std::uint64_t>(counts_[xs])));
    int colour = 0;
    for (; colour < n_colours_ - 1; ++colour) {
      pick -= colour_counts_[static_cast<std::size_t>(colour)][xs];
      if (pick < 0) break;
    }
    --colour_counts_[static_cast<std::size_t>(colour)][xs];
    ++colour_counts_[static_cast<std::size_t>(colour)][ys];
    ev.colour = colour;
  } else if (registry_) {
    auto& from = members_[xs];
    const std::size_t pick =
        static_cast<std::size_t>(label_.next_below(static_cast<std::uint64_t>(from.size())));
    const std::int32_t id = from[pick];
    from[pick] = from.back();
    from.pop_back();
    members_[ys].push_back(id);
    unwrapped_[static_cast<std::size_t>(id)] += dir ? 1 : -1;
    ev.particle_id = id;
    ev.colour = colour_of_.empty() ? 0 : colour_of_[static_cast<std::size_t>(id)];
  }

  --counts_[xs];
  ++counts_[ys];
  tree_.set(x, rate_of(counts_[xs]));
  tree_.set(y, rate_of(counts_[ys]));
  return ev;
}

void SimState::run_until_macro(double t_macro) {
  if (!(t_macro >= 0.0)) throw std::invalid_argument("t_macro must be >= 0");
  const double target = t_macro * static_cast<double>(n_) * n_;
  if (target <= t_micro_) return;
  while (t_micro_ < target) {
    if (!advance(target).occurred && t_micro_ >= target) break;
  }
}

double SimState::tagged_displacement(std::int64_t id) const {
  if (!registry_) throw std::logic_error("tagged_displacement requires the registry");
  return static_cast<double>(unwrapped_.at(static_cast<std::size_t>(id)) -
                             initial_.at(static_cast<std::size_t>(id))) /
         static_cast<double>(n_);
}

DensityProfile SimState::snapshot_density(int bin) const {
  if (bin < 1 || n_ % bin != 0)
    throw std::invalid_argument("snapshot bin must divide the site count");
  const int m = n_ / bin;
  DensityProfile p;
  p.time = t_macro();
  const auto block = [&](const std::vector<std::int32_t>& c) {
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    for (int b = 0; b < m; ++b) {
      double acc = 0.0;
      for (int j = 0; j < bin; ++j) acc += c[static_cast<std::size_t>(b * bin + j)];
      v[static_cast<std::size_t>(b)] = acc / bin;
    }
    return v;
  };
  if (colours_mode_ && n_colours_ > 1) {
    for (const auto& cc : colour_counts_) p.comps.push_back(block(cc));
  } else if (registry_ && !colour_of_.empty() && n_colours_ > 1) {
    const auto cc = colour_configuration();
    for (const auto& c : cc.counts_i) p.comps.push_back(block(c));
  } else {
    p.comps.push_back(block(counts_));
  }
  return p;
}

bool SimState::audit_weights() const {
  WeightTree fresh(n_);
  std::vector<double> w(static_cast<std::size_t>(n_), 0.0);
  for (int x = 0; x < n_; ++x)
    w[static_cast<std::size_t>(x)] = rate_of(counts_[static_cast<std::size_t>(x)]);
  fresh.assign(w);
  return fresh.nodes() == tree_.nodes();
}

}  // namespace zrp
