#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "zrp/measures.hpp"
#include "zrp/pde.hpp"
#include "zrp/rates.hpp"
#include "zrp/rng.hpp"

namespace zrp {

// Perfect binary tree of site weights w(x) = c(eta(x)).  Every internal node
// is recomputed as the exact sum of its children on update, so an
// incremental tree equals a bottom-up rebuild bit for bit.
class WeightTree {
 public:
  explicit WeightTree(int n_leaves) : n_(n_leaves) {
    base_ = 1;
    while (base_ < n_) base_ <<= 1;
    node_.assign(static_cast<std::size_t>(2) * base_, 0.0);
  }

  int n_leaves() const { return n_; }
  double total() const { return node_[1]; }
  double get(int i) const { return node_[static_cast<std::size_t>(base_ + i)]; }

  void set(int i, double w) {
    std::size_t p = static_cast<std::size_t>(base_ + i);
    node_[p] = w;
    for (p >>= 1; p >= 1; p >>= 1) node_[p] = node_[2 * p] + node_[2 * p + 1];
  }

  void assign(const std::vector<double>& weights) {
    for (std::size_t i = 0; i < node_.size(); ++i) node_[i] = 0.0;
    for (int i = 0; i < n_; ++i)
      node_[static_cast<std::size_t>(base_ + i)] = weights[static_cast<std::size_t>(i)];
    for (std::size_t p = static_cast<std::size_t>(base_) - 1; p >= 1; --p)
      node_[p] = node_[2 * p] + node_[2 * p + 1];
  }

  // r in [0, total): descend to a leaf.
  int sample(double r) const {
    std::size_t i = 1;
    while (i < static_cast<std::size_t>(base_)) {
      const double left = node_[2 * i];
      const bool right = r >= left;
      r -= right ? left : 0.0;
      i = 2 * i + (right ? 1 : 0);
    }
    return static_cast<int>(i) - base_;
  }

  const std::vector<double>& nodes() const { return node_; }

 private:
  int n_, base_;
  std::vector<double> node_;
};

struct Event {
  bool occurred = false;  // false: empty/frozen system or target reached
  int site_from = -1;
  int site_to = -1;
  int colour = 0;
  std::int64_t particle_id = -1;
  double dt_micro = 0.0;
};

// Event-driven state of one zero-range trajectory on the discrete circle.
// Total exit rate of site x is c(eta(x)), split 1/2 per direction; in colour
// or registry mode the jumping particle is uniform among the residents of x,
// which reproduces the colour rates eta_i(x) c(eta(x)) / eta(x).
//
// Particle/colour choices are driven by a separate label stream, so the
// colour-blind projection of a coloured run is event-for-event identical to
// the plain run with the same main stream.
class SimState {
 public:
  // Colour-blind.
  SimState(const RateFunction& rate, Configuration init, RandomStream main_stream,
           RandomStream label_stream);
  // k-colour occupancy tracking.
  SimState(const RateFunction& rate, ColourConfiguration init, RandomStream main_stream,
           RandomStream label_stream);
  // Per-particle registry with unwrapped positions (tagging); colour_of maps
  // particle id -> colour, empty means all colour 0.
  SimState(const RateFunction& rate, Configuration init, RandomStream main_stream,
           RandomStream label_stream, std::vector<int> colour_of);

  int n_sites() const { return n_; }
  int n_colours() const { return n_colours_; }
  bool has_registry() const { return registry_; }
  std::int64_t n_particles() const { return total_; }

  double t_micro() const { return t_micro_; }
  double t_macro() const { return t_micro_ / (static_cast<double>(n_) * n_); }
  std::uint64_t event_count() const { return events_; }
  double total_rate() const { return tree_.total(); }

  const std::vector<std::int32_t>& counts() const { return counts_; }
  const std::vector<std::int32_t>& colour_counts(int colour) const;
  Configuration configuration() const;
  ColourConfiguration colour_configuration() const;

  // One event, regardless of time.
  Event step() { return advance(std::numeric_limits<double>::infinity()); }
  // Run to the absolute diffusive time t_macro (micro target t_macro N^2);
  // the overshooting event is not applied.
  void run_until_macro(double t_macro);

  // (unwrapped - initial) / N for a registered particle.
  double tagged_displacement(std::int64_t id) const;
  const std::vector<std::int64_t>& unwrapped_positions() const { return unwrapped_; }

  // Block-averaged occupancy over bins of `bin` sites, one component per
  // colour.
  DensityProfile snapshot_density(int bin) const;

  // Exact comparison of the incremental weight tree against a full rebuild.
  bool audit_weights() const;

 private:
  Event advance(double target_micro);
  void init_weights();
  double rate_of(std::int32_t k) const {
    return k < static_cast<std::int32_t>(rate_cache_.size())
               ? rate_cache_[static_cast<std::size_t>(k)]
               : rate_(k);
  }

  RateFunction rate_;
  std::vector<double> rate_cache_;
  int n_ = 0;
  int n_colours_ = 1;
  bool colours_mode_ = false;
  bool registry_ = false;
  std::vector<std::int32_t> counts_;
  std::vector<std::vector<std::int32_t>> colour_counts_;  // colours mode
  std::vector<std::vector<std::int32_t>> members_;        // registry: ids per site
  std::vector<std::int64_t> unwrapped_, initial_;         // registry: positions
  std::vector<int> colour_of_;
  std::int64_t total_ = 0;
  WeightTree tree_;
  double t_micro_ = 0.0;
  std::uint64_t events_ = 0;
  RandomStream main_, label_;
};

}  // namespace zrp
