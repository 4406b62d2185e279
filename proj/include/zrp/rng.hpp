#pragma once

#include <cmath>
#include <cstdint>

namespace zrp {

// Counter-style random stream: a Weyl counter passed through the SplitMix64
// finalizer.  State is a single u64, so replica streams are cheap to derive
// and a stream never touches shared state.
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  // Independent stream keyed by (master_seed, replica, lane).  Lanes separate
  // the uses inside one replica (dynamics, labels, initial condition) so that
  // e.g. colour labels can be re-drawn without disturbing the event sequence.
  static RandomStream for_replica(std::uint64_t master_seed, std::uint64_t replica,
                                  std::uint64_t lane = 0) {
    std::uint64_t s = mix(master_seed + 0x9E3779B97F4A7C15ull * (replica + 1));
    s = mix(s + 0x9E3779B97F4A7C15ull * (lane + 1));
    return RandomStream(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform on [0,1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe argument for log().
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_exp() { return -std::log(next_unit_pos()); }

  // Uniform integer in [0, n); n > 0.  Multiply-shift; bias O(n/2^64).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0x853C49E6748FEA9Bull;
};

}  // namespace zrp
