#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kgsc {

/// Seeded random stream. Wraps mt19937_64 (whose output sequence is fixed by
/// the standard) and draws Gaussians via Box-Muller so that every sample is
/// reproducible across platforms and stdlib implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), exact (rejection sampling).
  int uniform_int(int bound);

  /// Standard normal draw.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// All randomness flows from one master seed. Component streams are derived
/// by mixing the master seed with a tag hash and an index, so adding or
/// reordering consumers never perturbs unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::uint64_t index = 0) noexcept;

inline Rng subrng(std::uint64_t master, std::string_view component,
                  std::uint64_t index = 0) {
  return Rng(derive_seed(master, component, index));
}

}  // namespace kgsc
