#include "kgsc/rng.hpp"

#include <cmath>
#include <numbers>

#include "kgsc/hash.hpp"

namespace kgsc {

int Rng::uniform_int(int bound) {
  const auto b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = ~0ull - ~0ull % b;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(x % b);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 =
      (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::uint64_t index) noexcept {
  // splitmix64 finalizer over (master, tag, index).
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (fnv1a64(component) ^ index);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace kgsc
