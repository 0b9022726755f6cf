#pragma once

#include <cstdint>
#include <vector>

namespace litege {

// Deterministic splitmix64 generator. Integer-only core, so sequences are
// identical across platforms. Streams derived with split() depend only on the
// construction seed and the tag, not on how many draws were made.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53-bit mantissa.
  double next_double();
  // Uniform in [0, n), rejection-sampled, n > 0.
  std::uint64_t next_below(std::uint64_t n);
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller.
  double normal();

  Rng split(std::uint64_t tag) const;
  std::uint64_t seed() const { return seed_; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), ascending order.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n,
                                                        std::uint32_t k);

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace litege
