#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace agegloh {

/// Portable seeded random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library distributions are implementation-defined,
/// so every derived quantity is computed here instead:
///   - uniform():  top 53 bits scaled to [0, 1)
///   - below(n):   rejection sampling on the raw 64-bit word
///   - normal():   Marsaglia polar method on uniform()
///   - shuffle():  Fisher-Yates driven by below()
/// The same seed therefore yields the same stream on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace agegloh
