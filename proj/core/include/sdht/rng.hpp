#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sdht {

// Counter-based generator: word(i) is a pure function of (seed, stream, i).
// Parallel workers draw from disjoint streams or counter ranges, so reductions
// over their outputs are bit-identical regardless of scheduling.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  // Stateless access by counter.
  uint64_t word(uint64_t counter) const {
    uint64_t z = mix(seed_ + 0x9e3779b97f4a7c15ULL * (stream_ + 1));
    return mix(z + 0x9e3779b97f4a7c15ULL * (counter + 1));
  }

  // Sequential convenience over the counter space.
  uint64_t next() { return word(counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., bound-1}. Fixed-point scaling: one word per call.
  uint64_t below(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  // Inverse-CDF sample from a probability vector.
  std::size_t sample(const std::vector<double>& probs) {
    double u = unit();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
};

}  // namespace sdht
