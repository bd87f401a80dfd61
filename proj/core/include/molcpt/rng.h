//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_RNG_H_
#define MOLCPT_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace molcpt {

// Seeded generator with platform-independent derived draws. The engine
// (mt19937_64) is fully specified by the standard; the std distributions are
// not, so every draw used by the library goes through the helpers below.
class Rng {
public:
  explicit Rng(std::uint64_t seed): engine_(seed) { }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices out of [0, n), in draw order.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

  // Child stream derived from the next draw of this generator and `stream`.
  Rng split(std::uint64_t stream);

private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace molcpt

#endif  // MOLCPT_RNG_H_
