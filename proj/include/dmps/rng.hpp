#pragma once

// Counter-based Gaussian draws. Every normal variate is a pure function of
// (stream key, step, draw index), so chains can run in any order or in
// parallel and still produce identical numbers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "dmps/types.hpp"

namespace dmps {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Key for chain `chain` of a run seeded with `seed`.
constexpr std::uint64_t chain_key(std::uint64_t seed, std::uint64_t chain) {
  return mix64(seed ^ mix64(chain + 1));
}

/// Key for the measurement-noise stream of a run seeded with `seed`.
constexpr std::uint64_t measurement_key(std::uint64_t seed) {
  return mix64(seed ^ 0x6D6561737572656Dull);
}

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }

  /// Fills `out` with standard normals for the given step; draw i of a step
  /// is the same no matter how many draws are requested.
  void fill(std::uint64_t step, Eigen::Ref<Vector> out) const {
    const Index n = out.size();
    for (Index block = 0; 2 * block < n; ++block) {
      const auto pair = normals(step, static_cast<std::uint64_t>(block));
      out[2 * block] = pair[0];
      if (2 * block + 1 < n) out[2 * block + 1] = pair[1];
    }
  }

  Vector draw(std::uint64_t step, Index n) const {
    Vector out(n);
    fill(step, out);
    return out;
  }

  /// Two standard normals from one Philox block via Box-Muller.
  std::array<double, 2> normals(std::uint64_t step, std::uint64_t block) const {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                  static_cast<std::uint32_t>(block >> 32),
                                  static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32)};
    const Philox4x32::Key k{static_cast<std::uint32_t>(key_),
                            static_cast<std::uint32_t>(key_ >> 32)};
    const auto r = Philox4x32::generate(ctr, k);
    // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    const std::uint64_t w0 = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(w0 >> 11) + 1.0) * kScale;
    const double u2 = static_cast<double>(w1 >> 11) * kScale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  std::uint64_t key_;
};

}  // namespace dmps
