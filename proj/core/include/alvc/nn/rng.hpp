#pragma once

#include <cmath>
#include <cstdint>

namespace alvc::nn {

// PCG32. Self-contained so that streams are identical across platforms and
// standard libraries (std distributions are not pinned by the standard).
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 1) { reseed(seed, stream); }

  void reseed(uint64_t seed, uint64_t stream = 1) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
    have_gauss_ = false;
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // Uniform in [0,1) with 24 bits of mantissa.
  float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    uint32_t span = static_cast<uint32_t>(hi - lo + 1);
    return lo + static_cast<int>(next_u32() % span);
  }

  // Box-Muller with one cached value.
  float gaussian() {
    if (have_gauss_) {
      have_gauss_ = false;
      return gauss_;
    }
    float u1 = 0.0f;
    do {
      u1 = next_float();
    } while (u1 <= 1e-12f);
    float u2 = next_float();
    float r = std::sqrt(-2.0f * std::log(u1));
    float a = 6.28318530717958647692f * u2;
    gauss_ = r * std::sin(a);
    have_gauss_ = true;
    return r * std::cos(a);
  }

  // Derive an independent child generator; used to give each component its
  // own stream while keeping everything reproducible from one master seed.
  Rng fork(uint64_t salt) { return Rng(next_u32() ^ (salt * 0x9E3779B97F4A7C15ULL), salt | 1); }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
  bool have_gauss_ = false;
  float gauss_ = 0.0f;
};

}  // namespace alvc::nn
