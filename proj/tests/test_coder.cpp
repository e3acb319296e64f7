#include <doctest.h>

#include <cmath>

#include "alvc/entropy.hpp"
#include "alvc/nn/rng.hpp"
#include "alvc/range_coder.hpp"

using namespace alvc::codec;
using alvc::nn::Rng;

namespace {

std::vector<uint32_t> cdf_from_counts(std::vector<double> weights) {
  double total = 0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return quantize_cdf(weights);
}

}  // namespace

TEST_CASE("cdf quantization") {
  SUBCASE("normalizes to the full scale with a floor of one") {
    std::vector<double> p = {0.9, 0.1, 0.0, 0.0};
    auto cdf = quantize_cdf(p);
    REQUIRE(cdf.size() == 5);
    CHECK(cdf.front() == 0);
    CHECK(cdf.back() == kProbScale);
    for (size_t i = 0; i + 1 < cdf.size(); ++i) CHECK(cdf[i + 1] > cdf[i]);
  }
  SUBCASE("many zero bins still get the floor") {
    std::vector<double> p(kNumSymbols, 0.0);
    p[64] = 1.0;
    auto cdf = quantize_cdf(p);
    CHECK(cdf.back() == kProbScale);
    for (size_t i = 0; i + 1 < cdf.size(); ++i) CHECK(cdf[i + 1] - cdf[i] >= 1);
    CHECK(cdf_bits(cdf, 0) < 0.01);      // the dominant symbol is nearly free
    CHECK(cdf_bits(cdf, 63) <= 16.0);    // floor caps the worst case at 16 bits
  }
}

TEST_CASE("range coder") {
  SUBCASE("empty payload decodes to nothing") {
    RangeEncoder enc;
    auto bytes = enc.finish();
    CHECK(bytes.size() <= 2);
  }
  SUBCASE("single even-odds symbol fits two bytes") {
    std::vector<uint32_t> cdf = {0, kProbScale / 2, kProbScale};
    RangeEncoder enc;
    enc.encode(cdf[1], cdf[2]);
    auto bytes = enc.finish();
    CHECK(bytes.size() <= 2);
    RangeDecoder dec(bytes.data(), bytes.size());
    uint32_t t = dec.decode_target();
    CHECK(t >= cdf[1]);
  }
  SUBCASE("lossless on a million random symbols across random tables") {
    Rng rng(99);
    std::vector<std::vector<uint32_t>> tables;
    for (int t = 0; t < 8; ++t) {
      std::vector<double> w(kNumSymbols);
      for (auto& v : w) v = std::pow(rng.next_float(), 4.0f);
      tables.push_back(cdf_from_counts(w));
    }
    const int n = 1'000'000;
    std::vector<int> syms(n);
    std::vector<int> tab(n);
    RangeEncoder enc;
    double ideal_bits = 0;
    for (int i = 0; i < n; ++i) {
      tab[i] = rng.uniform_int(0, 7);
      const auto& cdf = tables[tab[i]];
      uint32_t target = rng.next_u32() & (kProbScale - 1);
      size_t lo = 0, hi = cdf.size() - 1;
      while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        (cdf[mid] <= target ? lo : hi) = mid;
      }
      syms[i] = static_cast<int>(lo) + kSymbolMin;
      ideal_bits += cdf_bits(cdf, syms[i]);
      encode_symbol(enc, syms[i], cdf);
    }
    auto bytes = enc.finish();
    RangeDecoder dec(bytes.data(), bytes.size());
    for (int i = 0; i < n; ++i) {
      int s = decode_symbol(dec, tables[tab[i]]);
      if (s != syms[i]) {
        REQUIRE(s == syms[i]);
      }
    }
    double bound = ideal_bits / 8.0;
    CHECK(static_cast<double>(bytes.size()) <= bound * 1.001 + 4.0);
  }
  SUBCASE("skewed stream stays within a tenth of a percent of the bound") {
    std::vector<double> w(kNumSymbols, 1e-6);
    w[64] = 0.97;
    w[65] = 0.02;
    auto cdf = cdf_from_counts(w);
    Rng rng(100);
    const int n = 100'000;
    std::vector<int> syms(n);
    RangeEncoder enc;
    double ideal_bits = 0;
    for (int i = 0; i < n; ++i) {
      float u = rng.next_float();
      syms[i] = u < 0.97f ? 0 : (u < 0.99f ? 1 : 5);
      ideal_bits += cdf_bits(cdf, syms[i]);
      encode_symbol(enc, syms[i], cdf);
    }
    auto bytes = enc.finish();
    CHECK(static_cast<double>(bytes.size()) <= ideal_bits / 8.0 * 1.001 + 4.0);
    RangeDecoder dec(bytes.data(), bytes.size());
    for (int i = 0; i < n; ++i) REQUIRE(decode_symbol(dec, cdf) == syms[i]);
  }
}

TEST_CASE("gaussian bin probabilities") {
  auto p = gaussian_bin_probs(0.0, 1.0);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p[64] > p[65]);              // peak at zero
  CHECK(p[64] == doctest::Approx(std::erf(0.5 / std::sqrt(2.0))).epsilon(1e-6));
  auto shifted = gaussian_bin_probs(10.0, 1.0);
  CHECK(shifted[74] > 0.3);
}

TEST_CASE("symbol quantization") {
  alvc::nn::Tensor y(1, 1, 1, 6);
  y[0] = 0.5f;   // ties to even: 0
  y[1] = 1.5f;   // ties to even: 2
  y[2] = -0.5f;  // ties to even: 0
  y[3] = 200.0f;
  y[4] = -200.0f;
  y[5] = 2.4f;
  alvc::nn::Tensor out;
  int clamped = quantize_symbols(y, out);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 2.0f);
  CHECK(out[2] == 0.0f);
  CHECK(out[3] == 63.0f);
  CHECK(out[4] == -64.0f);
  CHECK(out[5] == 2.0f);
  CHECK(clamped == 2);
}
