#include "alvc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace alvc::codec {

std::vector<uint32_t> quantize_cdf(const std::vector<double>& probs) {
  size_t n = probs.size();
  if (n == 0 || n > kProbScale) throw std::invalid_argument("quantize_cdf: bad bin count");
  std::vector<uint32_t> counts(n);
  std::vector<double> frac(n);
  uint64_t total = 0;
  for (size_t i = 0; i < n; ++i) {
    double scaled = std::max(probs[i], 0.0) * kProbScale;
    counts[i] = std::max<uint32_t>(1, static_cast<uint32_t>(scaled));
    frac[i] = scaled - std::floor(scaled);
    total += counts[i];
  }
  if (total < kProbScale) {
    // distribute the remainder by largest fractional part, ties by index
    uint64_t rem = kProbScale - total;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return frac[a] > frac[b]; });
    size_t j = 0;
    while (rem > 0) {
      ++counts[order[j % n]];
      --rem;
      ++j;
    }
  } else {
    while (total > kProbScale) {
      // shave the largest bin, ties by index
      size_t arg = 0;
      for (size_t i = 1; i < n; ++i)
        if (counts[i] > counts[arg]) arg = i;
      if (counts[arg] <= 1) throw std::logic_error("quantize_cdf: cannot renormalize");
      uint32_t take = static_cast<uint32_t>(std::min<uint64_t>(counts[arg] - 1, total - kProbScale));
      counts[arg] -= take;
      total -= take;
    }
  }
  std::vector<uint32_t> cdf(n + 1, 0);
  for (size_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + counts[i];
  return cdf;
}

namespace {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

}  // namespace

std::vector<double> gaussian_bin_probs(double mu, double sigma) {
  std::vector<double> p(kNumSymbols);
  double prev = 0.0;  // lower tail folded into the first bin
  for (int k = kSymbolMin; k <= kSymbolMax; ++k) {
    double hi = (k == kSymbolMax) ? 1.0 : norm_cdf((k + 0.5 - mu) / sigma);
    p[k - kSymbolMin] = std::max(hi - prev, 0.0);
    prev = hi;
  }
  return p;
}

std::vector<double> factorized_bin_probs(const nn::FactorizedModel& model, int channel) {
  std::vector<double> p(kNumSymbols);
  double prev = 0.0;
  for (int k = kSymbolMin; k <= kSymbolMax; ++k) {
    double hi = (k == kSymbolMax) ? 1.0 : model.cdf_value(channel, k + 0.5);
    p[k - kSymbolMin] = std::max(hi - prev, 0.0);
    prev = hi;
  }
  return p;
}

double cdf_bits(const std::vector<uint32_t>& cdf, int sym) {
  int idx = sym - kSymbolMin;
  if (idx < 0 || idx + 1 >= static_cast<int>(cdf.size()))
    throw std::invalid_argument("cdf_bits: symbol out of range");
  double p = static_cast<double>(cdf[idx + 1] - cdf[idx]) / kProbScale;
  return -std::log2(p);
}

void encode_symbol(RangeEncoder& enc, int sym, const std::vector<uint32_t>& cdf) {
  int idx = sym - kSymbolMin;
  if (idx < 0 || idx + 1 >= static_cast<int>(cdf.size()))
    throw std::invalid_argument("encode_symbol: symbol out of range");
  enc.encode(cdf[idx], cdf[idx + 1]);
}

int decode_symbol(RangeDecoder& dec, const std::vector<uint32_t>& cdf) {
  uint32_t target = dec.decode_target();
  // cdf is strictly increasing; find the bin containing target
  size_t lo = 0, hi = cdf.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (cdf[mid] <= target)
      lo = mid;
    else
      hi = mid;
  }
  dec.decode_update(cdf[lo], cdf[lo + 1]);
  return static_cast<int>(lo) + kSymbolMin;
}

int quantize_symbols(const nn::Tensor& y, nn::Tensor& out) {
  out = nn::Tensor(y.n(), y.c(), y.h(), y.w());
  int clamped = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    float r = std::nearbyintf(y[i]);  // FE_TONEAREST: half to even
    if (r < kSymbolMin) {
      r = kSymbolMin;
      ++clamped;
    } else if (r > kSymbolMax) {
      r = kSymbolMax;
      ++clamped;
    }
    out[i] = r;
  }
  return clamped;
}

}  // namespace alvc::codec
