#pragma once

#include <vector>

#include "alvc/nn/factorized.hpp"
#include "alvc/nn/tensor.hpp"
#include "alvc/range_coder.hpp"

namespace alvc::codec {

// Coder symbol support. Quantized latents are clamped into this range before
// entropy coding; a per-call counter reports how often that happened.
constexpr int kSymbolMin = -64;
constexpr int kSymbolMax = 63;
constexpr int kNumSymbols = kSymbolMax - kSymbolMin + 1;
constexpr uint32_t kProbScale = 1u << 16;

// Turns bin probabilities into a cumulative table (size n+1, last entry
// kProbScale) with every bin at least 1, i.e. a probability floor of 2^-16.
std::vector<uint32_t> quantize_cdf(const std::vector<double>& probs);

// Bin probabilities over the symbol support, tail mass folded into the edge
// bins.
std::vector<double> gaussian_bin_probs(double mu, double sigma);
std::vector<double> factorized_bin_probs(const nn::FactorizedModel& model, int channel);

// Code length in bits of `sym` under a quantized table.
double cdf_bits(const std::vector<uint32_t>& cdf, int sym);

void encode_symbol(RangeEncoder& enc, int sym, const std::vector<uint32_t>& cdf);
int decode_symbol(RangeDecoder& dec, const std::vector<uint32_t>& cdf);

// Round-to-nearest-even and clamp to the symbol support; returns the number
// of clamped values.
int quantize_symbols(const nn::Tensor& y, nn::Tensor& out);

}  // namespace alvc::codec
