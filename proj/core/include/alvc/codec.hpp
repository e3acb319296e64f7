#pragma once

#include <vector>

#include "alvc/entropy.hpp"
#include "alvc/frame.hpp"
#include "alvc/nets.hpp"

namespace alvc::codec {

enum class StreamKind { location_error, residual, iframe };
enum class Branch { p_frame, b_frame };

struct LatentCode {
  nn::Tensor symbols;  // integers stored as floats, within the coder support
  StreamKind kind = StreamKind::residual;
};

struct CodeResult {
  LatentCode latent;
  Frame frame;  // corrected (location-error stream) or compressed (residual/intra)
  std::vector<uint8_t> payload;
  int clamped = 0;  // symbols clamped into the coder support
  size_t bits() const { return payload.size() * 8; }
};

// Recurrent stream state for one sequence's P-frames; reset at group starts.
struct PStreamStates {
  nets::RecAeState loc_ae, res_ae;
  nets::RecEmState loc_em, res_em;
  bool ready = false;
};

PStreamStates init_p_states(const nets::CodecModel& model, int h, int w);

// Detects the coordinate error between the prediction and the raw frame,
// codes it, and corrects the prediction with the decoded flow plus the
// correction CNN. The encoder reconstruction equals the decoder output
// bit-exactly (both run the synthesis path on the decoded symbols).
CodeResult compress_location_error(const nets::CodecModel& model, Branch branch, const Frame& pred,
                                   const Frame& raw, PStreamStates* p_states);
Frame decode_location_error(const nets::CodecModel& model, Branch branch, const Frame& pred,
                            const std::vector<uint8_t>& payload, PStreamStates* p_states);

CodeResult compress_residual(const nets::CodecModel& model, Branch branch, const Frame& corrected,
                             const Frame& raw, PStreamStates* p_states);
Frame decode_residual(const nets::CodecModel& model, Branch branch, const Frame& corrected,
                      const std::vector<uint8_t>& payload, PStreamStates* p_states);

CodeResult compress_iframe(const nets::CodecModel& model, const Frame& raw);
Frame decode_iframe(const nets::CodecModel& model, const std::vector<uint8_t>& payload, int h, int w);

// Differentiable code-length estimates on noise-perturbed latents,
// -sum log2 p with the probability floored at 2^-16.
nn::Var estimate_rate(const nn::Var& noisy_latent, const nn::FactorizedModel& em);
nn::Var estimate_rate_gaussian(const nn::Var& noisy_latent, const nn::Var& mu, const nn::Var& sigma);

// Payload primitives (exposed for tests).
std::vector<uint8_t> encode_latent_factorized(const nn::Tensor& sym, const nn::FactorizedModel& em);
nn::Tensor decode_latent_factorized(const std::vector<uint8_t>& payload, int c, int h, int w,
                                    const nn::FactorizedModel& em);
std::vector<uint8_t> encode_latent_gaussian(const nn::Tensor& sym, const nn::Tensor& mu,
                                            const nn::Tensor& sigma);
nn::Tensor decode_latent_gaussian(const std::vector<uint8_t>& payload, const nn::Tensor& mu,
                                  const nn::Tensor& sigma);

// Exact code length in bits of the quantized symbols under the same tables
// the coder uses.
double table_bits_factorized(const nn::Tensor& sym, const nn::FactorizedModel& em);
double table_bits_gaussian(const nn::Tensor& sym, const nn::Tensor& mu, const nn::Tensor& sigma);

}  // namespace alvc::codec
