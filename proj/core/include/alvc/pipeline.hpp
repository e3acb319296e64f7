#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alvc/bitstream.hpp"
#include "alvc/codec.hpp"
#include "alvc/motion.hpp"
#include "alvc/nets.hpp"

namespace alvc::pipeline {

struct GopConfig {
  int gop_size = 13;
  int num_b = 2;  // consecutive B-frames bridging to the next group
  void validate() const;
};

enum class StepType { I, P, B };

struct ScheduleStep {
  int target = 0;
  StepType type = StepType::I;
  // P references: the two most recent compressed frames of the group
  // (duplicated at the group start).
  int ref1 = -1, ref2 = -1;
  // B references in near-to-far order; even steps run time-flipped.
  int ref_a = -1, ref_b = -1, ref_c = -1, ref_d = -1;
  bool flipped = false;
  motion::DeltaT dt;
};

// Coding order: each group's intra and forward-predicted frames, then the
// next group's intra and first P, then the bridge's B-steps in alternating
// near-far order. Trailing frames that cannot complete a bridge fall back to
// P-frames.
std::vector<ScheduleStep> build_schedule(const GopConfig& cfg, int num_frames);

struct FrameStats {
  int index = 0;
  char type = 'I';
  size_t bits_location = 0;
  size_t bits_residual = 0;
  size_t record_bytes = 0;
  double psnr = 0.0;
  double ms_ssim = -1.0;   // -1 when the frame is too small for 5 scales
  double pred_psnr = -1.0; // prediction quality before any bits are spent
  double ref_psnr = -1.0;  // nearest-reference baseline for the same frame
};

struct RateReport {
  std::vector<FrameStats> frames;  // coding order
  size_t header_bytes = 0;
  int width = 0, height = 0;
  int clamped_symbols = 0;

  size_t total_bytes() const;
  size_t total_bits() const;
  double bpp() const;
  double mean_psnr() const;
  std::string to_json() const;
};

// Decoded frames plus the recurrent state that persists between steps.
struct ReferenceBuffer {
  std::map<int, Frame> frames;
  nets::RecPredState pred_state;
  codec::PStreamStates streams;
};

struct EncodeResult {
  std::vector<uint8_t> bitstream;
  RateReport report;
  VideoSequence reconstruction;  // display order, original dims
};

EncodeResult encode_sequence(const nets::CodecModel& model, const VideoSequence& video,
                             const GopConfig& cfg);

// Header must match the model (lambda and architecture hash); output frames
// are bit-identical to the encoder-side reconstructions.
VideoSequence decode_sequence(const nets::CodecModel& model, const std::vector<uint8_t>& bitstream);

}  // namespace alvc::pipeline
