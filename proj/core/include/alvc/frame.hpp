#pragma once

#include <utility>
#include <vector>

#include "alvc/nn/tensor.hpp"

namespace alvc {

enum class FrameRole { raw, compressed, predicted, corrected };

// One RGB frame with pixel values in [0,1], stored as a (1,3,H,W) tensor.
struct Frame {
  nn::Tensor pix;
  FrameRole role = FrameRole::raw;
  int index = 0;

  Frame() = default;
  Frame(int h, int w, FrameRole r = FrameRole::raw, int idx = 0)
      : pix(1, 3, h, w), role(r), index(idx) {}
  explicit Frame(nn::Tensor t, FrameRole r = FrameRole::raw, int idx = 0)
      : pix(std::move(t)), role(r), index(idx) {}

  int height() const { return pix.h(); }
  int width() const { return pix.w(); }

  void clamp01() {
    for (size_t i = 0; i < pix.size(); ++i) pix[i] = pix[i] < 0.0f ? 0.0f : (pix[i] > 1.0f ? 1.0f : pix[i]);
  }
};

// Dense displacement field in pixels, (1,2,H,W), channel 0 = x then 1 = y,
// read at target-grid coordinates for backward warping.
struct FlowField {
  nn::Tensor vec;

  FlowField() = default;
  FlowField(int h, int w) : vec(1, 2, h, w) {}
  explicit FlowField(nn::Tensor t) : vec(std::move(t)) {}

  int height() const { return vec.h(); }
  int width() const { return vec.w(); }
  bool finite() const { return vec.all_finite(); }
};

// Per-reference blending weights in [0,1], (1,1,H,W). The two masks of a
// merge pair always sum to 1 at every pixel.
struct MaskField {
  nn::Tensor weights;

  MaskField() = default;
  MaskField(int h, int w) : weights(1, 1, h, w) {}
  explicit MaskField(nn::Tensor t) : weights(std::move(t)) {}
};

struct VideoSequence {
  std::vector<Frame> frames;
  double frame_rate = 30.0;

  int height() const { return frames.empty() ? 0 : frames[0].height(); }
  int width() const { return frames.empty() ? 0 : frames[0].width(); }
  size_t size() const { return frames.size(); }
};

// Edge-replicate pad so both dims are multiples of k; returns the padded
// frame and the original (height, width) for cropping after decode.
std::pair<Frame, std::pair<int, int>> pad_to_multiple(const Frame& f, int k);

// Crop back to original dims (top-left anchored, inverse of pad_to_multiple).
Frame crop_to(const Frame& f, int h, int w);

}  // namespace alvc
