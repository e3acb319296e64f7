#include "alvc/warping.hpp"

#include <cmath>
#include <stdexcept>

namespace alvc::warp {

using nn::Var;

Frame backward_warp(const Frame& frame, const FlowField& flow) {
  if (frame.height() != flow.height() || frame.width() != flow.width())
    throw std::invalid_argument("backward_warp: dimension mismatch");
  Var out = nn::warp_bilinear(Var::constant(frame.pix), Var::constant(flow.vec));
  return Frame(out.value(), FrameRole::predicted, frame.index);
}

std::pair<Frame, Frame> masked_merge(const Frame& warped_1, const Frame& warped_2, const MaskField& m1,
                                     const MaskField& m2) {
  if (warped_1.height() != warped_2.height() || warped_1.width() != warped_2.width())
    throw std::invalid_argument("masked_merge: frame dimension mismatch");
  const nn::Tensor& w1 = m1.weights;
  const nn::Tensor& w2 = m2.weights;
  if (w1.h() != warped_1.height() || w1.w() != warped_1.width() || !w1.same_shape(w2))
    throw std::invalid_argument("masked_merge: mask dimension mismatch");
  for (size_t i = 0; i < w1.size(); ++i)
    if (std::fabs(w1[i] + w2[i] - 1.0f) > 1e-4f)
      throw std::invalid_argument("masked_merge: masks must sum to 1 pixelwise");
  Frame a(warped_1.height(), warped_1.width(), warped_1.role, warped_1.index);
  Frame b(warped_2.height(), warped_2.width(), warped_2.role, warped_2.index);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        a.pix.at(0, c, y, x) = warped_1.pix.at(0, c, y, x) * w1.at(0, 0, y, x);
        b.pix.at(0, c, y, x) = warped_2.pix.at(0, c, y, x) * w2.at(0, 0, y, x);
      }
  return {a, b};
}

std::pair<nn::Tensor, nn::Tensor> forward_splat(const nn::Tensor& values, const FlowField& flow) {
  if (!values.all_finite() || !flow.finite())
    throw std::invalid_argument("forward_splat: inputs must be finite");
  Var out = nn::splat_forward(Var::constant(values), Var::constant(flow.vec));
  const nn::Tensor& o = out.value();
  nn::Tensor acc(o.n(), values.c(), o.h(), o.w());
  nn::Tensor wsum(o.n(), 1, o.h(), o.w());
  for (int n = 0; n < o.n(); ++n) {
    for (int c = 0; c < values.c(); ++c)
      for (int y = 0; y < o.h(); ++y)
        for (int x = 0; x < o.w(); ++x) acc.at(n, c, y, x) = o.at(n, c, y, x);
    for (int y = 0; y < o.h(); ++y)
      for (int x = 0; x < o.w(); ++x) wsum.at(n, 0, y, x) = o.at(n, values.c(), y, x);
  }
  return {acc, wsum};
}

}  // namespace alvc::warp
