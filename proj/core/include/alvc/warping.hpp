#pragma once

#include <utility>

#include "alvc/frame.hpp"
#include "alvc/nn/ops.hpp"

namespace alvc::warp {

// Bilinear backward warp with edge-clamped sampling:
// out(x,y) = frame sampled at (x + flow_x, y + flow_y).
Frame backward_warp(const Frame& frame, const FlowField& flow);

// Pre-merge weighting: returns (m1 .* warped_1, m2 .* warped_2) for the merge
// network. The masks must form a convex pair (sum to 1 pixelwise).
std::pair<Frame, Frame> masked_merge(const Frame& warped_1, const Frame& warped_2, const MaskField& m1,
                                     const MaskField& m2);

// Forward splat with bilinear weights; deposits falling outside the grid are
// clamped to the border, so total weight equals H*W. Returns the unnormalized
// accumulators and the weight map.
std::pair<nn::Tensor, nn::Tensor> forward_splat(const nn::Tensor& values, const FlowField& flow);

}  // namespace alvc::warp
