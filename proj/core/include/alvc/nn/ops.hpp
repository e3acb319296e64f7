#pragma once

#include <vector>

#include "alvc/nn/autodiff.hpp"

namespace alvc::nn {

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var add_scalar(const Var& a, float s);
Var mul_scalar(const Var& a, float s);
Var relu(const Var& a);
Var prelu(const Var& a, const Var& slope);  // slope: (1,C,1,1)
Var sigmoid(const Var& a);
Var tanh_op(const Var& a);
Var softplus(const Var& a);
Var erf_op(const Var& a);
Var log_op(const Var& a);                  // natural log; caller keeps input positive
Var pow_const(const Var& a, float p);      // input floored at 1e-6
Var clamp_min(const Var& a, float m);      // zero gradient below the floor
Var clamp01(const Var& a);                 // zero gradient outside [0,1]
Var scaled_tanh(const Var& a, float bound);

// ---- shape ----
Var concat_c(const std::vector<Var>& xs);
Var slice_c(const Var& x, int c0, int c1);  // channels [c0, c1)

// ---- reductions ----
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var mean_hw(const Var& x);  // spatial mean per (n,c), output (N,C,1,1)

// ---- structured ----
// w: (Cout, Cin, kh, kw) stored with n=Cout c=Cin h=kh w=kw; b: (1,Cout,1,1). Zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var avg_pool2(const Var& x);          // 2x2 stride 2, floor on odd dims
Var up_nearest2(const Var& x);
Var up_bilinear2(const Var& x);       // align_corners=false
// Bilinear backward warp, edge-clamped sampling, differentiable in both inputs.
// flow: (N,2,H,W), channel 0 = x displacement, channel 1 = y displacement.
Var warp_bilinear(const Var& img, const Var& flow);
// Forward splat with bilinear weights; deposits clamped inside the grid.
// Returns (N, C+1, H, W): C accumulated value channels then the weight channel.
Var splat_forward(const Var& values, const Var& flow);
// Depthwise separable blur with an odd symmetric kernel, valid padding.
Var blur_valid(const Var& x, const std::vector<float>& kernel1d);

// ---- composites ----
inline Var square(const Var& a) { return mul(a, a); }
inline Var mse(const Var& a, const Var& b) { return mean_all(square(sub(a, b))); }
// Two-way softmax from a pair of logits; returns the first mask, the second is 1 - first.
inline Var pair_softmax_first(const Var& l1, const Var& l2) { return sigmoid(sub(l1, l2)); }

// Per-element code length in bits for integer-quantized values under a
// Gaussian with per-element mean/scale; probability floored at 2^-16.
Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma);

// MS-SSIM over NCHW pairs in [0,1]; 11x11 Gaussian window (sigma 1.5), valid
// padding, average-pool downsampling with floor on odd dims. `scales` in 1..5
// with the canonical per-scale weights renormalized when fewer than 5.
Var ms_ssim_var(const Var& a, const Var& b, int scales = 5);

}  // namespace alvc::nn
