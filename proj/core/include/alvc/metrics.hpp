#pragma once

#include "alvc/frame.hpp"

namespace alvc {

// 10*log10(1/MSE) on [0,1] pixels, capped at 100 dB for (near-)identical
// frames so rate-distortion integrals stay finite.
double psnr(const Frame& a, const Frame& b);

// 5-scale MS-SSIM (11x11 Gaussian window, sigma 1.5, canonical scale weights
// 0.0448/0.2856/0.3001/0.2363/0.1333). Needs dims >= 176x176 for 5 scales;
// smaller frames must pass a reduced `scales`.
double ms_ssim(const Frame& a, const Frame& b, int scales = 5);

}  // namespace alvc
