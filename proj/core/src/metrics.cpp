#include "alvc/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "alvc/nn/ops.hpp"

namespace alvc {

double psnr(const Frame& a, const Frame& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("psnr: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.pix.size(); ++i) {
    double d = static_cast<double>(a.pix[i]) - b.pix[i];
    acc += d * d;
  }
  double mse = acc / static_cast<double>(a.pix.size());
  if (mse < 1e-10) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ms_ssim(const Frame& a, const Frame& b, int scales) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("ms_ssim: dimension mismatch");
  nn::Var va = nn::Var::constant(a.pix);
  nn::Var vb = nn::Var::constant(b.pix);
  return nn::ms_ssim_var(va, vb, scales).value()[0];
}

}  // namespace alvc
