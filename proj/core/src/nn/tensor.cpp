#include "alvc/nn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace alvc::nn {

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(" << n_ << "," << c_ << "," << h_ << "," << w_ << ")";
  return os.str();
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::sum() const {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

}  // namespace alvc::nn
