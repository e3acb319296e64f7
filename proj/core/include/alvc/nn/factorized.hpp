#pragma once

#include <array>

#include "alvc/nn/layers.hpp"

namespace alvc::nn {

// Per-channel learned cumulative distribution built from a 4-layer monotone
// chain (dims 1-3-3-3-1): each layer applies softplus(matrix) @ x + bias,
// followed by x + tanh(factor) * tanh(x) on the inner layers and a sigmoid at
// the end. Strictly increasing in x by construction.
class FactorizedModel {
 public:
  static constexpr int kLayers = 4;
  static constexpr int kHidden = 3;

  FactorizedModel() = default;
  FactorizedModel(ParamStore& ps, const std::string& name, int channels, Rng& rng);

  int channels() const { return channels_; }

  // Code length in bits per element of y (N,C,H,W), probability of the
  // unit-width bin around each value, floored at 2^-16.
  Var bits(const Var& y) const;

  // Plain (no-graph) CDF evaluation for the coding path.
  double cdf_value(int channel, double x) const;

 private:
  int channels_ = 0;
  std::array<Var, kLayers> mat_;
  std::array<Var, kLayers> bias_;
  std::array<Var, kLayers - 1> factor_;
};

}  // namespace alvc::nn
