#pragma once

#include <string>
#include <utility>
#include <vector>

#include "alvc/nn/ops.hpp"
#include "alvc/nn/rng.hpp"

namespace alvc::nn {

// Flat registry of named trainable tensors. Registration order is the
// optimizer's iteration order, so construction order must be deterministic.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init);
  const std::vector<std::pair<std::string, Var>>& all() const { return params_; }
  Var find(const std::string& name) const;
  void zero_grads();
  size_t count() const { return params_.size(); }
  size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Var>> params_;
};

struct Conv2dLayer {
  Var w, b;
  int stride = 1, pad = 1;
  Conv2dLayer() = default;
  // He-normal weights scaled by init_scale; zero bias.
  Conv2dLayer(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride, Rng& rng,
              float init_scale = 1.0f);
  Var operator()(const Var& x) const { return conv2d(x, w, b, stride, pad); }
};

struct PReluLayer {
  Var slope;
  PReluLayer() = default;
  PReluLayer(ParamStore& ps, const std::string& name, int channels);
  Var operator()(const Var& x) const { return prelu(x, slope); }
};

// conv3x3 + PReLU
struct ConvAct {
  Conv2dLayer conv;
  PReluLayer act;
  ConvAct() = default;
  ConvAct(ParamStore& ps, const std::string& name, int cin, int cout, int stride, Rng& rng)
      : conv(ps, name, cin, cout, 3, stride, rng), act(ps, name + ".act", cout) {}
  Var operator()(const Var& x) const { return act(conv(x)); }
};

// Pre-activation residual block: x + conv(prelu(conv(prelu(x)))).
struct ResBlock {
  PReluLayer act1, act2;
  Conv2dLayer conv1, conv2;
  ResBlock() = default;
  ResBlock(ParamStore& ps, const std::string& name, int ch, Rng& rng)
      : act1(ps, name + ".act1", ch),
        act2(ps, name + ".act2", ch),
        conv1(ps, name + ".conv1", ch, ch, 3, 1, rng),
        conv2(ps, name + ".conv2", ch, ch, 3, 1, rng, 0.1f) {}
  Var operator()(const Var& x) const { return add(x, conv2(act2(conv1(act1(x))))); }
};

// Gated recurrent convolutional cell (ConvLSTM). The hidden and cell tensors
// have `ch` channels at the resolution of the input.
struct ConvLstmCell {
  Conv2dLayer gates;  // concat(x, h) -> 4*ch
  int ch = 0;
  ConvLstmCell() = default;
  ConvLstmCell(ParamStore& ps, const std::string& name, int cin, int ch, Rng& rng);
  // Returns (h', c'). Pass zero tensors for the initial state.
  std::pair<Var, Var> step(const Var& x, const Var& h, const Var& c) const;
  Var zero_state(int n, int height, int width) const {
    return Var::constant(Tensor(n, ch, height, width));
  }
};

// Gradient utilities.
double global_grad_norm(const ParamStore& ps);
void clip_grad_norm(ParamStore& ps, double max_norm);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& ps, double lr);

 private:
  struct Slot {
    Tensor m, v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace alvc::nn
