#include "alvc/nn/factorized.hpp"

#include <cmath>
#include <stdexcept>

namespace alvc::nn {

namespace {

constexpr int kDims[FactorizedModel::kLayers + 1] = {1, 3, 3, 3, 1};
constexpr float kProbFloor = 0x1p-16f;
constexpr float kInvLn2 = 1.4426950408889634f;

inline float sp(float v) { return v > 20.0f ? v : std::log1p(std::exp(v)); }
inline float sigm(float v) { return 1.0f / (1.0f + std::exp(-v)); }

struct ChainWork {
  // activations entering each layer (l[0][0] is the input scalar) and the
  // pre-nonlinearity outputs z of each layer
  float l[FactorizedModel::kLayers + 1][FactorizedModel::kHidden];
  float z[FactorizedModel::kLayers][FactorizedModel::kHidden];
};

struct ChainParams {
  const Tensor* mat[FactorizedModel::kLayers];
  const Tensor* bias[FactorizedModel::kLayers];
  const Tensor* factor[FactorizedModel::kLayers - 1];
};

struct ChainGrads {
  Tensor* mat[FactorizedModel::kLayers] = {};
  Tensor* bias[FactorizedModel::kLayers] = {};
  Tensor* factor[FactorizedModel::kLayers - 1] = {};
};

// Forward through the monotone chain for one scalar of one channel; returns
// the sigmoid output and fills intermediates for the backward pass.
float chain_forward(const ChainParams& p, int c, float x, ChainWork& w) {
  w.l[0][0] = x;
  for (int k = 0; k < FactorizedModel::kLayers; ++k) {
    int din = kDims[k], dout = kDims[k + 1];
    for (int j = 0; j < dout; ++j) {
      float acc = p.bias[k]->at(0, c, j, 0);
      for (int i = 0; i < din; ++i) acc += sp(p.mat[k]->at(0, c, j, i)) * w.l[k][i];
      w.z[k][j] = acc;
      if (k < FactorizedModel::kLayers - 1) {
        float f = std::tanh(p.factor[k]->at(0, c, j, 0));
        w.l[k + 1][j] = acc + f * std::tanh(acc);
      } else {
        w.l[k + 1][j] = acc;
      }
    }
  }
  return sigm(w.l[FactorizedModel::kLayers][0]);
}

// Backpropagates dF through the chain, accumulating parameter grads when
// provided; returns d/dx.
float chain_backward(const ChainParams& p, const ChainGrads& g, int c, const ChainWork& w, float F,
                     float dF) {
  float dl[FactorizedModel::kHidden];
  dl[0] = dF * F * (1.0f - F);
  for (int k = FactorizedModel::kLayers - 1; k >= 0; --k) {
    int din = kDims[k], dout = kDims[k + 1];
    float dz[FactorizedModel::kHidden];
    for (int j = 0; j < dout; ++j) {
      if (k < FactorizedModel::kLayers - 1) {
        float fraw = p.factor[k]->at(0, c, j, 0);
        float f = std::tanh(fraw);
        float tz = std::tanh(w.z[k][j]);
        dz[j] = dl[j] * (1.0f + f * (1.0f - tz * tz));
        if (g.factor[k]) g.factor[k]->at(0, c, j, 0) += dl[j] * tz * (1.0f - f * f);
      } else {
        dz[j] = dl[j];
      }
      if (g.bias[k]) g.bias[k]->at(0, c, j, 0) += dz[j];
    }
    float dlin[FactorizedModel::kHidden] = {0, 0, 0};
    for (int j = 0; j < dout; ++j)
      for (int i = 0; i < din; ++i) {
        float raw = p.mat[k]->at(0, c, j, i);
        if (g.mat[k]) g.mat[k]->at(0, c, j, i) += dz[j] * w.l[k][i] * sigm(raw);
        dlin[i] += dz[j] * sp(raw);
      }
    for (int i = 0; i < din; ++i) dl[i] = dlin[i];
  }
  return dl[0];
}

}  // namespace

FactorizedModel::FactorizedModel(ParamStore& ps, const std::string& name, int channels, Rng& rng)
    : channels_(channels) {
  const float init_scale = 10.0f;
  float scale = std::pow(init_scale, 1.0f / kLayers);
  for (int k = 0; k < kLayers; ++k) {
    int din = kDims[k], dout = kDims[k + 1];
    float init = std::log(std::expm1(1.0f / (scale * dout)));
    Tensor m(1, channels, dout, din);
    m.fill(init);
    mat_[k] = ps.create(name + ".mat" + std::to_string(k), std::move(m));
    Tensor b(1, channels, dout, 1);
    for (size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.5f, 0.5f);
    bias_[k] = ps.create(name + ".bias" + std::to_string(k), std::move(b));
    if (k < kLayers - 1)
      factor_[k] = ps.create(name + ".factor" + std::to_string(k), Tensor(1, channels, dout, 1));
  }
}

Var FactorizedModel::bits(const Var& y) const {
  const Tensor& yv = y.value();
  if (yv.c() != channels_) throw std::invalid_argument("FactorizedModel: channel mismatch");

  ChainParams cp;
  for (int k = 0; k < kLayers; ++k) {
    cp.mat[k] = &mat_[k].value();
    cp.bias[k] = &bias_[k].value();
    if (k < kLayers - 1) cp.factor[k] = &factor_[k].value();
  }

  Tensor out(yv.n(), yv.c(), yv.h(), yv.w());
  {
    ChainWork w;
    for (int n = 0; n < yv.n(); ++n)
      for (int c = 0; c < yv.c(); ++c)
        for (int yy = 0; yy < yv.h(); ++yy)
          for (int xx = 0; xx < yv.w(); ++xx) {
            float v = yv.at(n, c, yy, xx);
            float hi = chain_forward(cp, c, v + 0.5f, w);
            float lo = chain_forward(cp, c, v - 0.5f, w);
            float p = std::max(hi - lo, kProbFloor);
            out.at(n, c, yy, xx) = -std::log(p) * kInvLn2;
          }
  }

  std::vector<Var> parents;
  parents.push_back(y);
  for (int k = 0; k < kLayers; ++k) parents.push_back(mat_[k]);
  for (int k = 0; k < kLayers; ++k) parents.push_back(bias_[k]);
  for (int k = 0; k < kLayers - 1; ++k) parents.push_back(factor_[k]);

  NodePtr yn = y.node();
  std::array<NodePtr, kLayers> matn, biasn;
  std::array<NodePtr, kLayers - 1> factn;
  for (int k = 0; k < kLayers; ++k) {
    matn[k] = mat_[k].node();
    biasn[k] = bias_[k].node();
    if (k < kLayers - 1) factn[k] = factor_[k].node();
  }

  return make_op(std::move(out), parents, [yn, matn, biasn, factn](Node& self) {
    ChainParams cp;
    for (int k = 0; k < kLayers; ++k) {
      cp.mat[k] = &matn[k]->value;
      cp.bias[k] = &biasn[k]->value;
      if (k < kLayers - 1) cp.factor[k] = &factn[k]->value;
    }
    ChainGrads cg;
    if (matn[0]->requires_grad) {
      for (int k = 0; k < kLayers; ++k) {
        cg.mat[k] = &matn[k]->ensure_grad();
        cg.bias[k] = &biasn[k]->ensure_grad();
        if (k < kLayers - 1) cg.factor[k] = &factn[k]->ensure_grad();
      }
    }
    Tensor* dy = yn->requires_grad ? &yn->ensure_grad() : nullptr;
    const Tensor& yv = yn->value;
    ChainWork w_hi, w_lo;
    for (int n = 0; n < yv.n(); ++n)
      for (int c = 0; c < yv.c(); ++c)
        for (int yy = 0; yy < yv.h(); ++yy)
          for (int xx = 0; xx < yv.w(); ++xx) {
            float g = self.grad.at(n, c, yy, xx);
            if (g == 0.0f) continue;
            float v = yv.at(n, c, yy, xx);
            float hi = chain_forward(cp, c, v + 0.5f, w_hi);
            float lo = chain_forward(cp, c, v - 0.5f, w_lo);
            float p = hi - lo;
            if (p <= kProbFloor) continue;  // floored: zero gradient
            float dp = -g * kInvLn2 / p;
            float dx_hi = chain_backward(cp, cg, c, w_hi, hi, dp);
            float dx_lo = chain_backward(cp, cg, c, w_lo, lo, -dp);
            if (dy) dy->at(n, c, yy, xx) += dx_hi + dx_lo;
          }
  });
}

double FactorizedModel::cdf_value(int channel, double x) const {
  ChainParams cp;
  for (int k = 0; k < kLayers; ++k) {
    cp.mat[k] = &mat_[k].value();
    cp.bias[k] = &bias_[k].value();
    if (k < kLayers - 1) cp.factor[k] = &factor_[k].value();
  }
  ChainWork w;
  return chain_forward(cp, channel, static_cast<float>(x), w);
}

}  // namespace alvc::nn
