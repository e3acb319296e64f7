#include "alvc/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace alvc::nn {

Var ParamStore::create(const std::string& name, Tensor init) {
  for (const auto& [n, v] : params_)
    if (n == name) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  Var v = Var::leaf(std::move(init), true);
  params_.emplace_back(name, v);
  return v;
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : params_)
    if (n == name) return v;
  throw std::invalid_argument("ParamStore: unknown parameter " + name);
}

void ParamStore::zero_grads() {
  for (auto& [n, v] : params_) v.zero_grad();
}

size_t ParamStore::scalar_count() const {
  size_t total = 0;
  for (const auto& [n, v] : params_) total += v.value().size();
  return total;
}

Conv2dLayer::Conv2dLayer(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride,
                         Rng& rng, float init_scale)
    : stride(stride), pad(k / 2) {
  Tensor wt(cout, cin, k, k);
  float std = init_scale * std::sqrt(2.0f / (static_cast<float>(cin) * k * k));
  for (size_t i = 0; i < wt.size(); ++i) wt[i] = std * rng.gaussian();
  w = ps.create(name + ".w", std::move(wt));
  b = ps.create(name + ".b", Tensor(1, cout, 1, 1));
}

PReluLayer::PReluLayer(ParamStore& ps, const std::string& name, int channels) {
  slope = ps.create(name + ".slope", Tensor::full(1, channels, 1, 1, 0.1f));
}

ConvLstmCell::ConvLstmCell(ParamStore& ps, const std::string& name, int cin, int ch, Rng& rng) : ch(ch) {
  gates = Conv2dLayer(ps, name + ".gates", cin + ch, 4 * ch, 3, 1, rng, 0.5f);
}

std::pair<Var, Var> ConvLstmCell::step(const Var& x, const Var& h, const Var& c) const {
  Var g = gates(concat_c({x, h}));
  Var i = sigmoid(slice_c(g, 0, ch));
  Var f = sigmoid(add_scalar(slice_c(g, ch, 2 * ch), 1.0f));  // forget-gate bias
  Var gg = tanh_op(slice_c(g, 2 * ch, 3 * ch));
  Var o = sigmoid(slice_c(g, 3 * ch, 4 * ch));
  Var c2 = add(mul(f, c), mul(i, gg));
  Var h2 = mul(o, tanh_op(c2));
  return {h2, c2};
}

double global_grad_norm(const ParamStore& ps) {
  double acc = 0.0;
  for (const auto& [n, v] : ps.all()) {
    if (!v.has_grad()) continue;
    const Tensor& g = v.grad();
    for (size_t i = 0; i < g.size(); ++i) acc += static_cast<double>(g[i]) * g[i];
  }
  return std::sqrt(acc);
}

void clip_grad_norm(ParamStore& ps, double max_norm) {
  double norm = global_grad_norm(ps);
  if (norm <= max_norm || norm == 0.0) return;
  float scale = static_cast<float>(max_norm / norm);
  for (auto& [n, v] : ps.all()) {
    if (!v.has_grad()) continue;
    Tensor& g = v.grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] *= scale;
  }
}

void Adam::step(ParamStore& ps, double lr) {
  const auto& params = ps.all();
  if (slots_.empty()) {
    slots_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      const Tensor& v = params[i].second.value();
      slots_[i].m = Tensor(v.n(), v.c(), v.h(), v.w());
      slots_[i].v = Tensor(v.n(), v.c(), v.h(), v.w());
    }
  }
  if (slots_.size() != params.size()) throw std::logic_error("Adam: parameter set changed");
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Var v = params[i].second;
    if (!v.has_grad()) continue;
    Tensor& val = v.value();
    Tensor& g = v.grad();
    Tensor& m = slots_[i].m;
    Tensor& sv = slots_[i].v;
    for (size_t j = 0; j < val.size(); ++j) {
      m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
      sv[j] = static_cast<float>(beta2_ * sv[j] + (1.0 - beta2_) * static_cast<double>(g[j]) * g[j]);
      double mhat = m[j] / bc1;
      double vhat = sv[j] / bc2;
      val[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

}  // namespace alvc::nn
