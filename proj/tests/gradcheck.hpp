#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>

#include "alvc/nn/ops.hpp"
#include "alvc/nn/rng.hpp"

namespace testutil {

using alvc::nn::Rng;
using alvc::nn::Tensor;
using alvc::nn::Var;

inline Tensor random_tensor(int n, int c, int h, int w, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(n, c, h, w);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Scalar loss that projects a tensor output onto fixed random weights, so
// every element of the output influences the loss in a distinct direction.
inline Var project(const Var& out, uint64_t seed = 7) {
  Rng rng(seed);
  Tensor r(out.n(), out.c(), out.h(), out.w());
  for (size_t i = 0; i < r.size(); ++i) r[i] = rng.uniform(-1.0f, 1.0f);
  return alvc::nn::sum_all(alvc::nn::mul(out, Var::constant(std::move(r))));
}

// Central-difference check of d(loss)/d(x) for every element of x.
// `make_loss` must rebuild the graph from the leaf each call.
inline void check_grad(Var x, const std::function<Var(Var)>& make_loss, float eps, float rel_tol,
                       float abs_tol) {
  x.zero_grad();
  Var loss = make_loss(x);
  alvc::nn::backward(loss);
  Tensor analytic = x.grad();
  Tensor& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) {
    float orig = xv[i];
    xv[i] = orig + eps;
    double lp = make_loss(x).value()[0];
    xv[i] = orig - eps;
    double lm = make_loss(x).value()[0];
    xv[i] = orig;
    double fd = (lp - lm) / (2.0 * eps);
    double an = analytic[i];
    double err = std::fabs(fd - an);
    double tol = abs_tol + rel_tol * std::max(std::fabs(fd), std::fabs(an));
    if (err > tol) {
      CAPTURE(i);
      CAPTURE(fd);
      CAPTURE(an);
      CHECK(err <= tol);
      return;
    }
  }
  CHECK(true);
}

}  // namespace testutil
