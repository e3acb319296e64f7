#include "alvc/nn/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace alvc::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                                b.value().shape_str());
}

// Generic unary elementwise op: fwd(v) and dfdx(v, out_v).
template <typename F, typename G>
Var unary_op(const Var& a, F&& fwd, G&& dfdx) {
  const Tensor& av = a.value();
  Tensor out(av.n(), av.c(), av.h(), av.w());
  for (size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  NodePtr an = a.node();
  Tensor saved = out;
  return make_op(std::move(out), {a}, [an, dfdx, saved](Node& self) {
    if (!an->requires_grad) return;
    Tensor& g = an->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(an->value[i], saved[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  NodePtr an = a.node(), bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) an->ensure_grad().accumulate(self.grad);
    if (bn->requires_grad) bn->ensure_grad().accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  NodePtr an = a.node(), bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) an->ensure_grad().accumulate(self.grad);
    if (bn->requires_grad) {
      Tensor& g = bn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  NodePtr an = a.node(), bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      Tensor& g = an->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      Tensor& g = bn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->value[i];
    }
  });
}

Var div(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] /= b.value()[i];
  NodePtr an = a.node(), bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      Tensor& g = an->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / bn->value[i];
    }
    if (bn->requires_grad) {
      Tensor& g = bn->ensure_grad();
      for (size_t i = 0; i < g.size(); ++i) {
        float bv = bn->value[i];
        g[i] -= self.grad[i] * an->value[i] / (bv * bv);
      }
    }
  });
}

Var add_scalar(const Var& a, float s) {
  return unary_op(a, [s](float v) { return v + s; }, [](float, float) { return 1.0f; });
}

Var mul_scalar(const Var& a, float s) {
  return unary_op(a, [s](float v) { return v * s; }, [s](float, float) { return s; });
}

Var relu(const Var& a) {
  return unary_op(a, [](float v) { return v > 0.0f ? v : 0.0f; },
                  [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Var prelu(const Var& a, const Var& slope) {
  const Tensor& av = a.value();
  const Tensor& sv = slope.value();
  if (sv.c() != av.c() || sv.n() != 1 || sv.h() != 1 || sv.w() != 1)
    throw std::invalid_argument("prelu: slope must be (1,C,1,1)");
  Tensor out(av.n(), av.c(), av.h(), av.w());
  int plane = av.h() * av.w();
  for (int n = 0; n < av.n(); ++n)
    for (int c = 0; c < av.c(); ++c) {
      float s = sv[c];
      const float* in = av.data() + av.idx(n, c, 0, 0);
      float* o = out.data() + out.idx(n, c, 0, 0);
      for (int i = 0; i < plane; ++i) o[i] = in[i] > 0.0f ? in[i] : s * in[i];
    }
  NodePtr an = a.node(), sn = slope.node();
  return make_op(std::move(out), {a, slope}, [an, sn, plane](Node& self) {
    const Tensor& x = an->value;
    const Tensor& sv = sn->value;
    if (an->requires_grad) {
      Tensor& g = an->ensure_grad();
      for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
          float s = sv[c];
          size_t base = x.idx(n, c, 0, 0);
          for (int i = 0; i < plane; ++i)
            g[base + i] += self.grad[base + i] * (x[base + i] > 0.0f ? 1.0f : s);
        }
    }
    if (sn->requires_grad) {
      Tensor& g = sn->ensure_grad();
      for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
          size_t base = x.idx(n, c, 0, 0);
          double acc = 0.0;
          for (int i = 0; i < plane; ++i)
            if (x[base + i] <= 0.0f) acc += static_cast<double>(self.grad[base + i]) * x[base + i];
          g[c] += static_cast<float>(acc);
        }
    }
  });
}

Var sigmoid(const Var& a) {
  return unary_op(a, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
                  [](float, float y) { return y * (1.0f - y); });
}

Var tanh_op(const Var& a) {
  return unary_op(a, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

Var softplus(const Var& a) {
  return unary_op(
      a, [](float v) { return v > 20.0f ? v : std::log1p(std::exp(v)); },
      [](float x, float) { return 1.0f / (1.0f + std::exp(-x)); });
}

Var erf_op(const Var& a) {
  constexpr float kTwoOverSqrtPi = 1.1283791670955126f;
  return unary_op(a, [](float v) { return std::erf(v); },
                  [](float x, float) { return kTwoOverSqrtPi * std::exp(-x * x); });
}

Var log_op(const Var& a) {
  return unary_op(a, [](float v) { return std::log(v); }, [](float x, float) { return 1.0f / x; });
}

Var pow_const(const Var& a, float p) {
  return unary_op(
      a, [p](float v) { return std::pow(std::max(v, 1e-6f), p); },
      [p](float x, float y) {
        float xf = std::max(x, 1e-6f);
        return x > 1e-6f ? p * y / xf : 0.0f;
      });
}

Var clamp_min(const Var& a, float m) {
  return unary_op(a, [m](float v) { return v > m ? v : m; },
                  [m](float x, float) { return x > m ? 1.0f : 0.0f; });
}

Var clamp01(const Var& a) {
  return unary_op(a, [](float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); },
                  [](float x, float) { return (x >= 0.0f && x <= 1.0f) ? 1.0f : 0.0f; });
}

Var scaled_tanh(const Var& a, float bound) {
  return unary_op(a, [bound](float v) { return bound * std::tanh(v / bound); },
                  [bound](float x, float) {
                    float t = std::tanh(x / bound);
                    return 1.0f - t * t;
                  });
}

Var concat_c(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_c: empty input");
  int n = xs[0].n(), h = xs[0].h(), w = xs[0].w(), ctot = 0;
  for (const auto& x : xs) {
    if (x.n() != n || x.h() != h || x.w() != w) throw std::invalid_argument("concat_c: incompatible shapes");
    ctot += x.c();
  }
  Tensor out(n, ctot, h, w);
  int plane = h * w;
  int coff = 0;
  for (const auto& x : xs) {
    for (int b = 0; b < n; ++b)
      std::copy(x.value().data() + x.value().idx(b, 0, 0, 0),
                x.value().data() + x.value().idx(b, 0, 0, 0) + static_cast<size_t>(x.c()) * plane,
                out.data() + out.idx(b, coff, 0, 0));
    coff += x.c();
  }
  std::vector<NodePtr> nodes;
  std::vector<int> chans;
  for (const auto& x : xs) {
    nodes.push_back(x.node());
    chans.push_back(x.c());
  }
  return make_op(std::move(out), xs, [nodes, chans, n, plane](Node& self) {
    int coff = 0;
    for (size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k]->requires_grad) {
        Tensor& g = nodes[k]->ensure_grad();
        for (int b = 0; b < n; ++b) {
          const float* src = self.grad.data() + self.grad.idx(b, coff, 0, 0);
          float* dst = g.data() + g.idx(b, 0, 0, 0);
          size_t cnt = static_cast<size_t>(chans[k]) * plane;
          for (size_t i = 0; i < cnt; ++i) dst[i] += src[i];
        }
      }
      coff += chans[k];
    }
  });
}

Var slice_c(const Var& x, int c0, int c1) {
  const Tensor& xv = x.value();
  if (c0 < 0 || c1 > xv.c() || c0 >= c1) throw std::invalid_argument("slice_c: bad channel range");
  Tensor out(xv.n(), c1 - c0, xv.h(), xv.w());
  int plane = xv.h() * xv.w();
  for (int b = 0; b < xv.n(); ++b)
    std::copy(xv.data() + xv.idx(b, c0, 0, 0), xv.data() + xv.idx(b, c0, 0, 0) + out.size() / xv.n(),
              out.data() + out.idx(b, 0, 0, 0));
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn, c0, plane](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    for (int b = 0; b < self.grad.n(); ++b) {
      const float* src = self.grad.data() + self.grad.idx(b, 0, 0, 0);
      float* dst = g.data() + g.idx(b, c0, 0, 0);
      size_t cnt = static_cast<size_t>(self.grad.c()) * plane;
      for (size_t i = 0; i < cnt; ++i) dst[i] += src[i];
    }
  });
}

Var sum_all(const Var& x) {
  Tensor out = Tensor::scalar(static_cast<float>(x.value().sum()));
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    float gv = self.grad[0];
    for (size_t i = 0; i < g.size(); ++i) g[i] += gv;
  });
}

Var mean_all(const Var& x) { return mul_scalar(sum_all(x), 1.0f / static_cast<float>(x.value().size())); }

Var mean_hw(const Var& x) {
  const Tensor& xv = x.value();
  int plane = xv.h() * xv.w();
  Tensor out(xv.n(), xv.c(), 1, 1);
  for (int n = 0; n < xv.n(); ++n)
    for (int c = 0; c < xv.c(); ++c) {
      double acc = 0.0;
      const float* p = xv.data() + xv.idx(n, c, 0, 0);
      for (int i = 0; i < plane; ++i) acc += p[i];
      out.at(n, c, 0, 0) = static_cast<float>(acc / plane);
    }
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn, plane](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    for (int n = 0; n < self.grad.n(); ++n)
      for (int c = 0; c < self.grad.c(); ++c) {
        float gv = self.grad.at(n, c, 0, 0) / plane;
        float* p = g.data() + g.idx(n, c, 0, 0);
        for (int i = 0; i < plane; ++i) p[i] += gv;
      }
  });
}

// ---------------------------------------------------------------------------
// conv2d via im2col + GEMM

namespace {

struct ConvDims {
  int N, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K, M;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  ConvDims d;
  d.N = x.n();
  d.Cin = x.c();
  d.H = x.h();
  d.W = x.w();
  d.Cout = w.n();
  d.kh = w.h();
  d.kw = w.w();
  d.stride = stride;
  d.pad = pad;
  if (w.c() != d.Cin) throw std::invalid_argument("conv2d: channel mismatch");
  d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
  if (d.Ho <= 0 || d.Wo <= 0) throw std::invalid_argument("conv2d: output would be empty");
  d.K = d.Cin * d.kh * d.kw;
  d.M = d.Ho * d.Wo;
  return d;
}

void im2col(const Tensor& x, int n, const ConvDims& d, RowMat& col) {
  for (int cin = 0; cin < d.Cin; ++cin)
    for (int ky = 0; ky < d.kh; ++ky)
      for (int kx = 0; kx < d.kw; ++kx) {
        int k = (cin * d.kh + ky) * d.kw + kx;
        float* row = col.data() + static_cast<size_t>(k) * d.M;
        for (int oy = 0; oy < d.Ho; ++oy) {
          int iy = oy * d.stride + ky - d.pad;
          float* dst = row + static_cast<size_t>(oy) * d.Wo;
          if (iy < 0 || iy >= d.H) {
            std::fill(dst, dst + d.Wo, 0.0f);
            continue;
          }
          const float* src = x.data() + x.idx(n, cin, iy, 0);
          for (int ox = 0; ox < d.Wo; ++ox) {
            int ix = ox * d.stride + kx - d.pad;
            dst[ox] = (ix >= 0 && ix < d.W) ? src[ix] : 0.0f;
          }
        }
      }
}

void col2im_accum(const RowMat& colgrad, int n, const ConvDims& d, Tensor& dx) {
  for (int cin = 0; cin < d.Cin; ++cin)
    for (int ky = 0; ky < d.kh; ++ky)
      for (int kx = 0; kx < d.kw; ++kx) {
        int k = (cin * d.kh + ky) * d.kw + kx;
        const float* row = colgrad.data() + static_cast<size_t>(k) * d.M;
        for (int oy = 0; oy < d.Ho; ++oy) {
          int iy = oy * d.stride + ky - d.pad;
          if (iy < 0 || iy >= d.H) continue;
          const float* src = row + static_cast<size_t>(oy) * d.Wo;
          float* dst = dx.data() + dx.idx(n, cin, iy, 0);
          for (int ox = 0; ox < d.Wo; ++ox) {
            int ix = ox * d.stride + kx - d.pad;
            if (ix >= 0 && ix < d.W) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  ConvDims d = conv_dims(xv, wv, stride, pad);
  if (bv.c() != d.Cout || bv.size() != static_cast<size_t>(d.Cout))
    throw std::invalid_argument("conv2d: bias must be (1,Cout,1,1)");

  Tensor out(d.N, d.Cout, d.Ho, d.Wo);
  RowMat col(d.K, d.M);
  CMapMat wm(wv.data(), d.Cout, d.K);
  for (int n = 0; n < d.N; ++n) {
    im2col(xv, n, d, col);
    MapMat om(out.data() + out.idx(n, 0, 0, 0), d.Cout, d.M);
    om.noalias() = wm * col;
    for (int co = 0; co < d.Cout; ++co) om.row(co).array() += bv[co];
  }

  NodePtr xn = x.node(), wn = w.node(), bn = b.node();
  return make_op(std::move(out), {x, w, b}, [xn, wn, bn, d](Node& self) {
    RowMat col(d.K, d.M);
    for (int n = 0; n < d.N; ++n) {
      CMapMat dy(self.grad.data() + self.grad.idx(n, 0, 0, 0), d.Cout, d.M);
      if (wn->requires_grad || xn->requires_grad) im2col(xn->value, n, d, col);
      if (wn->requires_grad) {
        MapMat dw(wn->ensure_grad().data(), d.Cout, d.K);
        dw.noalias() += dy * col.transpose();
      }
      if (bn->requires_grad) {
        Tensor& db = bn->ensure_grad();
        for (int co = 0; co < d.Cout; ++co) db[co] += dy.row(co).sum();
      }
      if (xn->requires_grad) {
        CMapMat wm(wn->value.data(), d.Cout, d.K);
        RowMat colgrad = wm.transpose() * dy;
        col2im_accum(colgrad, n, d, xn->ensure_grad());
      }
    }
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& xv = x.value();
  int Ho = xv.h() / 2, Wo = xv.w() / 2;
  if (Ho == 0 || Wo == 0) throw std::invalid_argument("avg_pool2: input too small");
  Tensor out(xv.n(), xv.c(), Ho, Wo);
  for (int n = 0; n < xv.n(); ++n)
    for (int c = 0; c < xv.c(); ++c)
      for (int y = 0; y < Ho; ++y)
        for (int xq = 0; xq < Wo; ++xq)
          out.at(n, c, y, xq) = 0.25f * (xv.at(n, c, 2 * y, 2 * xq) + xv.at(n, c, 2 * y, 2 * xq + 1) +
                                         xv.at(n, c, 2 * y + 1, 2 * xq) + xv.at(n, c, 2 * y + 1, 2 * xq + 1));
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn, Ho, Wo](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    for (int n = 0; n < self.grad.n(); ++n)
      for (int c = 0; c < self.grad.c(); ++c)
        for (int y = 0; y < Ho; ++y)
          for (int xq = 0; xq < Wo; ++xq) {
            float gv = 0.25f * self.grad.at(n, c, y, xq);
            g.at(n, c, 2 * y, 2 * xq) += gv;
            g.at(n, c, 2 * y, 2 * xq + 1) += gv;
            g.at(n, c, 2 * y + 1, 2 * xq) += gv;
            g.at(n, c, 2 * y + 1, 2 * xq + 1) += gv;
          }
  });
}

Var up_nearest2(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.n(), xv.c(), xv.h() * 2, xv.w() * 2);
  for (int n = 0; n < xv.n(); ++n)
    for (int c = 0; c < xv.c(); ++c)
      for (int y = 0; y < out.h(); ++y)
        for (int xq = 0; xq < out.w(); ++xq) out.at(n, c, y, xq) = xv.at(n, c, y / 2, xq / 2);
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    for (int n = 0; n < self.grad.n(); ++n)
      for (int c = 0; c < self.grad.c(); ++c)
        for (int y = 0; y < self.grad.h(); ++y)
          for (int xq = 0; xq < self.grad.w(); ++xq) g.at(n, c, y / 2, xq / 2) += self.grad.at(n, c, y, xq);
  });
}

namespace {

struct BilinearTap {
  int i0, i1;
  float w1;  // weight of the upper tap; lower gets 1 - w1
};

inline BilinearTap up2_tap(int o, int limit) {
  float src = (o + 0.5f) * 0.5f - 0.5f;
  BilinearTap t;
  if (src <= 0.0f) {
    t.i0 = t.i1 = 0;
    t.w1 = 0.0f;
  } else if (src >= limit - 1) {
    t.i0 = t.i1 = limit - 1;
    t.w1 = 0.0f;
  } else {
    t.i0 = static_cast<int>(src);
    t.i1 = t.i0 + 1;
    t.w1 = src - t.i0;
  }
  return t;
}

}  // namespace

Var up_bilinear2(const Var& x) {
  const Tensor& xv = x.value();
  int Ho = xv.h() * 2, Wo = xv.w() * 2;
  Tensor out(xv.n(), xv.c(), Ho, Wo);
  for (int n = 0; n < xv.n(); ++n)
    for (int c = 0; c < xv.c(); ++c)
      for (int y = 0; y < Ho; ++y) {
        BilinearTap ty = up2_tap(y, xv.h());
        for (int xq = 0; xq < Wo; ++xq) {
          BilinearTap tx = up2_tap(xq, xv.w());
          float v0 = xv.at(n, c, ty.i0, tx.i0) * (1 - tx.w1) + xv.at(n, c, ty.i0, tx.i1) * tx.w1;
          float v1 = xv.at(n, c, ty.i1, tx.i0) * (1 - tx.w1) + xv.at(n, c, ty.i1, tx.i1) * tx.w1;
          out.at(n, c, y, xq) = v0 * (1 - ty.w1) + v1 * ty.w1;
        }
      }
  NodePtr xn = x.node();
  return make_op(std::move(out), {x}, [xn, Ho, Wo](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    for (int n = 0; n < self.grad.n(); ++n)
      for (int c = 0; c < self.grad.c(); ++c)
        for (int y = 0; y < Ho; ++y) {
          BilinearTap ty = up2_tap(y, g.h());
          for (int xq = 0; xq < Wo; ++xq) {
            BilinearTap tx = up2_tap(xq, g.w());
            float gv = self.grad.at(n, c, y, xq);
            g.at(n, c, ty.i0, tx.i0) += gv * (1 - ty.w1) * (1 - tx.w1);
            g.at(n, c, ty.i0, tx.i1) += gv * (1 - ty.w1) * tx.w1;
            g.at(n, c, ty.i1, tx.i0) += gv * ty.w1 * (1 - tx.w1);
            g.at(n, c, ty.i1, tx.i1) += gv * ty.w1 * tx.w1;
          }
        }
  });
}

// ---------------------------------------------------------------------------
// warp / splat

Var warp_bilinear(const Var& img, const Var& flow) {
  const Tensor& iv = img.value();
  const Tensor& fv = flow.value();
  if (fv.c() != 2 || fv.n() != iv.n() || fv.h() != iv.h() || fv.w() != iv.w())
    throw std::invalid_argument("warp_bilinear: flow must be (N,2,H,W) matching the image");
  int N = iv.n(), C = iv.c(), H = iv.h(), W = iv.w();
  Tensor out(N, C, H, W);
  for (int n = 0; n < N; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        float px = x + fv.at(n, 0, y, x);
        float py = y + fv.at(n, 1, y, x);
        float cx = std::min(std::max(px, 0.0f), static_cast<float>(W - 1));
        float cy = std::min(std::max(py, 0.0f), static_cast<float>(H - 1));
        int x0 = static_cast<int>(cx);
        int y0 = static_cast<int>(cy);
        int x1 = std::min(x0 + 1, W - 1);
        int y1 = std::min(y0 + 1, H - 1);
        float fx = cx - x0, fy = cy - y0;
        for (int c = 0; c < C; ++c) {
          float v0 = iv.at(n, c, y0, x0) * (1 - fx) + iv.at(n, c, y0, x1) * fx;
          float v1 = iv.at(n, c, y1, x0) * (1 - fx) + iv.at(n, c, y1, x1) * fx;
          out.at(n, c, y, x) = v0 * (1 - fy) + v1 * fy;
        }
      }
  NodePtr in = img.node(), fn = flow.node();
  return make_op(std::move(out), {img, flow}, [in, fn, N, C, H, W](Node& self) {
    const Tensor& iv = in->value;
    const Tensor& fv = fn->value;
    Tensor* dimg = in->requires_grad ? &in->ensure_grad() : nullptr;
    Tensor* dflow = fn->requires_grad ? &fn->ensure_grad() : nullptr;
    for (int n = 0; n < N; ++n)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          float px = x + fv.at(n, 0, y, x);
          float py = y + fv.at(n, 1, y, x);
          bool inx = px > 0.0f && px < W - 1;
          bool iny = py > 0.0f && py < H - 1;
          float cx = std::min(std::max(px, 0.0f), static_cast<float>(W - 1));
          float cy = std::min(std::max(py, 0.0f), static_cast<float>(H - 1));
          int x0 = static_cast<int>(cx);
          int y0 = static_cast<int>(cy);
          int x1 = std::min(x0 + 1, W - 1);
          int y1 = std::min(y0 + 1, H - 1);
          float fx = cx - x0, fy = cy - y0;
          float gx = 0.0f, gy = 0.0f;
          for (int c = 0; c < C; ++c) {
            float gv = self.grad.at(n, c, y, x);
            if (gv == 0.0f && !dflow) continue;
            float i00 = iv.at(n, c, y0, x0), i01 = iv.at(n, c, y0, x1);
            float i10 = iv.at(n, c, y1, x0), i11 = iv.at(n, c, y1, x1);
            if (dimg) {
              dimg->at(n, c, y0, x0) += gv * (1 - fx) * (1 - fy);
              dimg->at(n, c, y0, x1) += gv * fx * (1 - fy);
              dimg->at(n, c, y1, x0) += gv * (1 - fx) * fy;
              dimg->at(n, c, y1, x1) += gv * fx * fy;
            }
            gx += gv * ((i01 - i00) * (1 - fy) + (i11 - i10) * fy);
            gy += gv * ((i10 - i00) * (1 - fx) + (i11 - i01) * fx);
          }
          if (dflow) {
            if (inx) dflow->at(n, 0, y, x) += gx;
            if (iny) dflow->at(n, 1, y, x) += gy;
          }
        }
  });
}

Var splat_forward(const Var& values, const Var& flow) {
  const Tensor& vv = values.value();
  const Tensor& fv = flow.value();
  if (fv.c() != 2 || fv.n() != vv.n() || fv.h() != vv.h() || fv.w() != vv.w())
    throw std::invalid_argument("splat_forward: flow must be (N,2,H,W) matching values");
  int N = vv.n(), C = vv.c(), H = vv.h(), W = vv.w();
  Tensor out(N, C + 1, H, W);
  for (int n = 0; n < N; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        float tx = std::min(std::max(x + fv.at(n, 0, y, x), 0.0f), static_cast<float>(W - 1));
        float ty = std::min(std::max(y + fv.at(n, 1, y, x), 0.0f), static_cast<float>(H - 1));
        int x0 = static_cast<int>(tx);
        int y0 = static_cast<int>(ty);
        int x1 = std::min(x0 + 1, W - 1);
        int y1 = std::min(y0 + 1, H - 1);
        float fx = tx - x0, fy = ty - y0;
        const float w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
        for (int c = 0; c < C; ++c) {
          float v = vv.at(n, c, y, x);
          out.at(n, c, y0, x0) += v * w00;
          out.at(n, c, y0, x1) += v * w01;
          out.at(n, c, y1, x0) += v * w10;
          out.at(n, c, y1, x1) += v * w11;
        }
        out.at(n, C, y0, x0) += w00;
        out.at(n, C, y0, x1) += w01;
        out.at(n, C, y1, x0) += w10;
        out.at(n, C, y1, x1) += w11;
      }
  NodePtr vn = values.node(), fn = flow.node();
  return make_op(std::move(out), {values, flow}, [vn, fn, N, C, H, W](Node& self) {
    const Tensor& vv = vn->value;
    const Tensor& fv = fn->value;
    Tensor* dval = vn->requires_grad ? &vn->ensure_grad() : nullptr;
    Tensor* dflow = fn->requires_grad ? &fn->ensure_grad() : nullptr;
    for (int n = 0; n < N; ++n)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          float px = x + fv.at(n, 0, y, x);
          float py = y + fv.at(n, 1, y, x);
          bool inx = px > 0.0f && px < W - 1;
          bool iny = py > 0.0f && py < H - 1;
          float tx = std::min(std::max(px, 0.0f), static_cast<float>(W - 1));
          float ty = std::min(std::max(py, 0.0f), static_cast<float>(H - 1));
          int x0 = static_cast<int>(tx);
          int y0 = static_cast<int>(ty);
          int x1 = std::min(x0 + 1, W - 1);
          int y1 = std::min(y0 + 1, H - 1);
          float fx = tx - x0, fy = ty - y0;
          const float w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
          // d weight / d tx and / d ty per tap
          const float dwx[4] = {-(1 - fy), (1 - fy), -fy, fy};
          const float dwy[4] = {-(1 - fx), -fx, (1 - fx), fx};
          float gx = 0.0f, gy = 0.0f;
          for (int c = 0; c <= C; ++c) {
            float g00 = self.grad.at(n, c, y0, x0), g01 = self.grad.at(n, c, y0, x1);
            float g10 = self.grad.at(n, c, y1, x0), g11 = self.grad.at(n, c, y1, x1);
            float v = (c < C) ? vv.at(n, c, y, x) : 1.0f;
            if (c < C && dval)
              dval->at(n, c, y, x) += g00 * w00 + g01 * w01 + g10 * w10 + g11 * w11;
            if (dflow) {
              gx += v * (g00 * dwx[0] + g01 * dwx[1] + g10 * dwx[2] + g11 * dwx[3]);
              gy += v * (g00 * dwy[0] + g01 * dwy[1] + g10 * dwy[2] + g11 * dwy[3]);
            }
          }
          if (dflow) {
            if (inx) dflow->at(n, 0, y, x) += gx;
            if (iny) dflow->at(n, 1, y, x) += gy;
          }
        }
  });
}

Var blur_valid(const Var& x, const std::vector<float>& kernel1d) {
  const Tensor& xv = x.value();
  int L = static_cast<int>(kernel1d.size());
  int Ho = xv.h() - L + 1, Wo = xv.w() - L + 1;
  if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("blur_valid: input smaller than kernel");
  int N = xv.n(), C = xv.c();
  // horizontal pass then vertical pass
  Tensor tmp(N, C, xv.h(), Wo);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < xv.h(); ++y)
        for (int o = 0; o < Wo; ++o) {
          float acc = 0.0f;
          for (int k = 0; k < L; ++k) acc += kernel1d[k] * xv.at(n, c, y, o + k);
          tmp.at(n, c, y, o) = acc;
        }
  Tensor out(N, C, Ho, Wo);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int o = 0; o < Ho; ++o)
        for (int xq = 0; xq < Wo; ++xq) {
          float acc = 0.0f;
          for (int k = 0; k < L; ++k) acc += kernel1d[k] * tmp.at(n, c, o + k, xq);
          out.at(n, c, o, xq) = acc;
        }
  NodePtr xn = x.node();
  std::vector<float> kern = kernel1d;
  return make_op(std::move(out), {x}, [xn, kern, L, Ho, Wo, N, C](Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->ensure_grad();
    Tensor dtmp(N, C, g.h(), Wo);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int o = 0; o < Ho; ++o)
          for (int xq = 0; xq < Wo; ++xq) {
            float gv = self.grad.at(n, c, o, xq);
            for (int k = 0; k < L; ++k) dtmp.at(n, c, o + k, xq) += kern[k] * gv;
          }
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int y = 0; y < g.h(); ++y)
          for (int o = 0; o < Wo; ++o) {
            float gv = dtmp.at(n, c, y, o);
            for (int k = 0; k < L; ++k) g.at(n, c, y, o + k) += kern[k] * gv;
          }
  });
}

Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma) {
  constexpr float kInvSqrt2 = 0.70710678118654752440f;
  constexpr float kInvLn2 = 1.4426950408889634f;
  Var d = sub(y, mu);
  Var s = mul_scalar(sigma, 1.0f / kInvSqrt2);  // sigma * sqrt(2)
  Var hi = erf_op(div(add_scalar(d, 0.5f), s));
  Var lo = erf_op(div(add_scalar(d, -0.5f), s));
  Var p = mul_scalar(sub(hi, lo), 0.5f);
  return mul_scalar(log_op(clamp_min(p, 0x1p-16f)), -kInvLn2);
}

// ---------------------------------------------------------------------------
// MS-SSIM

namespace {

std::vector<float> gaussian_kernel11() {
  const double sigma = 1.5;
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    double d = i - 5.0;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  std::vector<float> out(11);
  for (int i = 0; i < 11; ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

}  // namespace

Var ms_ssim_var(const Var& a, const Var& b, int scales) {
  if (scales < 1 || scales > 5) throw std::invalid_argument("ms_ssim: scales must be in 1..5");
  static const float kWeights[5] = {0.0448f, 0.2856f, 0.3001f, 0.2363f, 0.1333f};
  static const std::vector<float> kKernel = gaussian_kernel11();
  const float c1 = 0.01f * 0.01f, c2 = 0.03f * 0.03f;
  float wsum = 0.0f;
  for (int j = 0; j < scales; ++j) wsum += kWeights[j];

  Var xa = a, xb = b;
  Var acc;
  for (int j = 0; j < scales; ++j) {
    if (j > 0) {
      xa = avg_pool2(xa);
      xb = avg_pool2(xb);
    }
    if (xa.h() < 11 || xa.w() < 11)
      throw std::invalid_argument(
          "ms_ssim: frame too small for the requested number of scales; reduce `scales`");
    Var mu1 = blur_valid(xa, kKernel);
    Var mu2 = blur_valid(xb, kKernel);
    Var mu1mu2 = mul(mu1, mu2);
    Var s11 = sub(blur_valid(mul(xa, xa), kKernel), mul(mu1, mu1));
    Var s22 = sub(blur_valid(mul(xb, xb), kKernel), mul(mu2, mu2));
    Var s12 = sub(blur_valid(mul(xa, xb), kKernel), mu1mu2);
    Var cs = div(add_scalar(mul_scalar(s12, 2.0f), c2), add_scalar(add(s11, s22), c2));
    float wj = kWeights[j] / wsum;
    // reduce per channel first, combine across scales, then average channels
    Var term;
    if (j + 1 < scales) {
      term = pow_const(relu(mean_hw(cs)), wj);
    } else {
      Var l = div(add_scalar(mul_scalar(mu1mu2, 2.0f), c1),
                  add_scalar(add(mul(mu1, mu1), mul(mu2, mu2)), c1));
      term = pow_const(relu(mean_hw(mul(l, cs))), wj);
    }
    acc = acc.defined() ? mul(acc, term) : term;
  }
  return mean_all(acc);
}

}  // namespace alvc::nn
