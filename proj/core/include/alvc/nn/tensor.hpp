#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace alvc::nn {

// Dense float32 tensor in NCHW layout. Scalars are (1,1,1,1), per-channel
// vectors are (1,C,1,1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w), data_(static_cast<size_t>(n) * c * h * w, 0.0f) {
    assert(n > 0 && c > 0 && h > 0 && w > 0);
  }

  static Tensor scalar(float v) {
    Tensor t(1, 1, 1, 1);
    t.data_[0] = v;
    return t;
  }
  static Tensor full(int n, int c, int h, int w, float v) {
    Tensor t(n, c, h, w);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  std::string shape_str() const;

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& at(int n, int c, int y, int x) { return data_[idx(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data_[idx(n, c, y, x)]; }
  size_t idx(int n, int c, int y, int x) const {
    return ((static_cast<size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0f); }

  // Checked elementwise accumulate, used by gradient plumbing.
  void accumulate(const Tensor& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  }

  bool all_finite() const;
  double sum() const;  // double accumulation, deterministic serial order

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> data_;
};

}  // namespace alvc::nn
