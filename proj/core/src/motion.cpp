#include "alvc/motion.hpp"

#include <stdexcept>

namespace alvc::motion {

using nn::Var;

DeltaT DeltaT::for_step(int step, int num_b) {
  DeltaT dt;
  dt.step = step;
  dt.num_b = num_b;
  dt.bc = num_b - step + 2;
  dt.ct = -(num_b - step + 1);
  dt.cb = -(num_b - step + 2);
  return dt;
}

bool DeltaT::valid() const {
  return step >= 1 && step <= num_b && bc == num_b - step + 2 && ct == -(num_b - step + 1) &&
         cb == -(num_b - step + 2);
}

namespace {

void require_dt_b(int dt_bc) {
  if (dt_bc == 0 || dt_bc == -1) throw std::invalid_argument("quadratic fit: dt_bc makes the system singular");
  if (dt_bc < 2) throw std::invalid_argument("quadratic fit: dt_bc must be >= 2");
}

void require_dt_c(int dt_cb) {
  if (dt_cb == 0 || dt_cb == 1) throw std::invalid_argument("quadratic fit: dt_cb makes the system singular");
  if (dt_cb > -2) throw std::invalid_argument("quadratic fit: dt_cb must be <= -2");
}

}  // namespace

Var fit_accel_from_b(const Var& f_ba, const Var& f_bc, int dt_bc) {
  require_dt_b(dt_bc);
  float t = static_cast<float>(dt_bc);
  float denom = t * t + t;
  return nn::mul_scalar(nn::add(nn::mul_scalar(f_ba, t), f_bc), 2.0f / denom);
}

Var fit_vel_from_b(const Var& f_ba, const Var& f_bc, int dt_bc) {
  require_dt_b(dt_bc);
  float t = static_cast<float>(dt_bc);
  float denom = t * t + t;
  return nn::mul_scalar(nn::add(nn::mul_scalar(f_ba, -t * t), f_bc), 1.0f / denom);
}

Var displace_from_b(const Var& accel, const Var& vel) {
  return nn::add(nn::mul_scalar(accel, 0.5f), vel);
}

Var fit_accel_from_c(const Var& f_cb, const Var& f_cd, int dt_cb) {
  require_dt_c(dt_cb);
  float t = static_cast<float>(dt_cb);
  float denom = t * t - t;
  return nn::mul_scalar(nn::add(nn::mul_scalar(f_cd, -t), f_cb), 2.0f / denom);
}

Var fit_vel_from_c(const Var& f_cb, const Var& f_cd, int dt_cb) {
  require_dt_c(dt_cb);
  float t = static_cast<float>(dt_cb);
  float denom = t * t - t;
  return nn::sub(nn::mul_scalar(f_cd, t * t / denom), nn::mul_scalar(f_cb, 1.0f / denom));
}

Var displace_from_c(const Var& accel, const Var& vel, int dt_ct) {
  if (dt_ct >= 0) throw std::invalid_argument("displace_from_c: dt_ct must be negative");
  float t = static_cast<float>(dt_ct);
  return nn::add(nn::mul_scalar(accel, 0.5f * t * t), nn::mul_scalar(vel, t));
}

std::pair<Var, Var> linear_targets(const Var& f_bc, const Var& f_cb, const DeltaT& dt) {
  if (!dt.valid()) throw std::invalid_argument("linear_targets: invalid DeltaT");
  Var f_bt = nn::mul_scalar(f_bc, 1.0f / static_cast<float>(dt.bc));
  Var f_ct = nn::mul_scalar(f_cb, static_cast<float>(dt.ct) / static_cast<float>(dt.cb));
  return {f_bt, f_ct};
}

Var reverse_flow_var(const Var& fwd) {
  constexpr float kZeroWeight = 1e-6f;
  Var neg = nn::mul_scalar(fwd, -1.0f);
  Var splat = nn::splat_forward(neg, fwd);
  Var acc = nn::slice_c(splat, 0, 2);
  Var wsum = nn::slice_c(splat, 2, 3);
  // per-pixel selection mask, fixed by the forward weights
  const nn::Tensor& wv = wsum.value();
  nn::Tensor mask1(wv.n(), 1, wv.h(), wv.w());
  for (size_t i = 0; i < mask1.size(); ++i) mask1[i] = wv[i] > kZeroWeight ? 1.0f : 0.0f;
  nn::Tensor mask2(wv.n(), 2, wv.h(), wv.w());
  for (int n = 0; n < wv.n(); ++n)
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < wv.h(); ++y)
        for (int x = 0; x < wv.w(); ++x) mask2.at(n, c, y, x) = mask1.at(n, 0, y, x);
  Var m = Var::constant(std::move(mask2));
  Var inv_m = nn::add_scalar(nn::mul_scalar(m, -1.0f), 1.0f);
  nn::Tensor wsafe2(wv.n(), 2, wv.h(), wv.w());
  for (int n = 0; n < wv.n(); ++n)
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < wv.h(); ++y)
        for (int x = 0; x < wv.w(); ++x) wsafe2.at(n, c, y, x) = std::max(wv.at(n, 0, y, x), kZeroWeight);
  // gradient through the weight normalization is dropped; the flow still
  // receives gradient through the splat values and the fallback branch
  Var denom = Var::constant(std::move(wsafe2));
  Var normalized = nn::div(acc, denom);
  return nn::add(nn::mul(normalized, m), nn::mul(neg, inv_m));
}

namespace {

MotionModel pack_model(Var a, Var v, Anchor anchor) {
  MotionModel m;
  m.accel = a.value();
  m.vel = v.value();
  m.anchor = anchor;
  return m;
}

}  // namespace

MotionModel fit_from_b(const FlowField& f_ba, const FlowField& f_bc, int dt_bc) {
  Var a = fit_accel_from_b(Var::constant(f_ba.vec), Var::constant(f_bc.vec), dt_bc);
  Var v = fit_vel_from_b(Var::constant(f_ba.vec), Var::constant(f_bc.vec), dt_bc);
  return pack_model(a, v, Anchor::B);
}

FlowField predict_from_b(const MotionModel& m) {
  if (m.anchor != Anchor::B) throw std::invalid_argument("predict_from_b: model anchored at C");
  return FlowField(displace_from_b(Var::constant(m.accel), Var::constant(m.vel)).value());
}

MotionModel fit_from_c(const FlowField& f_cb, const FlowField& f_cd, int dt_cb) {
  Var a = fit_accel_from_c(Var::constant(f_cb.vec), Var::constant(f_cd.vec), dt_cb);
  Var v = fit_vel_from_c(Var::constant(f_cb.vec), Var::constant(f_cd.vec), dt_cb);
  return pack_model(a, v, Anchor::C);
}

FlowField predict_from_c(const MotionModel& m, int dt_ct) {
  if (m.anchor != Anchor::C) throw std::invalid_argument("predict_from_c: model anchored at B");
  return FlowField(displace_from_c(Var::constant(m.accel), Var::constant(m.vel), dt_ct).value());
}

std::pair<FlowField, FlowField> linear_predict(const FlowField& f_bc, const FlowField& f_cb,
                                               const DeltaT& dt) {
  auto [bt, ct] = linear_targets(Var::constant(f_bc.vec), Var::constant(f_cb.vec), dt);
  return {FlowField(bt.value()), FlowField(ct.value())};
}

FlowField reverse_flow(const FlowField& fwd) {
  if (!fwd.finite()) throw std::invalid_argument("reverse_flow: flow must be finite");
  return FlowField(reverse_flow_var(Var::constant(fwd.vec)).value());
}

}  // namespace alvc::motion
