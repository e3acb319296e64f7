#include "alvc/predict.hpp"

#include <stdexcept>

namespace alvc::predict {

using namespace nn;

Var tile3(const Var& mask) { return concat_c({mask, mask, mask}); }

Var merged_prediction(const CodecModel& model, const Var& warped1, const Var& warped2, const Var& m1,
                      const Var& m2, const Var& f1, const Var& f2) {
  Var mw1 = mul(warped1, tile3(m1));
  Var mw2 = mul(warped2, tile3(m2));
  Var base = add(mw1, mw2);
  Var x = concat_c({mw1, mw2, m1, m2, f1, f2});
  return clamp01(add(base, model.merge.forward(x)));
}

Var refine_flow(const Var& f, const Var& offsets, const Var& df) {
  return add(warp_bilinear(f, offsets), df);
}

PPredVars predict_p(const CodecModel& model, const Var& ref1, const Var& ref2,
                    nets::RecPredState& state) {
  if (!model.cfg.in_loop_prediction)
    throw std::logic_error("predict_p: model was built without the prediction networks");
  auto out = model.recpred.forward(ref1, ref2, state);
  Var w1 = warp_bilinear(ref1, out.f1);
  Var w2 = warp_bilinear(ref2, out.f2);
  PPredVars r;
  r.pred = merged_prediction(model, w1, w2, out.m1, out.m2, out.f1, out.f2);
  r.f1 = out.f1;
  r.f2 = out.f2;
  r.m1 = out.m1;
  r.m2 = out.m2;
  return r;
}

BPredVars predict_b(const CodecModel& model, const Var& ref_a, const Var& ref_b, const Var& ref_c,
                    const Var& ref_d, const motion::DeltaT& dt, const OracleFlows* oracle) {
  if (!model.cfg.in_loop_prediction)
    throw std::logic_error("predict_b: model was built without the prediction networks");
  if (!dt.valid()) throw std::invalid_argument("predict_b: inconsistent frame-distance bookkeeping");

  Var f_ba, f_bc, f_cb, f_cd;
  if (oracle) {
    f_ba = oracle->f_ba;
    f_bc = oracle->f_bc;
    f_cb = oracle->f_cb;
    f_cd = oracle->f_cd;
  } else {
    f_ba = model.flownet.estimate(ref_b, ref_a);
    f_bc = model.flownet.estimate(ref_b, ref_c);
    f_cb = model.flownet.estimate(ref_c, ref_b);
    f_cd = model.flownet.estimate(ref_c, ref_d);
  }

  Var f_bt, f_ct;
  if (model.cfg.motion_model == nets::MotionMode::quadratic) {
    Var a_b = motion::fit_accel_from_b(f_ba, f_bc, dt.bc);
    Var v_b = motion::fit_vel_from_b(f_ba, f_bc, dt.bc);
    f_bt = motion::displace_from_b(a_b, v_b);
    Var a_c = motion::fit_accel_from_c(f_cb, f_cd, dt.cb);
    Var v_c = motion::fit_vel_from_c(f_cb, f_cd, dt.cb);
    f_ct = motion::displace_from_c(a_c, v_c, dt.ct);
  } else {
    auto [bt, ct] = motion::linear_targets(f_bc, f_cb, dt);
    f_bt = bt;
    f_ct = ct;
  }

  Var f_tb = motion::reverse_flow_var(f_bt);
  Var f_tc = motion::reverse_flow_var(f_ct);
  auto ref = model.refine.forward(ref_b, ref_c, f_tb, f_tc, f_bc, f_cb);
  Var f_tb2 = refine_flow(f_tb, ref.offs_b, ref.df_b);
  Var f_tc2 = refine_flow(f_tc, ref.offs_c, ref.df_c);

  Var w_b = warp_bilinear(ref_b, f_tb2);
  Var w_c = warp_bilinear(ref_c, f_tc2);
  BPredVars r;
  r.pred = merged_prediction(model, w_b, w_c, ref.m_b, ref.m_c, f_tb2, f_tc2);
  r.f_tb = f_tb2;
  r.f_tc = f_tc2;
  r.m_b = ref.m_b;
  r.m_c = ref.m_c;
  r.f_bt_pre = f_bt;
  r.f_ct_pre = f_ct;
  return r;
}

PPrediction predict_p_frame(const CodecModel& model, const Frame& ref1, const Frame& ref2,
                            nets::RecPredState& state) {
  if (ref1.height() != ref2.height() || ref1.width() != ref2.width())
    throw std::invalid_argument("predict_p_frame: reference dimension mismatch");
  auto out = predict_p(model, Var::constant(ref1.pix), Var::constant(ref2.pix), state);
  PPrediction p;
  p.frame = Frame(out.pred.value(), FrameRole::predicted);
  p.f1 = FlowField(out.f1.value());
  p.f2 = FlowField(out.f2.value());
  p.m1 = MaskField(out.m1.value());
  p.m2 = MaskField(out.m2.value());
  return p;
}

BPrediction predict_b_frame(const CodecModel& model, const Frame& ref_a, const Frame& ref_b,
                            const Frame& ref_c, const Frame& ref_d, const motion::DeltaT& dt,
                            const OracleFlows* oracle) {
  auto out = predict_b(model, Var::constant(ref_a.pix), Var::constant(ref_b.pix),
                       Var::constant(ref_c.pix), Var::constant(ref_d.pix), dt, oracle);
  BPrediction p;
  p.frame = Frame(out.pred.value(), FrameRole::predicted);
  p.f_tb = FlowField(out.f_tb.value());
  p.f_tc = FlowField(out.f_tc.value());
  p.m_b = MaskField(out.m_b.value());
  p.m_c = MaskField(out.m_c.value());
  p.f_bt_pre = FlowField(out.f_bt_pre.value());
  p.f_ct_pre = FlowField(out.f_ct_pre.value());
  return p;
}

}  // namespace alvc::predict
