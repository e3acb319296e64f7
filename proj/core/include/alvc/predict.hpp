#pragma once

#include "alvc/frame.hpp"
#include "alvc/motion.hpp"
#include "alvc/nets.hpp"

namespace alvc::predict {

using nets::CodecModel;
using nn::Var;

// Replicates a single-channel mask across the three color planes.
Var tile3(const Var& mask);

// Mask-weighted warped references plus the merge CNN's residual, clamped.
Var merged_prediction(const CodecModel& model, const Var& warped1, const Var& warped2, const Var& m1,
                      const Var& m2, const Var& f1, const Var& f2);

// f'(x,y) = f(x + dx, y + dy) + df, sampled bilinearly.
Var refine_flow(const Var& f, const Var& offsets, const Var& df);

struct PPredVars {
  Var pred, f1, f2, m1, m2;
};
// Advances the recurrent state in place; state must be zero-initialized at
// the start of each group.
PPredVars predict_p(const CodecModel& model, const Var& ref1, const Var& ref2, nets::RecPredState& state);

struct OracleFlows {
  Var f_ba, f_bc, f_cb, f_cd;
};

struct BPredVars {
  Var pred, f_tb, f_tc, m_b, m_c;
  Var f_bt_pre, f_ct_pre;  // target flows before reversal and refinement
};
// Bi-directional prediction from four compressed references. `oracle`
// replaces the internal flow estimator (unit-test hook).
BPredVars predict_b(const CodecModel& model, const Var& ref_a, const Var& ref_b, const Var& ref_c,
                    const Var& ref_d, const motion::DeltaT& dt, const OracleFlows* oracle = nullptr);

// Frame-level wrappers.
struct PPrediction {
  Frame frame;
  FlowField f1, f2;
  MaskField m1, m2;
};
PPrediction predict_p_frame(const CodecModel& model, const Frame& ref1, const Frame& ref2,
                            nets::RecPredState& state);

struct BPrediction {
  Frame frame;
  FlowField f_tb, f_tc;
  MaskField m_b, m_c;
  FlowField f_bt_pre, f_ct_pre;
};
BPrediction predict_b_frame(const CodecModel& model, const Frame& ref_a, const Frame& ref_b,
                            const Frame& ref_c, const Frame& ref_d, const motion::DeltaT& dt,
                            const OracleFlows* oracle = nullptr);

}  // namespace alvc::predict
