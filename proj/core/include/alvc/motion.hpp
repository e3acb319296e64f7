#pragma once

#include <utility>

#include "alvc/frame.hpp"
#include "alvc/nn/ops.hpp"

namespace alvc::motion {

enum class Anchor { B, C };

// Per-pixel quadratic motion: displacement(dt) = accel*dt^2/2 + vel*dt,
// anchored at reference B or C.
struct MotionModel {
  nn::Tensor accel;  // (1,2,H,W), pixels/frame^2
  nn::Tensor vel;    // (1,2,H,W), pixels/frame
  Anchor anchor = Anchor::B;
};

// Frame-distance bookkeeping for B-step n of a bridge with num_b frames.
// Positive direction runs from reference A to reference D.
struct DeltaT {
  int bc = 0;  // B -> C, equals num_b - step + 2
  int ct = 0;  // C -> target, equals -(num_b - step + 1)
  int cb = 0;  // C -> B, equals -(num_b - step + 2)
  int step = 0;
  int num_b = 0;

  static DeltaT for_step(int step, int num_b);
  bool valid() const;
};

// Differentiable pieces used inside prediction graphs. The fits solve the
// two-sample quadratic exactly; preconditions reject degenerate spacings.
nn::Var fit_accel_from_b(const nn::Var& f_ba, const nn::Var& f_bc, int dt_bc);
nn::Var fit_vel_from_b(const nn::Var& f_ba, const nn::Var& f_bc, int dt_bc);
nn::Var displace_from_b(const nn::Var& accel, const nn::Var& vel);  // dt = 1
nn::Var fit_accel_from_c(const nn::Var& f_cb, const nn::Var& f_cd, int dt_cb);
nn::Var fit_vel_from_c(const nn::Var& f_cb, const nn::Var& f_cd, int dt_cb);
nn::Var displace_from_c(const nn::Var& accel, const nn::Var& vel, int dt_ct);
std::pair<nn::Var, nn::Var> linear_targets(const nn::Var& f_bc, const nn::Var& f_cb, const DeltaT& dt);
// Approximate inverse of a forward flow: splat -f along f with bilinear
// weights, normalize, and fall back to -f where nothing was deposited.
nn::Var reverse_flow_var(const nn::Var& fwd);

// FlowField-level wrappers.
MotionModel fit_from_b(const FlowField& f_ba, const FlowField& f_bc, int dt_bc);
FlowField predict_from_b(const MotionModel& m);
MotionModel fit_from_c(const FlowField& f_cb, const FlowField& f_cd, int dt_cb);
FlowField predict_from_c(const MotionModel& m, int dt_ct);
std::pair<FlowField, FlowField> linear_predict(const FlowField& f_bc, const FlowField& f_cb,
                                               const DeltaT& dt);
FlowField reverse_flow(const FlowField& fwd);

}  // namespace alvc::motion
