#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "alvc/nn/factorized.hpp"
#include "alvc/nn/layers.hpp"

namespace alvc::nets {

using nn::ConvAct;
using nn::Conv2dLayer;
using nn::ConvLstmCell;
using nn::ParamStore;
using nn::PReluLayer;
using nn::ResBlock;
using nn::Rng;
using nn::Var;

enum class MotionMode { quadratic, linear };
enum class DistortionKind { mse, ms_ssim };

// Channel widths and switches that define the trainable graph. The hash
// gates checkpoint/bitstream compatibility.
struct NetConfig {
  int recpred_width = 32;
  int flow_width = 32;
  int flow_levels = 4;
  int refine_width = 32;
  int merge_width = 32;
  int ae_width = 64;
  int latent_channels = 48;
  int em_width = 48;
  bool recpred_recurrent = true;   // off: pass-through convolutions replace the cells
  bool in_loop_prediction = true;  // off: the previous reference feeds the error branch directly
  MotionMode motion_model = MotionMode::quadratic;

  uint64_t arch_hash() const;
  std::string summary() const;
  static NetConfig desk() { return {}; }
  // Small enough to train in seconds on one core; used by tests.
  static NetConfig micro();
};

// Coarse-to-fine pyramid flow estimator with a shared per-level refiner.
struct FlowNet {
  ConvAct c1, c2, c3;
  Conv2dLayer head;
  int levels = 4;

  FlowNet() = default;
  FlowNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng);
  // Flow on a's grid pointing into b: warp_bilinear(b, flow) ~ a.
  Var estimate(const Var& a, const Var& b) const;
};

struct RecPredState {
  Var h_in, c_in;    // cell in the downsampling path, full resolution
  Var h_mid, c_mid;  // bottleneck cell, quarter resolution
  Var h_out, c_out;  // cell in the upsampling path, full resolution
  Var f1, f2, m1, m2;
  bool ready = false;
};

// Recurrent U-Net predicting two flows and a convex mask pair from the two
// most recent compressed frames plus the previous step's flows and masks.
struct RecPredNet {
  ConvAct d1, d2, d3, d4;
  ConvAct u1, u2, u3, u4;
  ConvLstmCell cell_in, cell_mid, cell_out;
  ConvAct alt_in, alt_mid, alt_out;  // pass-through replacements
  Conv2dLayer flow1, flow2, mask1, mask2;
  bool recurrent = true;
  int width = 0;

  RecPredNet() = default;
  RecPredNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng);

  RecPredState init_state(int n, int h, int w) const;
  struct Out {
    Var f1, f2, m1, m2;
  };
  // Advances the state in place.
  Out forward(const Var& ref1, const Var& ref2, RecPredState& state) const;
};

// U-Net emitting per-reference flow-sampling offsets (bounded to +-8 px),
// residual flows, and the merge mask pair.
struct RefineNet {
  ConvAct d1, d2, d3, bottleneck;
  ConvAct u1, u2, u3;
  Conv2dLayer off_b, off_c, dfl_b, dfl_c, msk_b, msk_c;

  RefineNet() = default;
  RefineNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng);

  struct Out {
    Var offs_b, offs_c;  // (N,2,H,W) sampling offsets, tanh-bounded
    Var df_b, df_c;      // residual flows
    Var m_b, m_c;        // convex masks
  };
  Out forward(const Var& ref_b, const Var& ref_c, const Var& f_tb, const Var& f_tc, const Var& f_bc,
              const Var& f_cb) const;
};

// Pre-activation residual CNN shared by the merge operation and the
// location-error correction; emits a 3-channel residual for the caller to
// add onto its base frame.
struct CompensationNet {
  Conv2dLayer head;
  ResBlock rb1, rb2, rb3;
  Conv2dLayer up;
  PReluLayer up_act, out_act;
  Conv2dLayer out;

  CompensationNet() = default;
  CompensationNet(ParamStore& ps, const std::string& name, int in_ch, const NetConfig& cfg, Rng& rng);
  Var forward(const Var& in) const;
};

// Four stride-2 stages each way; latents live at 1/16 resolution.
struct Autoencoder {
  ConvAct a1, a2, a3;
  Conv2dLayer a4;
  ConvAct s1, s2, s3;
  Conv2dLayer s4;

  Autoencoder() = default;
  Autoencoder(ParamStore& ps, const std::string& name, int io_ch, const NetConfig& cfg, Rng& rng);
  Var encode(const Var& x) const;
  Var decode(const Var& y) const;
};

struct RecAeState {
  Var enc_h, enc_c, dec_h, dec_c;
  bool ready = false;
};

// Autoencoder with a recurrent cell at quarter resolution on both sides;
// state persists across the frames of a group and resets at its start.
struct RecurrentAutoencoder {
  ConvAct a1, a2;
  ConvLstmCell a_cell;
  ConvAct a3;
  Conv2dLayer a4;
  ConvAct s1, s2;
  ConvLstmCell s_cell;
  ConvAct s3;
  Conv2dLayer s4;

  RecurrentAutoencoder() = default;
  RecurrentAutoencoder(ParamStore& ps, const std::string& name, int io_ch, const NetConfig& cfg, Rng& rng);
  RecAeState init_state(int n, int h, int w) const;  // frame-resolution dims
  Var encode(const Var& x, RecAeState& st) const;
  Var decode(const Var& y, RecAeState& st) const;
};

struct RecEmState {
  Var h, c;
  bool ready = false;
};

// Recurrent probability model over the latent grid: a gated cell conditioned
// on previously decoded latents produces per-symbol Gaussian priors.
struct RecurrentEntropyModel {
  ConvAct embed;
  ConvLstmCell cell;
  Conv2dLayer prior_head;
  int latent_ch = 0;

  RecurrentEntropyModel() = default;
  RecurrentEntropyModel(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng);
  RecEmState init_state(int n, int lat_h, int lat_w) const;
  // (mu, sigma) for the current frame's latent grid, from the carried state.
  std::pair<Var, Var> priors(const RecEmState& st) const;
  void update(RecEmState& st, const Var& decoded_latent) const;
};

// Every trainable piece of one rate point.
struct CodecModel {
  NetConfig cfg;
  int lambda_value = 1024;
  DistortionKind distortion = DistortionKind::mse;
  ParamStore params;

  FlowNet flownet;
  RecPredNet recpred;
  RefineNet refine;
  CompensationNet merge;    // shared by both predictors
  CompensationNet correct;  // location-error correction

  RecurrentAutoencoder ae_p_loc, ae_p_res;
  RecurrentEntropyModel em_p_loc, em_p_res;
  Autoencoder ae_b_loc, ae_b_res, ae_i;
  nn::FactorizedModel em_b_loc, em_b_res, em_i;

  CodecModel(const NetConfig& cfg, uint64_t seed, int lambda, DistortionKind distortion);
};

}  // namespace alvc::nets
