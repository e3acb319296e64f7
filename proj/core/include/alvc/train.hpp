#pragma once

#include <string>
#include <vector>

#include "alvc/frame.hpp"
#include "alvc/nets.hpp"
#include "alvc/nn/layers.hpp"

namespace alvc::train {

enum class MotionKind { static_scene, const_velocity, const_accel, mixed };

struct SyntheticConfig {
  uint64_t seed = 1;
  int count = 8;
  int frames = 8;
  int height = 64;
  int width = 64;  // dims must be multiples of 16
  MotionKind motion = MotionKind::const_velocity;
  float max_speed = 2.5f;  // px/frame
  float max_accel = 0.4f;  // px/frame^2
  int max_sprites = 2;
};

struct Clip {
  std::vector<Frame> frames;
  // ground-truth backward flow from frame t to frame t-1, for t = 1..n-1
  std::vector<FlowField> flows_to_prev;
};

struct ClipDataset {
  std::vector<Clip> clips;
  int height = 0, width = 0;
};

// Textured sprites over a textured background, each layer under its own
// rigid motion of the requested order. Layers are analytic (band-limited
// sinusoid mixtures), so subpixel sampling is exact and the per-layer
// displacement between any two frames is exactly quadratic in time.
ClipDataset gen_synthetic(const SyntheticConfig& cfg);

// clip_%04d/%05d.png plus %05d.flo ground-truth files.
void write_dataset(const std::string& dir, const ClipDataset& ds);
ClipDataset load_folder(const std::string& dir, int min_frames = 7);

struct TrainConfig {
  int lambda_value = 1024;
  nets::DistortionKind distortion = nets::DistortionKind::mse;
  enum class Stage { pretrain_pred, joint } stage = Stage::joint;
  int crop = 128;  // multiple of 16
  int batch = 8;
  int steps = 100000;
  double lr = 1e-4;       // decayed 10x over the final 20% of steps
  int bptt_window = 4;    // truncation window; state detaches at boundaries
  uint64_t seed = 1;
  double grad_clip = 1.0;

  void validate() const;  // lambda must belong to the distortion's trained set
};

// Eq-style rate-distortion objective: bits normalized to bits-per-pixel plus
// lambda-weighted distortion (MSE, or 1 - MS-SSIM at as many scales as the
// crop supports).
nn::Var rd_loss(const nn::Var& bits_location, const nn::Var& bits_residual, const nn::Var& recon,
                const nn::Var& raw, double lambda, nets::DistortionKind distortion,
                double pixels_per_frame);

struct TrainLogRow {
  int step = 0;
  char branch = 'P';
  double loss = 0, bpp_location = 0, bpp_residual = 0, psnr = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double final_loss = 0;
};

void write_log_csv(const std::string& path, const std::vector<TrainLogRow>& log);

// Stage 1: prediction networks only, raw-frame references, pure MSE.
TrainResult pretrain_predictors(nets::CodecModel& model, const TrainConfig& cfg, const ClipDataset& data);

// Stage 2: end-to-end rate-distortion training of the whole model,
// compressed-frame references, alternating P- and B-branch batches.
TrainResult train_joint(nets::CodecModel& model, const TrainConfig& cfg, const ClipDataset& data);

}  // namespace alvc::train
