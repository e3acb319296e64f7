#include <array>
#include <cmath>
#include <filesystem>

#include "alvc/errors.hpp"
#include "alvc/image_io.hpp"
#include "alvc/train.hpp"

namespace alvc::train {

using nn::Rng;

namespace {

// Band-limited analytic texture: exact at any subpixel position and defined
// on the whole plane, so moving layers never run out of content.
struct SinTexture {
  struct Wave {
    float ax, ay, phase, amp;
  };
  std::array<std::vector<Wave>, 3> waves;

  static SinTexture random(Rng& rng, float contrast) {
    SinTexture t;
    for (int c = 0; c < 3; ++c) {
      int k = rng.uniform_int(3, 5);
      float remaining = contrast;
      for (int i = 0; i < k; ++i) {
        Wave w;
        float wavelength = rng.uniform(7.0f, 40.0f);
        float dir = rng.uniform(0.0f, 6.2831853f);
        w.ax = std::cos(dir) * 6.2831853f / wavelength;
        w.ay = std::sin(dir) * 6.2831853f / wavelength;
        w.phase = rng.uniform(0.0f, 6.2831853f);
        w.amp = remaining / (k - i) * rng.uniform(0.6f, 1.4f);
        remaining -= w.amp;
        t.waves[c].push_back(w);
      }
    }
    return t;
  }

  float value(int c, float x, float y) const {
    float v = 0.5f;
    for (const auto& w : waves[c]) v += w.amp * std::sin(w.ax * x + w.ay * y + w.phase);
    return std::min(0.98f, std::max(0.02f, v));
  }
};

struct Layer {
  SinTexture tex;
  bool is_sprite = false;
  float cx = 0, cy = 0, rx = 0, ry = 0;  // ellipse at t = 0
  float vx = 0, vy = 0, ax = 0, ay = 0;

  float dx(int t) const { return vx * t + 0.5f * ax * t * t; }
  float dy(int t) const { return vy * t + 0.5f * ay * t * t; }

  bool contains(float x, float y, int t) const {
    if (!is_sprite) return true;
    float u = (x - dx(t) - cx) / rx;
    float v = (y - dy(t) - cy) / ry;
    return u * u + v * v <= 1.0f;
  }
};

void sample_motion(Rng& rng, MotionKind kind, float max_speed, float max_accel, Layer& layer) {
  MotionKind k = kind;
  if (k == MotionKind::mixed) {
    int pick = rng.uniform_int(0, 2);
    k = pick == 0 ? MotionKind::static_scene
                  : (pick == 1 ? MotionKind::const_velocity : MotionKind::const_accel);
  }
  if (k == MotionKind::static_scene) return;
  layer.vx = rng.uniform(-max_speed, max_speed);
  layer.vy = rng.uniform(-max_speed, max_speed);
  if (k == MotionKind::const_accel) {
    layer.ax = rng.uniform(-max_accel, max_accel);
    layer.ay = rng.uniform(-max_accel, max_accel);
  }
}

}  // namespace

ClipDataset gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.height % 16 != 0 || cfg.width % 16 != 0)
    throw ConfigError("gen_synthetic: dims must be multiples of 16");
  if (cfg.frames < 2 || cfg.count < 1) throw ConfigError("gen_synthetic: need frames >= 2, count >= 1");
  Rng master(cfg.seed, 7);
  ClipDataset ds;
  ds.height = cfg.height;
  ds.width = cfg.width;
  for (int ci = 0; ci < cfg.count; ++ci) {
    Rng rng = master.fork(ci + 1);
    std::vector<Layer> layers;  // background first, sprites on top
    Layer bg;
    bg.tex = SinTexture::random(rng, 0.3f);
    sample_motion(rng, cfg.motion, cfg.max_speed, cfg.max_accel, bg);
    layers.push_back(bg);
    int sprites = cfg.max_sprites > 0 ? rng.uniform_int(1, cfg.max_sprites) : 0;
    for (int s = 0; s < sprites; ++s) {
      Layer sp;
      sp.is_sprite = true;
      sp.tex = SinTexture::random(rng, 0.35f);
      sp.cx = rng.uniform(0.25f, 0.75f) * cfg.width;
      sp.cy = rng.uniform(0.25f, 0.75f) * cfg.height;
      sp.rx = rng.uniform(0.10f, 0.22f) * cfg.width;
      sp.ry = rng.uniform(0.10f, 0.22f) * cfg.height;
      sample_motion(rng, cfg.motion, cfg.max_speed, cfg.max_accel, sp);
      layers.push_back(sp);
    }

    Clip clip;
    for (int t = 0; t < cfg.frames; ++t) {
      Frame f(cfg.height, cfg.width, FrameRole::raw, t);
      for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
          // topmost layer wins
          int top = 0;
          for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li)
            if (layers[li].contains(static_cast<float>(x), static_cast<float>(y), t)) {
              top = li;
              break;
            }
          const Layer& L = layers[top];
          for (int c = 0; c < 3; ++c)
            f.pix.at(0, c, y, x) = L.tex.value(c, x - L.dx(t), y - L.dy(t));
        }
      clip.frames.push_back(std::move(f));
      if (t > 0) {
        FlowField fl(cfg.height, cfg.width);
        for (int y = 0; y < cfg.height; ++y)
          for (int x = 0; x < cfg.width; ++x) {
            int top = 0;
            for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li)
              if (layers[li].contains(static_cast<float>(x), static_cast<float>(y), t)) {
                top = li;
                break;
              }
            const Layer& L = layers[top];
            fl.vec.at(0, 0, y, x) = L.dx(t - 1) - L.dx(t);
            fl.vec.at(0, 1, y, x) = L.dy(t - 1) - L.dy(t);
          }
        clip.flows_to_prev.push_back(std::move(fl));
      }
    }
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

void write_dataset(const std::string& dir, const ClipDataset& ds) {
  namespace fs = std::filesystem;
  for (size_t ci = 0; ci < ds.clips.size(); ++ci) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu", ci);
    fs::path cdir = fs::path(dir) / name;
    fs::create_directories(cdir);
    const Clip& clip = ds.clips[ci];
    for (size_t t = 0; t < clip.frames.size(); ++t) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "%05zu.png", t);
      write_png((cdir / fname).string(), clip.frames[t]);
      if (t > 0 && t - 1 < clip.flows_to_prev.size()) {
        std::snprintf(fname, sizeof(fname), "%05zu.flo", t);
        write_flo((cdir / fname).string(), clip.flows_to_prev[t - 1]);
      }
    }
  }
}

ClipDataset load_folder(const std::string& dir, int min_frames) {
  namespace fs = std::filesystem;
  ClipDataset ds;
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& sub : subdirs) {
    VideoSequence seq = read_frame_dir(sub.string());
    if (static_cast<int>(seq.size()) < min_frames)
      throw ConfigError("load_folder: clip " + sub.string() + " has fewer than " +
                        std::to_string(min_frames) + " frames");
    Clip clip;
    clip.frames = std::move(seq.frames);
    for (size_t t = 1; t < clip.frames.size(); ++t) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "%05zu.flo", t);
      fs::path fp = sub / fname;
      if (fs::exists(fp)) clip.flows_to_prev.push_back(read_flo(fp.string()));
    }
    if (ds.clips.empty()) {
      ds.height = clip.frames[0].height();
      ds.width = clip.frames[0].width();
    } else if (clip.frames[0].height() != ds.height || clip.frames[0].width() != ds.width) {
      throw ConfigError("load_folder: clip dimensions differ across " + sub.string());
    }
    ds.clips.push_back(std::move(clip));
  }
  if (ds.clips.empty()) throw ConfigError("load_folder: no clip directories in " + dir);
  return ds;
}

}  // namespace alvc::train
