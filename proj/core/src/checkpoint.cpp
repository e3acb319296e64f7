#include "alvc/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <json.hpp>

#include "alvc/errors.hpp"

namespace alvc {

namespace {

constexpr char kMagic[8] = {'A', 'L', 'V', 'C', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void put_u32(FILE* f, uint32_t v) { std::fwrite(&v, 4, 1, f); }

uint32_t get_u32(FILE* f) {
  uint32_t v = 0;
  if (std::fread(&v, 4, 1, f) != 1) throw IoError("checkpoint: truncated file");
  return v;
}

nlohmann::json config_json(const nets::NetConfig& cfg) {
  return {{"recpred_width", cfg.recpred_width},
          {"flow_width", cfg.flow_width},
          {"flow_levels", cfg.flow_levels},
          {"refine_width", cfg.refine_width},
          {"merge_width", cfg.merge_width},
          {"ae_width", cfg.ae_width},
          {"latent_channels", cfg.latent_channels},
          {"em_width", cfg.em_width},
          {"recpred_recurrent", cfg.recpred_recurrent},
          {"in_loop_prediction", cfg.in_loop_prediction},
          {"motion_model", cfg.motion_model == nets::MotionMode::quadratic ? "quadratic" : "linear"}};
}

nets::NetConfig config_from_json(const nlohmann::json& j) {
  nets::NetConfig cfg;
  cfg.recpred_width = j.at("recpred_width");
  cfg.flow_width = j.at("flow_width");
  cfg.flow_levels = j.at("flow_levels");
  cfg.refine_width = j.at("refine_width");
  cfg.merge_width = j.at("merge_width");
  cfg.ae_width = j.at("ae_width");
  cfg.latent_channels = j.at("latent_channels");
  cfg.em_width = j.at("em_width");
  cfg.recpred_recurrent = j.at("recpred_recurrent");
  cfg.in_loop_prediction = j.at("in_loop_prediction");
  cfg.motion_model = j.at("motion_model") == "quadratic" ? nets::MotionMode::quadratic
                                                         : nets::MotionMode::linear;
  return cfg;
}

}  // namespace

std::string manifest_json(const nets::CodecModel& model) {
  nlohmann::json j = {
      {"schema_version", 1},
      {"arch_hash", model.cfg.arch_hash()},
      {"config", config_json(model.cfg)},
      {"lambda", model.lambda_value},
      {"distortion", model.distortion == nets::DistortionKind::mse ? "mse" : "ms_ssim"},
      {"tensor_count", model.params.count()},
  };
  return j.dump();
}

void save_checkpoint(const std::string& path, const nets::CodecModel& model) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("checkpoint: cannot create " + path);
  std::fwrite(kMagic, 1, 8, f.get());
  put_u32(f.get(), kVersion);
  std::string manifest = manifest_json(model);
  put_u32(f.get(), static_cast<uint32_t>(manifest.size()));
  std::fwrite(manifest.data(), 1, manifest.size(), f.get());
  put_u32(f.get(), static_cast<uint32_t>(model.params.count()));
  for (const auto& [name, var] : model.params.all()) {
    put_u32(f.get(), static_cast<uint32_t>(name.size()));
    std::fwrite(name.data(), 1, name.size(), f.get());
    const nn::Tensor& t = var.value();
    put_u32(f.get(), static_cast<uint32_t>(t.n()));
    put_u32(f.get(), static_cast<uint32_t>(t.c()));
    put_u32(f.get(), static_cast<uint32_t>(t.h()));
    put_u32(f.get(), static_cast<uint32_t>(t.w()));
    std::fwrite(t.data(), 4, t.size(), f.get());
  }
}

std::unique_ptr<nets::CodecModel> load_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ConfigError("checkpoint: bad magic in " + path);
  uint32_t version = get_u32(f.get());
  if (version != kVersion)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  uint32_t mlen = get_u32(f.get());
  std::string manifest(mlen, '\0');
  if (std::fread(manifest.data(), 1, mlen, f.get()) != mlen)
    throw IoError("checkpoint: truncated manifest");
  nlohmann::json j = nlohmann::json::parse(manifest, nullptr, false);
  if (j.is_discarded()) throw ConfigError("checkpoint: invalid manifest JSON");

  nets::NetConfig cfg = config_from_json(j.at("config"));
  if (j.at("arch_hash").get<uint64_t>() != cfg.arch_hash())
    throw ConfigError("checkpoint: architecture hash does not match its config");
  auto model = std::make_unique<nets::CodecModel>(
      cfg, 0, j.at("lambda").get<int>(),
      j.at("distortion") == "mse" ? nets::DistortionKind::mse : nets::DistortionKind::ms_ssim);

  uint32_t count = get_u32(f.get());
  if (count != model->params.count())
    throw ConfigError("checkpoint: tensor count mismatch (" + std::to_string(count) + " stored, " +
                      std::to_string(model->params.count()) + " expected)");
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t nlen = get_u32(f.get());
    std::string name(nlen, '\0');
    if (std::fread(name.data(), 1, nlen, f.get()) != nlen) throw IoError("checkpoint: truncated name");
    int n = static_cast<int>(get_u32(f.get()));
    int c = static_cast<int>(get_u32(f.get()));
    int h = static_cast<int>(get_u32(f.get()));
    int w = static_cast<int>(get_u32(f.get()));
    nn::Var var = model->params.find(name);
    nn::Tensor& t = var.value();
    if (t.n() != n || t.c() != c || t.h() != h || t.w() != w)
      throw ConfigError("checkpoint: shape mismatch for " + name);
    if (std::fread(t.data(), 4, t.size(), f.get()) != t.size())
      throw IoError("checkpoint: truncated tensor data for " + name);
  }
  return model;
}

}  // namespace alvc
