#include "alvc/pipeline.hpp"

#include <json.hpp>

#include "alvc/errors.hpp"
#include "alvc/metrics.hpp"
#include "alvc/predict.hpp"

namespace alvc::pipeline {

using codec::Branch;
using nets::CodecModel;

void GopConfig::validate() const {
  if (gop_size < 1) throw ConfigError("gop_size must be positive");
  if (num_b < 0 || num_b > 3) throw ConfigError("num_b must be in 0..3");
  if (num_b > 0 && gop_size < num_b + 2)
    throw ConfigError("gop_size must be at least num_b + 2 to fit the bridge");
}

std::vector<ScheduleStep> build_schedule(const GopConfig& cfg, int num_frames) {
  cfg.validate();
  if (num_frames < 1) throw ConfigError("build_schedule: need at least one frame");
  std::vector<ScheduleStep> steps;

  auto push_p = [&](int t, int gop_start) {
    ScheduleStep st;
    st.target = t;
    st.type = StepType::P;
    st.ref1 = t - 1;
    st.ref2 = std::max(t - 2, gop_start);  // references never cross the group's intra frame
    steps.push_back(st);
  };
  auto push_bridge = [&](int base) {
    int N = cfg.num_b;
    for (int n = 1; n <= N; ++n) {
      ScheduleStep st;
      st.type = StepType::B;
      st.dt = motion::DeltaT::for_step(n, N);
      if (n % 2 == 1) {
        st.target = base + (n - 1) / 2;
        st.ref_a = st.target - 2;
        st.ref_b = st.target - 1;
        st.ref_c = st.target + (N - n + 1);
        st.ref_d = st.target + (N - n + 2);
        st.flipped = false;
      } else {
        st.target = base + N - n / 2;
        st.ref_a = st.target + 2;
        st.ref_b = st.target + 1;
        st.ref_c = st.target - (N - n + 1);
        st.ref_d = st.target - (N - n + 2);
        st.flipped = true;
      }
      if (st.ref_a < 0) st.ref_a = st.ref_b;  // degrade gracefully at the sequence head
      steps.push_back(st);
    }
  };

  int s = 0;
  int pending_bridge = -1;
  while (s < num_frames) {
    ScheduleStep intra;
    intra.target = s;
    intra.type = StepType::I;
    steps.push_back(intra);
    int pos = 1;
    if (pending_bridge >= 0) {
      if (s + 1 < num_frames) push_p(s + 1, s);
      push_bridge(pending_bridge);
      pending_bridge = -1;
      pos = 2;
    }
    int bridge_base = s + cfg.gop_size - cfg.num_b;
    bool bridge = cfg.num_b > 0 && bridge_base + cfg.num_b + 1 <= num_frames - 1;
    int p_end = bridge ? bridge_base : std::min(s + cfg.gop_size, num_frames);
    for (int t = s + pos; t < p_end; ++t) push_p(t, s);
    if (bridge) pending_bridge = bridge_base;
    s += cfg.gop_size;
  }
  return steps;
}

size_t RateReport::total_bytes() const {
  size_t total = header_bytes;
  for (const auto& f : frames) total += f.record_bytes;
  return total;
}

size_t RateReport::total_bits() const {
  size_t bits = 0;
  for (const auto& f : frames) bits += f.bits_location + f.bits_residual;
  return bits;
}

double RateReport::bpp() const {
  return static_cast<double>(total_bits()) / (static_cast<double>(width) * height * frames.size());
}

double RateReport::mean_psnr() const {
  double acc = 0;
  for (const auto& f : frames) acc += f.psnr;
  return frames.empty() ? 0.0 : acc / frames.size();
}

std::string RateReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["width"] = width;
  j["height"] = height;
  j["header_bytes"] = header_bytes;
  j["clamped_symbols"] = clamped_symbols;
  j["frames"] = nlohmann::json::array();
  std::map<char, std::pair<int, size_t>> agg;  // type -> (count, bits)
  for (const auto& f : frames) {
    nlohmann::json e = {{"index", f.index},
                        {"type", std::string(1, f.type)},
                        {"bits_location", f.bits_location},
                        {"bits_residual", f.bits_residual},
                        {"record_bytes", f.record_bytes},
                        {"psnr", f.psnr}};
    if (f.ms_ssim >= 0) e["ms_ssim"] = f.ms_ssim;
    if (f.pred_psnr >= 0) e["pred_psnr"] = f.pred_psnr;
    if (f.ref_psnr >= 0) e["ref_psnr"] = f.ref_psnr;
    j["frames"].push_back(e);
    auto& a = agg[f.type];
    a.first += 1;
    a.second += f.bits_location + f.bits_residual;
  }
  j["aggregates"] = nlohmann::json::object();
  for (auto& [type, a] : agg)
    j["aggregates"][std::string(1, type)] = {{"count", a.first}, {"bits", a.second}};
  j["total_bytes"] = total_bytes();
  j["bpp"] = bpp();
  j["mean_psnr"] = mean_psnr();
  return j.dump(2);
}

namespace {

struct PaddedVideo {
  std::vector<Frame> frames;
  int orig_h = 0, orig_w = 0;
};

PaddedVideo pad_video(const VideoSequence& video) {
  PaddedVideo pv;
  pv.orig_h = video.height();
  pv.orig_w = video.width();
  for (const auto& f : video.frames) {
    if (f.height() != pv.orig_h || f.width() != pv.orig_w)
      throw ConfigError("encode_sequence: frame size mismatch within the sequence");
    pv.frames.push_back(pad_to_multiple(f, 16).first);
  }
  return pv;
}

double safe_ms_ssim(const Frame& a, const Frame& b) {
  if (a.height() >= 176 && a.width() >= 176) return ms_ssim(a, b);
  return -1.0;
}

Frame predict_step(const CodecModel& model, const ScheduleStep& step, ReferenceBuffer& buf,
                   double* pred_psnr, double* ref_psnr, const Frame* raw) {
  if (step.type == StepType::P) {
    const Frame& r1 = buf.frames.at(step.ref1);
    if (!model.cfg.in_loop_prediction) {
      if (raw) {
        *ref_psnr = psnr(r1, *raw);
        *pred_psnr = *ref_psnr;
      }
      return r1;
    }
    const Frame& r2 = buf.frames.at(step.ref2);
    auto p = predict::predict_p_frame(model, r1, r2, buf.pred_state);
    if (raw) {
      *pred_psnr = psnr(p.frame, *raw);
      *ref_psnr = psnr(r1, *raw);
    }
    return p.frame;
  }
  const Frame& rb = buf.frames.at(step.ref_b);
  if (!model.cfg.in_loop_prediction) {
    if (raw) {
      *ref_psnr = psnr(rb, *raw);
      *pred_psnr = *ref_psnr;
    }
    return rb;
  }
  const Frame& ra = buf.frames.at(step.ref_a);
  const Frame& rc = buf.frames.at(step.ref_c);
  const Frame& rd = buf.frames.at(step.ref_d);
  auto p = predict::predict_b_frame(model, ra, rb, rc, rd, step.dt);
  if (raw) {
    *pred_psnr = psnr(p.frame, *raw);
    *ref_psnr = psnr(rb, *raw);
  }
  return p.frame;
}

}  // namespace

EncodeResult encode_sequence(const CodecModel& model, const VideoSequence& video, const GopConfig& cfg) {
  if (video.frames.empty()) throw ConfigError("encode_sequence: empty sequence");
  PaddedVideo pv = pad_video(video);
  auto schedule = build_schedule(cfg, static_cast<int>(pv.frames.size()));

  codec::BitstreamHeader header;
  header.width = static_cast<uint32_t>(pv.orig_w);
  header.height = static_cast<uint32_t>(pv.orig_h);
  header.gop_size = static_cast<uint16_t>(cfg.gop_size);
  header.num_b = static_cast<uint8_t>(cfg.num_b);
  header.lambda_id = static_cast<uint32_t>(model.lambda_value);
  header.frame_count = static_cast<uint32_t>(pv.frames.size());
  header.arch_hash = model.cfg.arch_hash();
  codec::BitstreamWriter writer(header);

  EncodeResult result;
  result.report.header_bytes = codec::BitstreamHeader::kByteSize;
  result.report.width = pv.orig_w;
  result.report.height = pv.orig_h;
  result.reconstruction.frames.resize(pv.frames.size());
  result.reconstruction.frame_rate = video.frame_rate;

  ReferenceBuffer buf;
  int ph = pv.frames[0].height(), pw = pv.frames[0].width();

  for (const auto& step : schedule) {
    const Frame& raw = pv.frames[step.target];
    FrameStats stats;
    stats.index = step.target;
    codec::FrameRecord rec;
    Frame reconstructed;
    if (step.type == StepType::I) {
      auto r = codec::compress_iframe(model, raw);
      reconstructed = r.frame;
      rec.type = 'I';
      rec.residual = std::move(r.payload);
      stats.type = 'I';
      stats.bits_residual = rec.residual.size() * 8;
      result.report.clamped_symbols += r.clamped;
      // recurrent state resets at the group start
      if (model.cfg.in_loop_prediction) buf.pred_state = model.recpred.init_state(1, ph, pw);
      buf.streams = codec::init_p_states(model, ph, pw);
    } else {
      Branch branch = step.type == StepType::P ? Branch::p_frame : Branch::b_frame;
      Frame pred = predict_step(model, step, buf, &stats.pred_psnr, &stats.ref_psnr, &raw);
      auto loc = codec::compress_location_error(model, branch, pred, raw, &buf.streams);
      auto res = codec::compress_residual(model, branch, loc.frame, raw, &buf.streams);
      reconstructed = res.frame;
      rec.type = step.type == StepType::P ? 'P' : 'B';
      rec.location = std::move(loc.payload);
      rec.residual = std::move(res.payload);
      stats.type = rec.type;
      stats.bits_location = rec.location.size() * 8;
      stats.bits_residual = rec.residual.size() * 8;
      result.report.clamped_symbols += loc.clamped + res.clamped;
    }
    reconstructed.index = step.target;
    reconstructed.role = FrameRole::compressed;
    buf.frames[step.target] = reconstructed;

    Frame display = crop_to(reconstructed, pv.orig_h, pv.orig_w);
    display.index = step.target;
    display.role = FrameRole::compressed;
    stats.record_bytes = rec.byte_size();
    stats.psnr = psnr(display, video.frames[step.target]);
    stats.ms_ssim = safe_ms_ssim(display, video.frames[step.target]);
    result.report.frames.push_back(stats);
    result.reconstruction.frames[step.target] = display;
    writer.append(rec);
  }
  result.bitstream = writer.bytes();
  return result;
}

VideoSequence decode_sequence(const CodecModel& model, const std::vector<uint8_t>& bitstream) {
  codec::BitstreamReader reader(bitstream);
  const codec::BitstreamHeader& h = reader.header();
  if (h.lambda_id != static_cast<uint32_t>(model.lambda_value))
    throw BitstreamError("decode_sequence: stream lambda " + std::to_string(h.lambda_id) +
                         " does not match the model manifest");
  if (h.arch_hash != model.cfg.arch_hash())
    throw BitstreamError("decode_sequence: architecture hash mismatch with the model manifest");

  GopConfig cfg;
  cfg.gop_size = h.gop_size;
  cfg.num_b = h.num_b;
  auto schedule = build_schedule(cfg, static_cast<int>(h.frame_count));

  int ph = ((h.height + 15) / 16) * 16;
  int pw = ((h.width + 15) / 16) * 16;
  ReferenceBuffer buf;
  VideoSequence out;
  out.frames.resize(h.frame_count);

  int coding_index = 0;
  for (const auto& step : schedule) {
    codec::FrameRecord rec = reader.next(coding_index++);
    char expected = step.type == StepType::I ? 'I' : (step.type == StepType::P ? 'P' : 'B');
    if (rec.type != expected)
      throw BitstreamError("decode_sequence: record type mismatch at frame index " +
                           std::to_string(step.target));
    Frame reconstructed;
    if (step.type == StepType::I) {
      reconstructed = codec::decode_iframe(model, rec.residual, ph, pw);
      if (model.cfg.in_loop_prediction) buf.pred_state = model.recpred.init_state(1, ph, pw);
      buf.streams = codec::init_p_states(model, ph, pw);
    } else {
      Branch branch = step.type == StepType::P ? Branch::p_frame : Branch::b_frame;
      Frame pred = predict_step(model, step, buf, nullptr, nullptr, nullptr);
      Frame corrected = codec::decode_location_error(model, branch, pred, rec.location, &buf.streams);
      reconstructed = codec::decode_residual(model, branch, corrected, rec.residual, &buf.streams);
    }
    reconstructed.index = step.target;
    reconstructed.role = FrameRole::compressed;
    buf.frames[step.target] = reconstructed;
    out.frames[step.target] = crop_to(reconstructed, h.height, h.width);
    out.frames[step.target].index = step.target;
    out.frames[step.target].role = FrameRole::compressed;
  }
  return out;
}

}  // namespace alvc::pipeline
