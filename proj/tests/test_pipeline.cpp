#include <doctest.h>

#include <set>

#include "alvc/errors.hpp"
#include "alvc/pipeline.hpp"

using namespace alvc;
using namespace alvc::pipeline;
using nets::CodecModel;
using nets::NetConfig;
using nn::Rng;

namespace {

VideoSequence noise_video(int frames, int h, int w, uint64_t seed) {
  Rng rng(seed);
  VideoSequence v;
  for (int i = 0; i < frames; ++i) {
    Frame f(h, w, FrameRole::raw, i);
    for (size_t j = 0; j < f.pix.size(); ++j) f.pix[j] = rng.next_float();
    v.frames.push_back(std::move(f));
  }
  return v;
}

// simulation: every reference must be compressed before its consumer
void check_valid_schedule(const GopConfig& cfg, int num_frames) {
  auto steps = build_schedule(cfg, num_frames);
  std::set<int> compressed;
  std::set<int> targeted;
  for (const auto& st : steps) {
    REQUIRE(st.target >= 0);
    REQUIRE(st.target < num_frames);
    REQUIRE(!targeted.count(st.target));
    targeted.insert(st.target);
    if (st.type == StepType::P) {
      REQUIRE(compressed.count(st.ref1));
      REQUIRE(compressed.count(st.ref2));
      REQUIRE(st.ref1 < st.target);  // strictly prior references
      REQUIRE(st.ref2 < st.target);
    } else if (st.type == StepType::B) {
      for (int r : {st.ref_a, st.ref_b, st.ref_c, st.ref_d}) REQUIRE(compressed.count(r));
      REQUIRE(st.dt.valid());
    }
    compressed.insert(st.target);
  }
  REQUIRE(static_cast<int>(targeted.size()) == num_frames);
}

}  // namespace

TEST_CASE("schedule validity over the full configuration sweep") {
  for (int gop = 3; gop <= 20; ++gop)
    for (int num_b = 0; num_b <= 3; ++num_b) {
      if (num_b > 0 && gop < num_b + 2) continue;
      GopConfig cfg{gop, num_b};
      for (int frames = 1; frames <= 100; ++frames) check_valid_schedule(cfg, frames);
    }
}

TEST_CASE("schedule structure") {
  SUBCASE("bridged groups interleave with the next group's start") {
    GopConfig cfg{13, 2};
    auto steps = build_schedule(cfg, 15);
    // expected coding order: I0 P1..P10 I13 P14 B11 B12
    REQUIRE(steps.size() == 15);
    CHECK(steps[0].type == StepType::I);
    for (int i = 1; i <= 10; ++i) {
      CHECK(steps[i].type == StepType::P);
      CHECK(steps[i].target == i);
    }
    CHECK(steps[11].type == StepType::I);
    CHECK(steps[11].target == 13);
    CHECK(steps[12].type == StepType::P);
    CHECK(steps[12].target == 14);
    CHECK(steps[12].ref1 == 13);
    CHECK(steps[12].ref2 == 13);  // duplicated intra reference at the group start
    CHECK(steps[13].type == StepType::B);
    CHECK(steps[13].target == 11);
    CHECK(steps[13].ref_a == 9);
    CHECK(steps[13].ref_b == 10);
    CHECK(steps[13].ref_c == 13);
    CHECK(steps[13].ref_d == 14);
    CHECK(!steps[13].flipped);
    CHECK(steps[13].dt.bc == 3);
    CHECK(steps[13].dt.ct == -2);
    CHECK(steps[13].dt.cb == -3);
    CHECK(steps[14].type == StepType::B);
    CHECK(steps[14].target == 12);
    CHECK(steps[14].flipped);
    CHECK(steps[14].ref_a == 14);
    CHECK(steps[14].ref_b == 13);
    CHECK(steps[14].ref_c == 11);
    CHECK(steps[14].ref_d == 10);
    CHECK(steps[14].dt.bc == 2);
  }
  SUBCASE("a clip that cannot complete the bridge falls back to P-frames") {
    auto steps = build_schedule(GopConfig{13, 2}, 13);
    int num_i = 0, num_p = 0, num_b = 0;
    for (const auto& st : steps) {
      num_i += st.type == StepType::I;
      num_p += st.type == StepType::P;
      num_b += st.type == StepType::B;
    }
    CHECK(num_i == 1);
    CHECK(num_p == 12);
    CHECK(num_b == 0);
  }
  SUBCASE("no bridge in IPPP mode") {
    auto steps = build_schedule(GopConfig{13, 0}, 40);
    for (const auto& st : steps) CHECK(st.type != StepType::B);
    CHECK(steps[0].type == StepType::I);
    CHECK(steps[13].type == StepType::I);
    CHECK(steps[26].type == StepType::I);
  }
  SUBCASE("middle step of a three-frame bridge") {
    auto steps = build_schedule(GopConfig{5, 3}, 20);
    // bridge base for the first group is frame 2; step 3 targets frame 3
    const ScheduleStep* step3 = nullptr;
    for (const auto& st : steps)
      if (st.type == StepType::B && st.dt.step == 3) {
        step3 = &st;
        break;
      }
    REQUIRE(step3 != nullptr);
    CHECK(step3->target == 3);
    CHECK(step3->ref_a == 1);
    CHECK(step3->ref_b == 2);
    CHECK(step3->ref_c == 4);
    CHECK(step3->ref_d == 5);
    CHECK(!step3->flipped);  // the centermost odd step keeps forward orientation
    CHECK(step3->dt.bc == 2);
    CHECK(step3->dt.ct == -1);
    CHECK(step3->dt.cb == -2);
  }
  SUBCASE("single frame is a lone intra") {
    auto steps = build_schedule(GopConfig{13, 2}, 1);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].type == StepType::I);
  }
  SUBCASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(build_schedule(GopConfig{3, 2}, 10), ConfigError);
    CHECK_THROWS_AS(build_schedule(GopConfig{13, 4}, 10), ConfigError);
    CHECK_THROWS_AS(build_schedule(GopConfig{13, 2}, 0), ConfigError);
  }
}

TEST_CASE("encode and decode a short sequence") {
  CodecModel model(NetConfig::micro(), 51, 1024, nets::DistortionKind::mse);
  VideoSequence video = noise_video(9, 32, 32, 52);
  GopConfig cfg{4, 2};
  auto enc = encode_sequence(model, video, cfg);
  REQUIRE(enc.report.frames.size() == 9);

  SUBCASE("all three frame types are exercised") {
    int num_i = 0, num_p = 0, num_b = 0;
    for (const auto& f : enc.report.frames) {
      num_i += f.type == 'I';
      num_p += f.type == 'P';
      num_b += f.type == 'B';
    }
    CHECK(num_i == 3);
    CHECK(num_p == 4);
    CHECK(num_b == 2);
  }

  SUBCASE("decoder output is bit-identical to the encoder reconstruction") {
    VideoSequence dec = decode_sequence(model, enc.bitstream);
    REQUIRE(dec.size() == video.size());
    for (size_t i = 0; i < dec.size(); ++i)
      for (size_t j = 0; j < dec.frames[i].pix.size(); ++j)
        REQUIRE(dec.frames[i].pix[j] == enc.reconstruction.frames[i].pix[j]);
  }

  SUBCASE("byte accounting matches the file size") {
    CHECK(enc.report.total_bytes() == enc.bitstream.size());
  }

  SUBCASE("encoding twice is byte-identical") {
    auto enc2 = encode_sequence(model, video, cfg);
    REQUIRE(enc2.bitstream.size() == enc.bitstream.size());
    for (size_t i = 0; i < enc.bitstream.size(); ++i) REQUIRE(enc2.bitstream[i] == enc.bitstream[i]);
  }

  SUBCASE("report JSON includes per-type aggregates") {
    std::string j = enc.report.to_json();
    CHECK(j.find("\"aggregates\"") != std::string::npos);
    CHECK(j.find("\"bpp\"") != std::string::npos);
  }

  SUBCASE("inspect reports the header and per-record bytes") {
    std::string j = codec::inspect_json(enc.bitstream);
    CHECK(j.find("\"frame_count\": 9") != std::string::npos);
    CHECK(j.find("location_bytes") != std::string::npos);
  }

  SUBCASE("truncated payload names the failing record") {
    std::vector<uint8_t> cut(enc.bitstream.begin(), enc.bitstream.begin() + enc.bitstream.size() / 2);
    CHECK_THROWS_AS(decode_sequence(model, cut), BitstreamError);
  }

  SUBCASE("unknown version is rejected") {
    auto bad = enc.bitstream;
    bad[5] = 9;  // version low byte
    CHECK_THROWS_AS(decode_sequence(model, bad), BitstreamError);
  }

  SUBCASE("model mismatch is rejected") {
    CodecModel other(NetConfig::micro(), 51, 512, nets::DistortionKind::mse);
    CHECK_THROWS_AS(decode_sequence(other, enc.bitstream), BitstreamError);
    NetConfig cfg2 = NetConfig::micro();
    cfg2.latent_channels += 4;
    CodecModel wider(cfg2, 51, 1024, nets::DistortionKind::mse);
    CHECK_THROWS_AS(decode_sequence(wider, enc.bitstream), BitstreamError);
  }

  SUBCASE("single-frame clip is one intra record") {
    VideoSequence one = noise_video(1, 32, 32, 53);
    auto enc1 = encode_sequence(model, one, cfg);
    REQUIRE(enc1.report.frames.size() == 1);
    CHECK(enc1.report.frames[0].type == 'I');
    VideoSequence dec = decode_sequence(model, enc1.bitstream);
    CHECK(dec.size() == 1);
  }

  SUBCASE("odd dimensions are padded and cropped back") {
    VideoSequence odd = noise_video(3, 30, 42, 54);
    auto enc_odd = encode_sequence(model, odd, GopConfig{4, 0});
    CHECK(enc_odd.reconstruction.frames[0].height() == 30);
    CHECK(enc_odd.reconstruction.frames[0].width() == 42);
    VideoSequence dec = decode_sequence(model, enc_odd.bitstream);
    CHECK(dec.frames[0].height() == 30);
    for (size_t j = 0; j < dec.frames[2].pix.size(); ++j)
      REQUIRE(dec.frames[2].pix[j] == enc_odd.reconstruction.frames[2].pix[j]);
  }
}

TEST_CASE("without in-loop prediction the previous reference feeds the error branch") {
  NetConfig cfg = NetConfig::micro();
  cfg.in_loop_prediction = false;
  CodecModel model(cfg, 55, 1024, nets::DistortionKind::mse);
  VideoSequence video = noise_video(6, 32, 32, 56);
  auto enc = encode_sequence(model, video, GopConfig{6, 2});
  VideoSequence dec = decode_sequence(model, enc.bitstream);
  for (size_t i = 0; i < dec.size(); ++i)
    for (size_t j = 0; j < dec.frames[i].pix.size(); ++j)
      REQUIRE(dec.frames[i].pix[j] == enc.reconstruction.frames[i].pix[j]);
}
