#include <doctest.h>

#include <cmath>

#include "alvc/codec.hpp"
#include "alvc/nn/rng.hpp"

using namespace alvc;
using namespace alvc::codec;
using nets::CodecModel;
using nets::NetConfig;
using nn::Rng;
using nn::Tensor;
using nn::Var;

namespace {

Frame noise_frame(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Frame f(h, w);
  for (size_t i = 0; i < f.pix.size(); ++i) f.pix[i] = rng.next_float();
  return f;
}

Tensor random_symbols(int c, int h, int w, uint64_t seed, int lo = -10, int hi = 10) {
  Rng rng(seed);
  Tensor t(1, c, h, w);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform_int(lo, hi));
  return t;
}

}  // namespace

TEST_CASE("latent payload round trips") {
  Rng rng(31);
  nn::ParamStore ps;
  nn::FactorizedModel em(ps, "em", 4, rng);
  SUBCASE("factorized") {
    Tensor sym = random_symbols(4, 3, 5, 32);
    auto payload = encode_latent_factorized(sym, em);
    Tensor back = decode_latent_factorized(payload, 4, 3, 5, em);
    for (size_t i = 0; i < sym.size(); ++i) REQUIRE(back[i] == sym[i]);
    // coded size tracks the table bits
    double bits = table_bits_factorized(sym, em);
    CHECK(payload.size() * 8.0 >= bits);
    CHECK(payload.size() * 8.0 <= bits + 64.0);
  }
  SUBCASE("gaussian") {
    Tensor sym = random_symbols(2, 4, 4, 33, -5, 5);
    Tensor mu(1, 2, 4, 4), sigma(1, 2, 4, 4);
    for (size_t i = 0; i < mu.size(); ++i) {
      mu[i] = rng.uniform(-3.0f, 3.0f);
      sigma[i] = rng.uniform(0.2f, 4.0f);
    }
    auto payload = encode_latent_gaussian(sym, mu, sigma);
    Tensor back = decode_latent_gaussian(payload, mu, sigma);
    for (size_t i = 0; i < sym.size(); ++i) REQUIRE(back[i] == sym[i]);
  }
}

TEST_CASE("rate estimates") {
  Rng rng(34);
  nn::ParamStore ps;
  nn::FactorizedModel em(ps, "em", 2, rng);
  SUBCASE("matches the analytic code length at integer latents") {
    Tensor y = random_symbols(2, 3, 3, 35, -4, 4);
    Var est = estimate_rate(Var::constant(y), em);
    double expect = 0;
    for (int c = 0; c < 2; ++c)
      for (int yy = 0; yy < 3; ++yy)
        for (int xx = 0; xx < 3; ++xx) {
          double v = y.at(0, c, yy, xx);
          double p = em.cdf_value(c, v + 0.5) - em.cdf_value(c, v - 0.5);
          expect += -std::log2(std::max(p, std::pow(2.0, -16.0)));
        }
    CHECK(est.value()[0] == doctest::Approx(expect).epsilon(1e-3));
  }
  SUBCASE("probability floor caps any element at 16 bits") {
    Tensor y = Tensor::full(1, 2, 2, 2, 60.0f);
    Var bits = em.bits(Var::constant(y));
    for (size_t i = 0; i < bits.value().size(); ++i) CHECK(bits.value()[i] <= 16.0f + 1e-4f);
    Tensor mu(1, 1, 1, 1), sigma(1, 1, 1, 1);
    sigma.fill(0.11f);
    Var gb = nn::gaussian_bits(Var::constant(Tensor::full(1, 1, 1, 1, 50.0f)), Var::constant(mu),
                               Var::constant(sigma));
    CHECK(gb.value()[0] <= 16.0f + 1e-4f);
  }
  SUBCASE("uniform three-symbol model costs log2(3) per symbol") {
    // a flat table over three bins reproduces the analytic entropy
    std::vector<double> p = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    auto cdf = quantize_cdf(p);
    double bits = -std::log2(static_cast<double>(cdf[1] - cdf[0]) / kProbScale);
    CHECK(bits == doctest::Approx(std::log2(3.0)).epsilon(1e-3));
  }
}

TEST_CASE("stream codecs reconstruct identically on both sides") {
  CodecModel model(NetConfig::micro(), 41, 1024, nets::DistortionKind::mse);
  int h = 32, w = 48;
  Frame raw = noise_frame(h, w, 42);
  Frame pred = noise_frame(h, w, 43);

  SUBCASE("bi-directional branch (stateless streams)") {
    auto loc = compress_location_error(model, Branch::b_frame, pred, raw, nullptr);
    Frame dec_corr = decode_location_error(model, Branch::b_frame, pred, loc.payload, nullptr);
    REQUIRE(dec_corr.pix.size() == loc.frame.pix.size());
    for (size_t i = 0; i < dec_corr.pix.size(); ++i) REQUIRE(dec_corr.pix[i] == loc.frame.pix[i]);

    auto res = compress_residual(model, Branch::b_frame, loc.frame, raw, nullptr);
    Frame dec_rec = decode_residual(model, Branch::b_frame, dec_corr, res.payload, nullptr);
    for (size_t i = 0; i < dec_rec.pix.size(); ++i) REQUIRE(dec_rec.pix[i] == res.frame.pix[i]);
  }

  SUBCASE("recurrent branch keeps encoder and decoder states in lockstep") {
    PStreamStates enc_states = init_p_states(model, h, w);
    PStreamStates dec_states = init_p_states(model, h, w);
    Frame ref = pred;
    for (int step = 0; step < 3; ++step) {
      Frame target = noise_frame(h, w, 100 + step);
      auto loc = compress_location_error(model, Branch::p_frame, ref, target, &enc_states);
      auto res = compress_residual(model, Branch::p_frame, loc.frame, target, &enc_states);
      Frame dec_corr = decode_location_error(model, Branch::p_frame, ref, loc.payload, &dec_states);
      Frame dec_rec = decode_residual(model, Branch::p_frame, dec_corr, res.payload, &dec_states);
      for (size_t i = 0; i < dec_rec.pix.size(); ++i) REQUIRE(dec_rec.pix[i] == res.frame.pix[i]);
      ref = res.frame;
    }
  }

  SUBCASE("missing recurrent state is rejected") {
    CHECK_THROWS(compress_location_error(model, Branch::p_frame, pred, raw, nullptr));
  }

  SUBCASE("intra codec round trip") {
    auto r = compress_iframe(model, raw);
    Frame dec = decode_iframe(model, r.payload, h, w);
    for (size_t i = 0; i < dec.pix.size(); ++i) REQUIRE(dec.pix[i] == r.frame.pix[i]);
    for (size_t i = 0; i < r.frame.pix.size(); ++i) {
      CHECK(r.frame.pix[i] >= 0.0f);
      CHECK(r.frame.pix[i] <= 1.0f);
    }
  }
}
