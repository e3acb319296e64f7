#include "alvc/codec.hpp"

#include <stdexcept>

#include "alvc/predict.hpp"

namespace alvc::codec {

using nets::CodecModel;
using nn::Tensor;
using nn::Var;

PStreamStates init_p_states(const CodecModel& model, int h, int w) {
  PStreamStates s;
  s.loc_ae = model.ae_p_loc.init_state(1, h, w);
  s.res_ae = model.ae_p_res.init_state(1, h, w);
  s.loc_em = model.em_p_loc.init_state(1, h / 16, w / 16);
  s.res_em = model.em_p_res.init_state(1, h / 16, w / 16);
  s.ready = true;
  return s;
}

namespace {

std::vector<std::vector<uint32_t>> factorized_tables(const nn::FactorizedModel& em) {
  std::vector<std::vector<uint32_t>> tables(em.channels());
  for (int c = 0; c < em.channels(); ++c) tables[c] = quantize_cdf(factorized_bin_probs(em, c));
  return tables;
}

void require_p_states(Branch branch, PStreamStates* p_states) {
  if (branch == Branch::p_frame && (!p_states || !p_states->ready))
    throw std::invalid_argument("codec: P-frame streams need initialized recurrent states");
}

}  // namespace

std::vector<uint8_t> encode_latent_factorized(const Tensor& sym, const nn::FactorizedModel& em) {
  auto tables = factorized_tables(em);
  RangeEncoder enc;
  for (int n = 0; n < sym.n(); ++n)
    for (int c = 0; c < sym.c(); ++c)
      for (int y = 0; y < sym.h(); ++y)
        for (int x = 0; x < sym.w(); ++x)
          encode_symbol(enc, static_cast<int>(sym.at(n, c, y, x)), tables[c]);
  return enc.finish();
}

Tensor decode_latent_factorized(const std::vector<uint8_t>& payload, int c, int h, int w,
                                const nn::FactorizedModel& em) {
  auto tables = factorized_tables(em);
  RangeDecoder dec(payload.data(), payload.size());
  Tensor sym(1, c, h, w);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) sym.at(0, ci, y, x) = static_cast<float>(decode_symbol(dec, tables[ci]));
  return sym;
}

std::vector<uint8_t> encode_latent_gaussian(const Tensor& sym, const Tensor& mu, const Tensor& sigma) {
  if (!sym.same_shape(mu) || !sym.same_shape(sigma))
    throw std::invalid_argument("encode_latent_gaussian: prior shape mismatch");
  RangeEncoder enc;
  for (size_t i = 0; i < sym.size(); ++i) {
    auto cdf = quantize_cdf(gaussian_bin_probs(mu[i], sigma[i]));
    encode_symbol(enc, static_cast<int>(sym[i]), cdf);
  }
  return enc.finish();
}

Tensor decode_latent_gaussian(const std::vector<uint8_t>& payload, const Tensor& mu,
                              const Tensor& sigma) {
  RangeDecoder dec(payload.data(), payload.size());
  Tensor sym(mu.n(), mu.c(), mu.h(), mu.w());
  for (size_t i = 0; i < sym.size(); ++i) {
    auto cdf = quantize_cdf(gaussian_bin_probs(mu[i], sigma[i]));
    sym[i] = static_cast<float>(decode_symbol(dec, cdf));
  }
  return sym;
}

double table_bits_factorized(const Tensor& sym, const nn::FactorizedModel& em) {
  auto tables = factorized_tables(em);
  double bits = 0;
  for (int n = 0; n < sym.n(); ++n)
    for (int c = 0; c < sym.c(); ++c)
      for (int y = 0; y < sym.h(); ++y)
        for (int x = 0; x < sym.w(); ++x)
          bits += cdf_bits(tables[c], static_cast<int>(sym.at(n, c, y, x)));
  return bits;
}

double table_bits_gaussian(const Tensor& sym, const Tensor& mu, const Tensor& sigma) {
  double bits = 0;
  for (size_t i = 0; i < sym.size(); ++i) {
    auto cdf = quantize_cdf(gaussian_bin_probs(mu[i], sigma[i]));
    bits += cdf_bits(cdf, static_cast<int>(sym[i]));
  }
  return bits;
}

// ---------------------------------------------------------------------------

namespace {

// Shared quantize+code+reconstruct for one latent. Advances the recurrent
// entropy-model state when coding a P-frame stream.
struct CodedLatent {
  Tensor symbols;
  std::vector<uint8_t> payload;
  int clamped = 0;
};

CodedLatent code_latent(const CodecModel& model, Branch branch, StreamKind kind, const Tensor& y_raw,
                        PStreamStates* p_states) {
  CodedLatent out;
  out.clamped = quantize_symbols(y_raw, out.symbols);
  if (branch == Branch::p_frame) {
    nets::RecEmState& em_state = kind == StreamKind::location_error ? p_states->loc_em : p_states->res_em;
    const nets::RecurrentEntropyModel& em =
        kind == StreamKind::location_error ? model.em_p_loc : model.em_p_res;
    auto [mu, sigma] = em.priors(em_state);
    out.payload = encode_latent_gaussian(out.symbols, mu.value(), sigma.value());
    em.update(em_state, Var::constant(out.symbols));
  } else {
    const nn::FactorizedModel& em = kind == StreamKind::location_error ? model.em_b_loc : model.em_b_res;
    out.payload = encode_latent_factorized(out.symbols, em);
  }
  return out;
}

Tensor decode_latent(const CodecModel& model, Branch branch, StreamKind kind,
                     const std::vector<uint8_t>& payload, int lat_h, int lat_w,
                     PStreamStates* p_states) {
  if (branch == Branch::p_frame) {
    nets::RecEmState& em_state = kind == StreamKind::location_error ? p_states->loc_em : p_states->res_em;
    const nets::RecurrentEntropyModel& em =
        kind == StreamKind::location_error ? model.em_p_loc : model.em_p_res;
    auto [mu, sigma] = em.priors(em_state);
    Tensor sym = decode_latent_gaussian(payload, mu.value(), sigma.value());
    em.update(em_state, Var::constant(sym));
    return sym;
  }
  const nn::FactorizedModel& em = kind == StreamKind::location_error ? model.em_b_loc : model.em_b_res;
  return decode_latent_factorized(payload, model.cfg.latent_channels, lat_h, lat_w, em);
}

// Decoded-flow correction shared by the encoder and decoder sides.
Frame correct_prediction(const CodecModel& model, const Frame& pred, const Var& flow_hat) {
  Var pred_v = Var::constant(pred.pix);
  Var warped = nn::warp_bilinear(pred_v, flow_hat);
  Var corrected =
      nn::clamp01(nn::add(warped, model.correct.forward(nn::concat_c({warped, pred_v, flow_hat}))));
  return Frame(corrected.value(), FrameRole::corrected, pred.index);
}

}  // namespace

CodeResult compress_location_error(const CodecModel& model, Branch branch, const Frame& pred,
                                   const Frame& raw, PStreamStates* p_states) {
  if (pred.height() != raw.height() || pred.width() != raw.width())
    throw std::invalid_argument("compress_location_error: dimension mismatch");
  require_p_states(branch, p_states);
  Var flow_err = model.flownet.estimate(Var::constant(raw.pix), Var::constant(pred.pix));
  Var y;
  if (branch == Branch::p_frame)
    y = model.ae_p_loc.encode(flow_err, p_states->loc_ae);
  else
    y = model.ae_b_loc.encode(flow_err);

  CodedLatent coded = code_latent(model, branch, StreamKind::location_error, y.value(), p_states);
  Var y_hat = Var::constant(coded.symbols);
  Var flow_hat = branch == Branch::p_frame ? model.ae_p_loc.decode(y_hat, p_states->loc_ae)
                                           : model.ae_b_loc.decode(y_hat);

  CodeResult r;
  r.latent = {coded.symbols, StreamKind::location_error};
  r.frame = correct_prediction(model, pred, flow_hat);
  r.payload = std::move(coded.payload);
  r.clamped = coded.clamped;
  return r;
}

Frame decode_location_error(const CodecModel& model, Branch branch, const Frame& pred,
                            const std::vector<uint8_t>& payload, PStreamStates* p_states) {
  require_p_states(branch, p_states);
  Tensor sym = decode_latent(model, branch, StreamKind::location_error, payload, pred.height() / 16,
                             pred.width() / 16, p_states);
  Var y_hat = Var::constant(sym);
  Var flow_hat = branch == Branch::p_frame ? model.ae_p_loc.decode(y_hat, p_states->loc_ae)
                                           : model.ae_b_loc.decode(y_hat);
  return correct_prediction(model, pred, flow_hat);
}

CodeResult compress_residual(const CodecModel& model, Branch branch, const Frame& corrected,
                             const Frame& raw, PStreamStates* p_states) {
  if (corrected.height() != raw.height() || corrected.width() != raw.width())
    throw std::invalid_argument("compress_residual: dimension mismatch");
  require_p_states(branch, p_states);
  Var resid = nn::sub(Var::constant(raw.pix), Var::constant(corrected.pix));
  Var y;
  if (branch == Branch::p_frame)
    y = model.ae_p_res.encode(resid, p_states->res_ae);
  else
    y = model.ae_b_res.encode(resid);

  CodedLatent coded = code_latent(model, branch, StreamKind::residual, y.value(), p_states);
  Var y_hat = Var::constant(coded.symbols);
  Var resid_hat = branch == Branch::p_frame ? model.ae_p_res.decode(y_hat, p_states->res_ae)
                                            : model.ae_b_res.decode(y_hat);
  Var rec = nn::clamp01(nn::add(Var::constant(corrected.pix), resid_hat));

  CodeResult r;
  r.latent = {coded.symbols, StreamKind::residual};
  r.frame = Frame(rec.value(), FrameRole::compressed, raw.index);
  r.payload = std::move(coded.payload);
  r.clamped = coded.clamped;
  return r;
}

Frame decode_residual(const CodecModel& model, Branch branch, const Frame& corrected,
                      const std::vector<uint8_t>& payload, PStreamStates* p_states) {
  require_p_states(branch, p_states);
  Tensor sym = decode_latent(model, branch, StreamKind::residual, payload, corrected.height() / 16,
                             corrected.width() / 16, p_states);
  Var y_hat = Var::constant(sym);
  Var resid_hat = branch == Branch::p_frame ? model.ae_p_res.decode(y_hat, p_states->res_ae)
                                            : model.ae_b_res.decode(y_hat);
  Var rec = nn::clamp01(nn::add(Var::constant(corrected.pix), resid_hat));
  return Frame(rec.value(), FrameRole::compressed, corrected.index);
}

CodeResult compress_iframe(const CodecModel& model, const Frame& raw) {
  Var y = model.ae_i.encode(Var::constant(raw.pix));
  CodeResult r;
  r.clamped = quantize_symbols(y.value(), r.latent.symbols);
  r.latent.kind = StreamKind::iframe;
  r.payload = encode_latent_factorized(r.latent.symbols, model.em_i);
  Var rec = nn::clamp01(model.ae_i.decode(Var::constant(r.latent.symbols)));
  r.frame = Frame(rec.value(), FrameRole::compressed, raw.index);
  return r;
}

Frame decode_iframe(const CodecModel& model, const std::vector<uint8_t>& payload, int h, int w) {
  Tensor sym =
      decode_latent_factorized(payload, model.cfg.latent_channels, h / 16, w / 16, model.em_i);
  Var rec = nn::clamp01(model.ae_i.decode(Var::constant(sym)));
  return Frame(rec.value(), FrameRole::compressed);
}

Var estimate_rate(const Var& noisy_latent, const nn::FactorizedModel& em) {
  return nn::sum_all(em.bits(noisy_latent));
}

Var estimate_rate_gaussian(const Var& noisy_latent, const Var& mu, const Var& sigma) {
  return nn::sum_all(nn::gaussian_bits(noisy_latent, mu, sigma));
}

}  // namespace alvc::codec
