#include "alvc/nets.hpp"

#include <sstream>
#include <stdexcept>

namespace alvc::nets {

using namespace nn;

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string NetConfig::summary() const {
  std::ostringstream os;
  os << "recpred=" << recpred_width << ";flow=" << flow_width << "x" << flow_levels
     << ";refine=" << refine_width << ";merge=" << merge_width << ";ae=" << ae_width
     << ";latent=" << latent_channels << ";em=" << em_width << ";rec=" << (recpred_recurrent ? 1 : 0)
     << ";ilp=" << (in_loop_prediction ? 1 : 0)
     << ";motion=" << (motion_model == MotionMode::quadratic ? "quadratic" : "linear");
  return os.str();
}

uint64_t NetConfig::arch_hash() const { return fnv1a(summary()); }

NetConfig NetConfig::micro() {
  NetConfig c;
  c.recpred_width = 8;
  c.flow_width = 12;
  c.flow_levels = 3;
  c.refine_width = 8;
  c.merge_width = 8;
  c.ae_width = 12;
  c.latent_channels = 8;
  c.em_width = 12;
  return c;
}

// ---------------------------------------------------------------------------

FlowNet::FlowNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng)
    : c1(ps, name + ".c1", 8, cfg.flow_width, 1, rng),
      c2(ps, name + ".c2", cfg.flow_width, cfg.flow_width, 1, rng),
      c3(ps, name + ".c3", cfg.flow_width, cfg.flow_width, 1, rng),
      head(ps, name + ".head", cfg.flow_width, 2, 3, 1, rng, 0.1f),
      levels(cfg.flow_levels) {}

Var FlowNet::estimate(const Var& a, const Var& b) const {
  std::vector<Var> pa{a}, pb{b};
  for (int l = 1; l < levels; ++l) {
    pa.push_back(avg_pool2(pa.back()));
    pb.push_back(avg_pool2(pb.back()));
  }
  Var flow = Var::constant(Tensor(a.n(), 2, pa.back().h(), pa.back().w()));
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) flow = mul_scalar(up_bilinear2(flow), 2.0f);
    Var warped = warp_bilinear(pb[l], flow);
    Var r = head(c3(c2(c1(concat_c({pa[l], warped, flow})))));
    flow = add(flow, r);
  }
  return flow;
}

// ---------------------------------------------------------------------------

RecPredNet::RecPredNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng)
    : d1(ps, name + ".d1", 12, cfg.recpred_width, 1, rng),
      d2(ps, name + ".d2", cfg.recpred_width, 2 * cfg.recpred_width, 2, rng),
      d3(ps, name + ".d3", 2 * cfg.recpred_width, 4 * cfg.recpred_width, 2, rng),
      d4(ps, name + ".d4", 4 * cfg.recpred_width, 4 * cfg.recpred_width, 1, rng),
      u1(ps, name + ".u1", 6 * cfg.recpred_width, 2 * cfg.recpred_width, 1, rng),
      u2(ps, name + ".u2", 3 * cfg.recpred_width, cfg.recpred_width, 1, rng),
      u3(ps, name + ".u3", cfg.recpred_width, cfg.recpred_width, 1, rng),
      u4(ps, name + ".u4", cfg.recpred_width, cfg.recpred_width, 1, rng),
      recurrent(cfg.recpred_recurrent),
      width(cfg.recpred_width) {
  if (recurrent) {
    cell_in = ConvLstmCell(ps, name + ".cell_in", width, width, rng);
    cell_mid = ConvLstmCell(ps, name + ".cell_mid", 4 * width, 4 * width, rng);
    cell_out = ConvLstmCell(ps, name + ".cell_out", width, width, rng);
  } else {
    alt_in = ConvAct(ps, name + ".alt_in", width, width, 1, rng);
    alt_mid = ConvAct(ps, name + ".alt_mid", 4 * width, 4 * width, 1, rng);
    alt_out = ConvAct(ps, name + ".alt_out", width, width, 1, rng);
  }
  flow1 = Conv2dLayer(ps, name + ".flow1", width, 2, 3, 1, rng, 0.1f);
  flow2 = Conv2dLayer(ps, name + ".flow2", width, 2, 3, 1, rng, 0.1f);
  mask1 = Conv2dLayer(ps, name + ".mask1", width, 1, 3, 1, rng, 0.1f);
  mask2 = Conv2dLayer(ps, name + ".mask2", width, 1, 3, 1, rng, 0.1f);
}

RecPredState RecPredNet::init_state(int n, int h, int w) const {
  RecPredState s;
  if (recurrent) {
    s.h_in = Var::constant(Tensor(n, width, h, w));
    s.c_in = Var::constant(Tensor(n, width, h, w));
    s.h_mid = Var::constant(Tensor(n, 4 * width, h / 4, w / 4));
    s.c_mid = Var::constant(Tensor(n, 4 * width, h / 4, w / 4));
    s.h_out = Var::constant(Tensor(n, width, h, w));
    s.c_out = Var::constant(Tensor(n, width, h, w));
  }
  s.f1 = Var::constant(Tensor(n, 2, h, w));
  s.f2 = Var::constant(Tensor(n, 2, h, w));
  s.m1 = Var::constant(Tensor::full(n, 1, h, w, 0.5f));
  s.m2 = Var::constant(Tensor::full(n, 1, h, w, 0.5f));
  s.ready = true;
  return s;
}

RecPredNet::Out RecPredNet::forward(const Var& ref1, const Var& ref2, RecPredState& state) const {
  if (!state.ready) throw std::invalid_argument("RecPredNet: state not initialized");
  if (state.f1.h() != ref1.h() || state.f1.w() != ref1.w())
    throw std::invalid_argument("RecPredNet: state does not match the frame size");
  Var x = concat_c({ref1, ref2, state.f1, state.f2, state.m1, state.m2});
  Var t1 = d1(x);
  Var a_out;
  if (recurrent) {
    auto [h, c] = cell_in.step(t1, state.h_in, state.c_in);
    state.h_in = h;
    state.c_in = c;
    a_out = h;
  } else {
    a_out = alt_in(t1);
  }
  Var t2 = d2(a_out);
  Var t3 = d3(t2);
  Var t4 = d4(t3);
  Var b_out;
  if (recurrent) {
    auto [h, c] = cell_mid.step(t4, state.h_mid, state.c_mid);
    state.h_mid = h;
    state.c_mid = c;
    b_out = h;
  } else {
    b_out = alt_mid(t4);
  }
  Var v1 = u1(concat_c({up_nearest2(b_out), t2}));
  Var v2 = u2(concat_c({up_nearest2(v1), a_out}));
  Var c_out;
  if (recurrent) {
    auto [h, c] = cell_out.step(v2, state.h_out, state.c_out);
    state.h_out = h;
    state.c_out = c;
    c_out = h;
  } else {
    c_out = alt_out(v2);
  }
  Var v4 = u4(u3(c_out));
  Out o;
  o.f1 = flow1(v4);
  o.f2 = flow2(v4);
  Var l1 = mask1(v4);
  Var l2 = mask2(v4);
  o.m1 = pair_softmax_first(l1, l2);
  o.m2 = add_scalar(mul_scalar(o.m1, -1.0f), 1.0f);
  state.f1 = o.f1;
  state.f2 = o.f2;
  state.m1 = o.m1;
  state.m2 = o.m2;
  return o;
}

// ---------------------------------------------------------------------------

RefineNet::RefineNet(ParamStore& ps, const std::string& name, const NetConfig& cfg, Rng& rng)
    : d1(ps, name + ".d1", 14, cfg.refine_width, 1, rng),
      d2(ps, name + ".d2", cfg.refine_width, 2 * cfg.refine_width, 2, rng),
      d3(ps, name + ".d3", 2 * cfg.refine_width, 4 * cfg.refine_width, 2, rng),
      bottleneck(ps, name + ".bottleneck", 4 * cfg.refine_width, 4 * cfg.refine_width, 1, rng),
      u1(ps, name + ".u1", 6 * cfg.refine_width, 2 * cfg.refine_width, 1, rng),
      u2(ps, name + ".u2", 3 * cfg.refine_width, cfg.refine_width, 1, rng),
      u3(ps, name + ".u3", cfg.refine_width, cfg.refine_width, 1, rng),
      off_b(ps, name + ".off_b", cfg.refine_width, 2, 3, 1, rng, 0.1f),
      off_c(ps, name + ".off_c", cfg.refine_width, 2, 3, 1, rng, 0.1f),
      dfl_b(ps, name + ".dfl_b", cfg.refine_width, 2, 3, 1, rng, 0.1f),
      dfl_c(ps, name + ".dfl_c", cfg.refine_width, 2, 3, 1, rng, 0.1f),
      msk_b(ps, name + ".msk_b", cfg.refine_width, 1, 3, 1, rng, 0.1f),
      msk_c(ps, name + ".msk_c", cfg.refine_width, 1, 3, 1, rng, 0.1f) {}

RefineNet::Out RefineNet::forward(const Var& ref_b, const Var& ref_c, const Var& f_tb, const Var& f_tc,
                                  const Var& f_bc, const Var& f_cb) const {
  constexpr float kOffsetBound = 8.0f;
  Var x = concat_c({ref_b, ref_c, f_tb, f_tc, f_bc, f_cb});
  Var t1 = d1(x);
  Var t2 = d2(t1);
  Var t3 = bottleneck(d3(t2));
  Var v1 = u1(concat_c({up_nearest2(t3), t2}));
  Var v2 = u3(u2(concat_c({up_nearest2(v1), t1})));
  Out o;
  o.offs_b = scaled_tanh(off_b(v2), kOffsetBound);
  o.offs_c = scaled_tanh(off_c(v2), kOffsetBound);
  o.df_b = dfl_b(v2);
  o.df_c = dfl_c(v2);
  Var lb = msk_b(v2);
  Var lc = msk_c(v2);
  o.m_b = pair_softmax_first(lb, lc);
  o.m_c = add_scalar(mul_scalar(o.m_b, -1.0f), 1.0f);
  return o;
}

// ---------------------------------------------------------------------------

CompensationNet::CompensationNet(ParamStore& ps, const std::string& name, int in_ch, const NetConfig& cfg,
                                 Rng& rng)
    : head(ps, name + ".head", in_ch, cfg.merge_width, 3, 1, rng),
      rb1(ps, name + ".rb1", cfg.merge_width, rng),
      rb2(ps, name + ".rb2", cfg.merge_width, rng),
      rb3(ps, name + ".rb3", cfg.merge_width, rng),
      up(ps, name + ".up", cfg.merge_width, cfg.merge_width, 3, 1, rng),
      up_act(ps, name + ".up_act", cfg.merge_width),
      out_act(ps, name + ".out_act", cfg.merge_width),
      out(ps, name + ".out", cfg.merge_width, 3, 3, 1, rng, 0.1f) {}

Var CompensationNet::forward(const Var& in) const {
  Var t = rb1(head(in));
  Var d = rb2(avg_pool2(t));
  Var u = up_act(up(up_nearest2(d)));
  Var merged = rb3(add(t, u));
  return out(out_act(merged));
}

// ---------------------------------------------------------------------------

Autoencoder::Autoencoder(ParamStore& ps, const std::string& name, int io_ch, const NetConfig& cfg,
                         Rng& rng)
    : a1(ps, name + ".a1", io_ch, cfg.ae_width, 2, rng),
      a2(ps, name + ".a2", cfg.ae_width, cfg.ae_width, 2, rng),
      a3(ps, name + ".a3", cfg.ae_width, cfg.ae_width, 2, rng),
      a4(ps, name + ".a4", cfg.ae_width, cfg.latent_channels, 3, 2, rng),
      s1(ps, name + ".s1", cfg.latent_channels, cfg.ae_width, 1, rng),
      s2(ps, name + ".s2", cfg.ae_width, cfg.ae_width, 1, rng),
      s3(ps, name + ".s3", cfg.ae_width, cfg.ae_width, 1, rng),
      s4(ps, name + ".s4", cfg.ae_width, io_ch, 3, 1, rng, 0.5f) {}

Var Autoencoder::encode(const Var& x) const { return a4(a3(a2(a1(x)))); }

Var Autoencoder::decode(const Var& y) const {
  Var t = s1(up_nearest2(y));
  t = s2(up_nearest2(t));
  t = s3(up_nearest2(t));
  return s4(up_nearest2(t));
}

// ---------------------------------------------------------------------------

RecurrentAutoencoder::RecurrentAutoencoder(ParamStore& ps, const std::string& name, int io_ch,
                                           const NetConfig& cfg, Rng& rng)
    : a1(ps, name + ".a1", io_ch, cfg.ae_width, 2, rng),
      a2(ps, name + ".a2", cfg.ae_width, cfg.ae_width, 2, rng),
      a_cell(ps, name + ".a_cell", cfg.ae_width, cfg.ae_width, rng),
      a3(ps, name + ".a3", cfg.ae_width, cfg.ae_width, 2, rng),
      a4(ps, name + ".a4", cfg.ae_width, cfg.latent_channels, 3, 2, rng),
      s1(ps, name + ".s1", cfg.latent_channels, cfg.ae_width, 1, rng),
      s2(ps, name + ".s2", cfg.ae_width, cfg.ae_width, 1, rng),
      s_cell(ps, name + ".s_cell", cfg.ae_width, cfg.ae_width, rng),
      s3(ps, name + ".s3", cfg.ae_width, cfg.ae_width, 1, rng),
      s4(ps, name + ".s4", cfg.ae_width, io_ch, 3, 1, rng, 0.5f) {}

RecAeState RecurrentAutoencoder::init_state(int n, int h, int w) const {
  RecAeState s;
  s.enc_h = a_cell.zero_state(n, h / 4, w / 4);
  s.enc_c = a_cell.zero_state(n, h / 4, w / 4);
  s.dec_h = s_cell.zero_state(n, h / 4, w / 4);
  s.dec_c = s_cell.zero_state(n, h / 4, w / 4);
  s.ready = true;
  return s;
}

Var RecurrentAutoencoder::encode(const Var& x, RecAeState& st) const {
  if (!st.ready) throw std::invalid_argument("RecurrentAutoencoder: state not initialized");
  Var t = a2(a1(x));
  auto [h, c] = a_cell.step(t, st.enc_h, st.enc_c);
  st.enc_h = h;
  st.enc_c = c;
  return a4(a3(h));
}

Var RecurrentAutoencoder::decode(const Var& y, RecAeState& st) const {
  if (!st.ready) throw std::invalid_argument("RecurrentAutoencoder: state not initialized");
  Var t = s1(up_nearest2(y));
  t = s2(up_nearest2(t));
  auto [h, c] = s_cell.step(t, st.dec_h, st.dec_c);
  st.dec_h = h;
  st.dec_c = c;
  t = s3(up_nearest2(h));
  return s4(up_nearest2(t));
}

// ---------------------------------------------------------------------------

RecurrentEntropyModel::RecurrentEntropyModel(ParamStore& ps, const std::string& name,
                                             const NetConfig& cfg, Rng& rng)
    : embed(ps, name + ".embed", cfg.latent_channels, cfg.em_width, 1, rng),
      cell(ps, name + ".cell", cfg.em_width, cfg.em_width, rng),
      prior_head(ps, name + ".prior", cfg.em_width, 2 * cfg.latent_channels, 3, 1, rng, 0.5f),
      latent_ch(cfg.latent_channels) {}

RecEmState RecurrentEntropyModel::init_state(int n, int lat_h, int lat_w) const {
  RecEmState s;
  s.h = cell.zero_state(n, lat_h, lat_w);
  s.c = cell.zero_state(n, lat_h, lat_w);
  s.ready = true;
  return s;
}

std::pair<Var, Var> RecurrentEntropyModel::priors(const RecEmState& st) const {
  if (!st.ready) throw std::invalid_argument("RecurrentEntropyModel: state not initialized");
  Var p = prior_head(st.h);
  Var mu = slice_c(p, 0, latent_ch);
  Var sigma = add_scalar(softplus(slice_c(p, latent_ch, 2 * latent_ch)), 0.11f);
  return {mu, sigma};
}

void RecurrentEntropyModel::update(RecEmState& st, const Var& decoded_latent) const {
  auto [h, c] = cell.step(embed(decoded_latent), st.h, st.c);
  st.h = h;
  st.c = c;
}

// ---------------------------------------------------------------------------

CodecModel::CodecModel(const NetConfig& cfg_, uint64_t seed, int lambda, DistortionKind dist)
    : cfg(cfg_), lambda_value(lambda), distortion(dist) {
  Rng rng(seed, 55);
  flownet = FlowNet(params, "flownet", cfg, rng);
  if (cfg.in_loop_prediction) {
    recpred = RecPredNet(params, "recpred", cfg, rng);
    refine = RefineNet(params, "refine", cfg, rng);
    merge = CompensationNet(params, "merge", 12, cfg, rng);
  }
  correct = CompensationNet(params, "correct", 8, cfg, rng);
  ae_p_loc = RecurrentAutoencoder(params, "ae_p_loc", 2, cfg, rng);
  ae_p_res = RecurrentAutoencoder(params, "ae_p_res", 3, cfg, rng);
  em_p_loc = RecurrentEntropyModel(params, "em_p_loc", cfg, rng);
  em_p_res = RecurrentEntropyModel(params, "em_p_res", cfg, rng);
  ae_b_loc = Autoencoder(params, "ae_b_loc", 2, cfg, rng);
  ae_b_res = Autoencoder(params, "ae_b_res", 3, cfg, rng);
  em_b_loc = nn::FactorizedModel(params, "em_b_loc", cfg.latent_channels, rng);
  em_b_res = nn::FactorizedModel(params, "em_b_res", cfg.latent_channels, rng);
  ae_i = Autoencoder(params, "ae_i", 3, cfg, rng);
  em_i = nn::FactorizedModel(params, "em_i", cfg.latent_channels, rng);
}

}  // namespace alvc::nets
