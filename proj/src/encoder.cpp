#include "gift/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace gift {

const char* scale_mode_name(ScaleMode m) {
  return m == ScaleMode::PerHead ? "per_head" : "full_d";
}

ScaleMode scale_mode_from_name(const std::string& s) {
  if (s == "per_head") return ScaleMode::PerHead;
  if (s == "full_d") return ScaleMode::FullD;
  throw std::invalid_argument("unknown scale_mode '" + s + "' (want per_head|full_d)");
}

void EncoderConfig::validate() const {
  if (d < 1 || h < 1 || layers < 0 || ffn_dim < 1 || vocab_size < 5 || max_positions < 1 ||
      max_interlocutors < 2 || max_utterances < 2)
    throw std::invalid_argument("EncoderConfig: sizes out of range");
  if (d % h != 0) throw std::invalid_argument("EncoderConfig: d must be divisible by h");
}

GiftEncoderParams GiftEncoderParams::init(const EncoderConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return init(cfg, rng);
}

GiftEncoderParams GiftEncoderParams::init(const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  constexpr double kStd = 0.02;
  auto mat = [&rng](const std::string& name, int r, int c) {
    Parameter p(name, Tensor({r, c}));
    fill_normal(p.value, rng, kStd);
    return p;
  };
  auto vec = [](const std::string& name, int c, double fill) {
    return Parameter(name, Tensor({1, c}, fill));
  };

  GiftEncoderParams p;
  p.cfg = cfg;
  p.tok_emb = mat("tok_emb", cfg.vocab_size, cfg.d);
  p.pos_emb = mat("pos_emb", cfg.max_positions, cfg.d);
  p.seg_emb = mat("seg_emb", 2, cfg.d);
  p.spk_emb = mat("spk_emb", cfg.max_interlocutors, cfg.d);
  p.layer.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    LayerWeights& w = p.layer[l];
    w.wq = mat(pre + "wq", cfg.d, cfg.d);
    w.wk = mat(pre + "wk", cfg.d, cfg.d);
    w.wv = mat(pre + "wv", cfg.d, cfg.d);
    w.wo = mat(pre + "wo", cfg.d, cfg.d);
    w.ln1_gain = vec(pre + "ln1_gain", cfg.d, 1.0);
    w.ln1_bias = vec(pre + "ln1_bias", cfg.d, 0.0);
    w.ffn_w1 = mat(pre + "ffn_w1", cfg.d, cfg.ffn_dim);
    w.ffn_b1 = vec(pre + "ffn_b1", cfg.ffn_dim, 0.0);
    w.ffn_w2 = mat(pre + "ffn_w2", cfg.ffn_dim, cfg.d);
    w.ffn_b2 = vec(pre + "ffn_b2", cfg.d, 0.0);
    w.ln2_gain = vec(pre + "ln2_gain", cfg.d, 1.0);
    w.ln2_bias = vec(pre + "ln2_bias", cfg.d, 0.0);
  }
  p.phi = Parameter("phi", Tensor({cfg.layers, kNumEdgeTypes}, 1.0));
  return p;
}

std::vector<Parameter*> GiftEncoderParams::parameters(bool include_phi) {
  std::vector<Parameter*> out = {&tok_emb, &pos_emb, &seg_emb, &spk_emb};
  for (LayerWeights& w : layer) {
    out.push_back(&w.wq);
    out.push_back(&w.wk);
    out.push_back(&w.wv);
    out.push_back(&w.wo);
    out.push_back(&w.ln1_gain);
    out.push_back(&w.ln1_bias);
    out.push_back(&w.ffn_w1);
    out.push_back(&w.ffn_b1);
    out.push_back(&w.ffn_w2);
    out.push_back(&w.ffn_b2);
    out.push_back(&w.ln2_gain);
    out.push_back(&w.ln2_bias);
  }
  if (include_phi) out.push_back(&phi);
  return out;
}

std::int64_t GiftEncoderParams::census(bool include_phi) {
  std::int64_t n = 0;
  for (Parameter* p : parameters(include_phi)) n += p->value.numel();
  return n;
}

Graph::Id embed(Graph& g, const EncodedSequence& seq, GiftEncoderParams& params) {
  for (int id : seq.position_ids)
    if (id >= params.cfg.max_positions)
      throw std::out_of_range("embed: position " + std::to_string(id) + " exceeds table");
  Graph::Id t = g.embedding_rows(params.tok_emb, seq.token_ids);
  Graph::Id p = g.embedding_rows(params.pos_emb, seq.position_ids);
  Graph::Id s = g.embedding_rows(params.seg_emb, seq.segment_ids);
  Graph::Id k = g.embedding_rows(params.spk_emb, seq.speaker_ids);
  return g.add(g.add(t, p), g.add(s, k));
}

namespace {

/// M×M multiplier φ(edge(p,q)) for one layer, gathered from the φ table so
/// gradients flow back into the four scalars.
Graph::Id phi_matrix_for_layer(Graph& g, const EncodedSequence& seq, Parameter& phi,
                               int layer_index) {
  const int m = seq.length();
  const std::vector<std::uint8_t> codes = seq.token_edge_codes();
  std::vector<int> flat(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i)
    flat[i] = layer_index * kNumEdgeTypes + codes[i];
  return g.gather(g.param(phi), std::move(flat), m, m);
}

}  // namespace

Graph::Id graph_induced_attention(Graph& g, Graph::Id H, const EncodedSequence& seq,
                                  Graph::Id phi_row_matrix, const EncoderConfig& cfg,
                                  LayerWeights& w, std::vector<Graph::Id>* probs_out,
                                  std::vector<Graph::Id>* logits_out) {
  const int dh = cfg.d / cfg.h;
  const double denom =
      cfg.scale_mode == ScaleMode::PerHead ? std::sqrt(static_cast<double>(dh))
                                           : std::sqrt(static_cast<double>(cfg.d));
  bool any_key = false;
  for (auto mbit : seq.attention_mask) any_key = any_key || mbit;
  if (!any_key) throw std::domain_error("graph_induced_attention: every key is masked");

  Graph::Id q = g.matmul(H, g.param(w.wq));
  Graph::Id k = g.matmul(H, g.param(w.wk));
  Graph::Id v = g.matmul(H, g.param(w.wv));

  std::vector<Graph::Id> heads;
  heads.reserve(cfg.h);
  for (int i = 0; i < cfg.h; ++i) {
    Graph::Id qi = g.slice_cols(q, i * dh, dh);
    Graph::Id ki = g.slice_cols(k, i * dh, dh);
    Graph::Id vi = g.slice_cols(v, i * dh, dh);
    Graph::Id raw = g.scale(g.matmul_nt(qi, ki), 1.0 / denom);
    Graph::Id logits = phi_row_matrix >= 0 ? g.mul(phi_row_matrix, raw) : raw;
    if (logits_out) logits_out->push_back(logits);
    Graph::Id probs = g.softmax_rows(logits, &seq.attention_mask);
    if (probs_out) probs_out->push_back(probs);
    heads.push_back(g.matmul(probs, vi));
  }
  return g.matmul(g.concat_cols(heads), g.param(w.wo));
}

Graph::Id encoder_layer(Graph& g, Graph::Id H, const EncodedSequence& seq,
                        Graph::Id phi_row_matrix, const EncoderConfig& cfg, LayerWeights& w,
                        std::vector<Graph::Id>* probs_out, std::vector<Graph::Id>* logits_out) {
  Graph::Id attn =
      graph_induced_attention(g, H, seq, phi_row_matrix, cfg, w, probs_out, logits_out);
  Graph::Id x = g.layer_norm(g.add(H, attn), g.param(w.ln1_gain), g.param(w.ln1_bias));
  Graph::Id ffn = g.linear(g.gelu(g.linear(x, g.param(w.ffn_w1), g.param(w.ffn_b1))),
                           g.param(w.ffn_w2), g.param(w.ffn_b2));
  return g.layer_norm(g.add(x, ffn), g.param(w.ln2_gain), g.param(w.ln2_bias));
}

EncodeResult encode(Graph& g, const EncodedSequence& seq, GiftEncoderParams& params,
                    const EncodeOptions& opt) {
  if (seq.length() > params.cfg.max_positions)
    throw std::invalid_argument("encode: sequence length " + std::to_string(seq.length()) +
                                " exceeds max_positions");
  EncodeResult res;
  Graph::Id h = embed(g, seq, params);
  for (int l = 0; l < params.cfg.layers; ++l) {
    Graph::Id phi_m =
        opt.edge_modulation ? phi_matrix_for_layer(g, seq, params.phi, l) : -1;
    std::vector<Graph::Id> probs, logits;
    h = encoder_layer(g, h, seq, phi_m, params.cfg, params.layer[l],
                      opt.capture_attention ? &probs : nullptr,
                      opt.capture_logits ? &logits : nullptr);
    if (opt.capture_attention) res.attn_probs.push_back(std::move(probs));
    if (opt.capture_logits) res.attn_logits.push_back(std::move(logits));
  }
  res.hidden = h;
  return res;
}

}  // namespace gift
