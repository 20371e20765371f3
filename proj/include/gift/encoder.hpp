#pragma once

#include <string>
#include <vector>

#include "gift/encoding.hpp"
#include "gift/graph.hpp"

namespace gift {

enum class ScaleMode { PerHead, FullD };  // √(d/h) vs √d logit scaling

const char* scale_mode_name(ScaleMode m);
ScaleMode scale_mode_from_name(const std::string& s);

struct EncoderConfig {
  int d = 64;
  int h = 4;
  int layers = 2;
  int ffn_dim = 256;
  int vocab_size = 1000;
  int max_positions = 128;
  int max_interlocutors = 8;  // row 0 reserved as the SI mask id
  int max_utterances = 16;
  unsigned long long seed = 7;
  ScaleMode scale_mode = ScaleMode::PerHead;

  void validate() const;
};

struct LayerWeights {
  Parameter wq, wk, wv, wo;      // d×d each, per-head slices of width d/h
  Parameter ln1_gain, ln1_bias;  // post-attention norm
  Parameter ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Parameter ln2_gain, ln2_bias;  // post-FFN norm
};

/// Embedding stack, L encoder layers, and the L×4 edge-scalar table φ.
/// φ initialized to 1 makes the encoder exactly a vanilla Transformer.
struct GiftEncoderParams {
  EncoderConfig cfg;
  Parameter tok_emb, pos_emb, seg_emb, spk_emb;
  std::vector<LayerWeights> layer;
  Parameter phi;  // layers×4, indexed by (layer, EdgeType)

  static GiftEncoderParams init(const EncoderConfig& cfg);
  static GiftEncoderParams init(const EncoderConfig& cfg, std::mt19937_64& rng);

  /// Stable order: tables, layer 0.., phi last (omitted for the baseline
  /// census). Pointers remain valid while the struct is not moved.
  std::vector<Parameter*> parameters(bool include_phi = true);
  std::int64_t census(bool include_phi = true);
};

struct EncodeOptions {
  bool edge_modulation = true;   // false = reference path, no φ in the graph
  bool capture_attention = false;
  bool capture_logits = false;
};

struct EncodeResult {
  Graph::Id hidden = -1;                             // M×d
  std::vector<std::vector<Graph::Id>> attn_probs;    // [L][h] M×M when captured
  std::vector<std::vector<Graph::Id>> attn_logits;   // [L][h] M×M when captured
};

/// Sum of token/position/segment/speaker lookups.
Graph::Id embed(Graph& g, const EncodedSequence& seq, GiftEncoderParams& params);

/// One multi-head attention block with edge-modulated logits:
/// logits(p,q) = φ(edge(p,q)) · (q_p·k_q)/scale per head, softmax over
/// unmasked keys, heads concatenated and projected.
Graph::Id graph_induced_attention(Graph& g, Graph::Id H, const EncodedSequence& seq,
                                  Graph::Id phi_row_matrix, const EncoderConfig& cfg,
                                  LayerWeights& w,
                                  std::vector<Graph::Id>* probs_out = nullptr,
                                  std::vector<Graph::Id>* logits_out = nullptr);

/// Post-norm residual order: LN(H + Attn(H)) then LN(x + FFN(x)).
Graph::Id encoder_layer(Graph& g, Graph::Id H, const EncodedSequence& seq,
                        Graph::Id phi_row_matrix, const EncoderConfig& cfg, LayerWeights& w,
                        std::vector<Graph::Id>* probs_out = nullptr,
                        std::vector<Graph::Id>* logits_out = nullptr);

EncodeResult encode(Graph& g, const EncodedSequence& seq, GiftEncoderParams& params,
                    const EncodeOptions& opt = {});

}  // namespace gift
