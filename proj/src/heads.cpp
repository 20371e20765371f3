#include "gift/heads.hpp"

#include <cmath>
#include <stdexcept>

namespace gift {

UtteranceMatchHead UtteranceMatchHead::init(const std::string& prefix, int d,
                                            std::mt19937_64& rng) {
  constexpr double kStd = 0.02;
  UtteranceMatchHead h;
  h.transform_w = Parameter(prefix + ".transform_w", Tensor({d, d}));
  fill_normal(h.transform_w.value, rng, kStd);
  h.transform_b = Parameter(prefix + ".transform_b", Tensor({1, d}));
  h.ln_gain = Parameter(prefix + ".ln_gain", Tensor({1, d}, 1.0));
  h.ln_bias = Parameter(prefix + ".ln_bias", Tensor({1, d}));
  h.bilinear = Parameter(prefix + ".bilinear", Tensor({d, d}));
  fill_normal(h.bilinear.value, rng, kStd);
  return h;
}

std::vector<Parameter*> UtteranceMatchHead::parameters() {
  return {&transform_w, &transform_b, &ln_gain, &ln_bias, &bilinear};
}

ResponseHead ResponseHead::init(const std::string& prefix, int d, std::mt19937_64& rng) {
  ResponseHead h;
  h.w = Parameter(prefix + ".w", Tensor({d, 1}));
  fill_normal(h.w.value, rng, 0.02);
  h.b = Parameter(prefix + ".b", Tensor({1, 1}));
  return h;
}

std::vector<Parameter*> ResponseHead::parameters() { return {&w, &b}; }

Graph::Id utterance_reps(Graph& g, Graph::Id hidden, const std::vector<int>& cls_positions,
                         UtteranceMatchHead& head) {
  if (cls_positions.empty()) throw std::invalid_argument("utterance_reps: no cls positions");
  Graph::Id cls = g.gather_rows(hidden, cls_positions);
  Graph::Id t = g.gelu(g.linear(cls, g.param(head.transform_w), g.param(head.transform_b)));
  return g.layer_norm(t, g.param(head.ln_gain), g.param(head.ln_bias));
}

MatchScores pairwise_match_scores(Graph& g, Graph::Id reps, UtteranceMatchHead& head) {
  const int n = g.val(reps).rows();
  if (n < 2) throw std::invalid_argument("pairwise_match_scores: need at least 2 utterances");
  Graph::Id last = g.slice_rows(reps, n - 1, 1);
  Graph::Id cands = g.slice_rows(reps, 0, n - 1);
  Graph::Id logits = g.matmul_nt(g.matmul(last, g.param(head.bilinear)), cands);  // 1×(n−1)
  Graph::Id logp = g.log_softmax_row(logits);
  MatchScores s;
  s.log_probs_node = logp;
  s.probs.resize(n - 1);
  for (int j = 0; j < n - 1; ++j) s.probs[j] = std::exp(g.val(logp).at(0, j));
  return s;
}

Graph::Id match_loss(Graph& g, const MatchScores& scores) {
  std::vector<int> positives;
  for (std::size_t j = 0; j < scores.gold.size(); ++j)
    if (scores.gold[j]) positives.push_back(static_cast<int>(j));
  if (positives.empty())
    throw std::invalid_argument("match_loss: no positive gold entry");
  return g.neg_sum_selected(scores.log_probs_node, positives);
}

RsScore rs_score(Graph& g, Graph::Id hidden, int cls_position, ResponseHead& head) {
  Graph::Id e = g.slice_rows(hidden, cls_position, 1);
  Graph::Id z = g.add(g.matmul(e, g.param(head.w)), g.param(head.b));
  RsScore s;
  s.logit_node = z;
  s.prob = 1.0 / (1.0 + std::exp(-g.val(z).data[0]));
  return s;
}

Graph::Id rs_loss(Graph& g, const RsScore& score, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("rs_loss: label must be 0/1");
  return g.bce_with_logits(score.logit_node, static_cast<double>(label));
}

int argmax_lowest_tie(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("argmax: empty");
  int best = 0;
  for (int j = 1; j < static_cast<int>(scores.size()); ++j)
    if (scores[j] > scores[best]) best = j;
  return best;
}

double metric_p_at_1(const std::vector<RankedPrediction>& predictions) {
  if (predictions.empty()) throw std::invalid_argument("metric_p_at_1: empty evaluation set");
  int hits = 0;
  for (const RankedPrediction& p : predictions) {
    if (p.scores.size() != p.candidate_speakers.size() || p.scores.empty())
      throw std::invalid_argument("metric_p_at_1: malformed prediction");
    if (p.candidate_speakers[argmax_lowest_tie(p.scores)] == p.gold_speaker) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double metric_r_n_at_k(const std::vector<ScoredGroup>& groups, int n, int k) {
  if (groups.empty()) throw std::invalid_argument("metric_r_n_at_k: empty evaluation set");
  int hits = 0;
  for (const ScoredGroup& grp : groups) {
    if (static_cast<int>(grp.scores.size()) != n)
      throw std::invalid_argument("metric_r_n_at_k: group size " +
                                  std::to_string(grp.scores.size()) + " != n");
    if (grp.positive_index < 0 || grp.positive_index >= n)
      throw std::invalid_argument("metric_r_n_at_k: bad positive index");
    const double ps = grp.scores[grp.positive_index];
    int rank = 0;  // candidates strictly better, plus equal-scored earlier ones
    for (int j = 0; j < n; ++j) {
      if (grp.scores[j] > ps) ++rank;
      if (grp.scores[j] == ps && j < grp.positive_index) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(groups.size());
}

}  // namespace gift
