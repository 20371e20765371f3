#pragma once

#include <vector>

#include "gift/encoder.hpp"

namespace gift {

/// Bilinear utterance-matching head (used by both AR and SI, one instance
/// each): u_n = LN(GELU(W_t·cls_n + b_t)), score(N,n) = u_N·A·u_n for n < N.
struct UtteranceMatchHead {
  Parameter transform_w, transform_b;
  Parameter ln_gain, ln_bias;
  Parameter bilinear;  // d×d

  static UtteranceMatchHead init(const std::string& prefix, int d, std::mt19937_64& rng);
  std::vector<Parameter*> parameters();
};

/// Response-selection head: m = sigmoid(e_cls·w + b).
struct ResponseHead {
  Parameter w;  // d×1
  Parameter b;  // 1×1

  static ResponseHead init(const std::string& prefix, int d, std::mt19937_64& rng);
  std::vector<Parameter*> parameters();
};

struct MatchScores {
  std::vector<double> probs;       // softmax over the N−1 preceding utterances
  std::vector<int> gold;           // indicator per candidate
  Graph::Id log_probs_node = -1;   // 1×(N−1) log-probabilities on the tape
};

/// Task-adapted utterance representations from the [CLS] states.
Graph::Id utterance_reps(Graph& g, Graph::Id hidden, const std::vector<int>& cls_positions,
                         UtteranceMatchHead& head);

/// Softmaxed bilinear match of the last utterance against all preceding ones.
MatchScores pairwise_match_scores(Graph& g, Graph::Id reps, UtteranceMatchHead& head);

/// Negative log-likelihood summed over positive gold entries.
Graph::Id match_loss(Graph& g, const MatchScores& scores);

struct RsScore {
  double prob = 0.0;
  Graph::Id logit_node = -1;
};

RsScore rs_score(Graph& g, Graph::Id hidden, int cls_position, ResponseHead& head);
Graph::Id rs_loss(Graph& g, const RsScore& score, int label);

/// Speaker-credit P@1: top-1 candidate's speaker must equal the gold
/// interlocutor. Ties break toward the lowest candidate index.
struct RankedPrediction {
  std::vector<double> scores;       // per candidate utterance
  std::vector<int> candidate_speakers;
  int gold_speaker = -1;
};

int argmax_lowest_tie(const std::vector<double>& scores);
double metric_p_at_1(const std::vector<RankedPrediction>& predictions);

/// Fraction of n-candidate groups whose single positive lands in the top k.
struct ScoredGroup {
  std::vector<double> scores;
  int positive_index = -1;
};

double metric_r_n_at_k(const std::vector<ScoredGroup>& groups, int n, int k);

}  // namespace gift
