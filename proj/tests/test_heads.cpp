#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gift/heads.hpp"
#include "gift/model.hpp"
#include "gift/optim.hpp"

using namespace gift;

namespace {

UtteranceMatchHead neutral_head(int d) {
  std::mt19937_64 rng(1);
  UtteranceMatchHead h = UtteranceMatchHead::init("h", d, rng);
  h.transform_w.value.fill(0.0);
  for (int i = 0; i < d; ++i) h.transform_w.value.at(i, i) = 1.0;
  h.transform_b.value.fill(0.0);
  h.ln_gain.value.fill(1.0);
  h.ln_bias.value.fill(0.0);
  return h;
}

double gelu_ref(double x) { return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("utterance_reps: identity transform gives LN of GELU of the CLS row") {
  const int d = 6;
  UtteranceMatchHead head = neutral_head(d);
  std::mt19937_64 rng(3);
  Tensor hidden({5, d});
  fill_normal(hidden, rng, 1.3);
  Graph g;
  Graph::Id reps = utterance_reps(g, g.input(hidden), {1, 4}, head);
  CHECK(g.val(reps).rows() == 2);  // row count = utterance count

  for (int r = 0; r < 2; ++r) {
    const int cls = r == 0 ? 1 : 4;
    std::vector<double> v(d);
    for (int j = 0; j < d; ++j) v[j] = gelu_ref(hidden.at(cls, j));
    double mu = 0, var = 0;
    for (double x : v) mu += x;
    mu /= d;
    for (double x : v) var += (x - mu) * (x - mu);
    var /= d;
    for (int j = 0; j < d; ++j) {
      const double want = (v[j] - mu) / std::sqrt(var + 1e-12);
      CHECK(g.val(reps).at(r, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("utterance_reps: 2-utterance toy matches a scalar transcription") {
  const int d = 2;
  std::mt19937_64 rng(5);
  UtteranceMatchHead head = UtteranceMatchHead::init("h", d, rng);
  Tensor hidden = Tensor::from_rows({{0.3, -0.7}, {1.1, 0.4}});
  Graph g;
  Graph::Id reps = utterance_reps(g, g.input(hidden), {0, 1}, head);
  for (int r = 0; r < 2; ++r) {
    std::vector<double> t(d);
    for (int j = 0; j < d; ++j) {
      double z = head.transform_b.value.at(0, j);
      for (int k = 0; k < d; ++k) z += hidden.at(r, k) * head.transform_w.value.at(k, j);
      t[j] = gelu_ref(z);
    }
    double mu = (t[0] + t[1]) / 2;
    double var = ((t[0] - mu) * (t[0] - mu) + (t[1] - mu) * (t[1] - mu)) / 2;
    for (int j = 0; j < d; ++j) {
      const double want = (t[j] - mu) / std::sqrt(var + 1e-12) * head.ln_gain.value.at(0, j) +
                          head.ln_bias.value.at(0, j);
      CHECK(g.val(reps).at(r, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("pairwise_match_scores: singleton candidate has probability 1") {
  UtteranceMatchHead head = neutral_head(3);
  Graph g;
  Graph::Id u = g.input(Tensor::from_rows({{1, 0, 0}, {0, 1, 0}}));
  MatchScores s = pairwise_match_scores(g, u, head);
  REQUIRE(s.probs.size() == 1);
  CHECK(s.probs[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pairwise_match_scores: zero bilinear gives the uniform distribution") {
  UtteranceMatchHead head = neutral_head(3);
  head.bilinear.value.fill(0.0);
  Graph g;
  Graph::Id u = g.input(Tensor::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {1, 1, 1}}));
  MatchScores s = pairwise_match_scores(g, u, head);
  REQUIRE(s.probs.size() == 3);
  for (double p : s.probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("pairwise_match_scores: N=3, d=1 scalar softmax oracle") {
  UtteranceMatchHead head = neutral_head(1);
  head.bilinear.value.fill(1.0);
  Graph g;
  Graph::Id u = g.input(Tensor::from_rows({{2.0}, {3.0}, {5.0}}));
  MatchScores s = pairwise_match_scores(g, u, head);
  // logits = [5*2, 5*3] = [10, 15]
  const double e10 = std::exp(10.0 - 15.0), e15 = 1.0;
  CHECK(s.probs[0] == doctest::Approx(e10 / (e10 + e15)).epsilon(1e-14));
  CHECK(s.probs[1] == doctest::Approx(e15 / (e10 + e15)).epsilon(1e-14));
  CHECK_THROWS_AS(pairwise_match_scores(g, g.input(Tensor({1, 1}, 1.0)), head),
                  std::invalid_argument);
}

TEST_CASE("match loss: perfect prediction, uniform, and multi-positive sums") {
  UtteranceMatchHead head = neutral_head(1);
  Graph g;

  auto loss_for = [&g](std::vector<double> probs, std::vector<int> gold) {
    // logits = log(probs) reproduces the probabilities after softmax.
    std::vector<double> logits;
    for (double p : probs) logits.push_back(std::log(p));
    MatchScores s;
    s.log_probs_node = g.log_softmax_row(g.input(Tensor::row(logits)));
    s.gold = std::move(gold);
    s.probs = std::move(probs);
    return g.val(match_loss(g, s)).data[0];
  };

  CHECK(loss_for({1.0}, {1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loss_for({0.25, 0.25, 0.25, 0.25}, {0, 1, 0, 0}) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(loss_for({0.5, 0.25, 0.25}, {1, 1, 0}) ==
        doctest::Approx(-(std::log(0.5) + std::log(0.25))).epsilon(1e-12));

  MatchScores no_pos;
  no_pos.log_probs_node = g.log_softmax_row(g.input(Tensor::row({0.0, 0.0})));
  no_pos.gold = {0, 0};
  CHECK_THROWS_AS(match_loss(g, no_pos), std::invalid_argument);
}

TEST_CASE("rs head: neutral head scores 1/2 with loss log 2; sigmoid oracle at 2") {
  std::mt19937_64 rng(7);
  ResponseHead head = ResponseHead::init("rs", 3, rng);
  head.w.value.fill(0.0);
  head.b.value.fill(0.0);
  Graph g;
  Graph::Id hidden = g.input(Tensor::from_rows({{0.4, -0.2, 1.0}}));
  RsScore s = rs_score(g, hidden, 0, head);
  CHECK(s.prob == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.val(rs_loss(g, s, 1)).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(g.val(rs_loss(g, s, 0)).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // e·w + b = 2 → sigmoid
  head.w.value.fill(0.0);
  head.w.value.at(2, 0) = 2.0;
  Graph g2;
  Graph::Id h2 = g2.input(Tensor::from_rows({{0.0, 0.0, 1.0}}));
  RsScore s2 = rs_score(g2, h2, 0, head);
  CHECK(s2.prob == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-14));
  CHECK(s2.prob == doctest::Approx(0.8808).epsilon(1e-4));

  // y=1 with a saturated positive logit → loss ~ 0.
  head.w.value.at(2, 0) = 40.0;
  Graph g3;
  RsScore s3 = rs_score(g3, g3.input(Tensor::from_rows({{0.0, 0.0, 1.0}})), 0, head);
  CHECK(g3.val(rs_loss(g3, s3, 1)).data[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("metric_p_at_1: speaker-level credit and ratios") {
  std::vector<RankedPrediction> preds;
  preds.push_back({{0.9, 0.1}, {2, 3}, 2});       // correct
  preds.push_back({{0.2, 0.8}, {2, 3}, 3});       // correct
  preds.push_back({{0.8, 0.2, 0.0}, {1, 4, 1}, 1});  // correct
  CHECK(metric_p_at_1(preds) == doctest::Approx(1.0));

  // Top-1 is a different utterance by the gold speaker: still a success.
  std::vector<RankedPrediction> speaker_credit;
  speaker_credit.push_back({{0.7, 0.3}, {5, 5}, 5});
  CHECK(metric_p_at_1(speaker_credit) == doctest::Approx(1.0));

  std::vector<RankedPrediction> three_of_five;
  for (int i = 0; i < 5; ++i)
    three_of_five.push_back({{1.0, 0.0}, {i < 3 ? 1 : 2, 0}, 1});
  CHECK(metric_p_at_1(three_of_five) == doctest::Approx(0.6));

  CHECK_THROWS_AS(metric_p_at_1({}), std::invalid_argument);
}

TEST_CASE("metric_p_at_1: ties break toward the lowest candidate index") {
  std::vector<RankedPrediction> preds;
  preds.push_back({{0.5, 0.5}, {1, 2}, 1});  // tie → candidate 0 → speaker 1 → hit
  preds.push_back({{0.5, 0.5}, {1, 2}, 2});  // tie → candidate 0 → speaker 1 → miss
  CHECK(metric_p_at_1(preds) == doctest::Approx(0.5));
}

TEST_CASE("metric_r_n_at_k: basics, ties, and errors") {
  std::vector<ScoredGroup> top;
  top.push_back({{0.9, 0.5, 0.1}, 0});
  top.push_back({{0.1, 0.9, 0.5}, 1});
  CHECK(metric_r_n_at_k(top, 3, 1) == doctest::Approx(1.0));

  std::vector<ScoredGroup> tie;
  tie.push_back({{0.9, 0.9}, 0});  // tie broken by lower index: positive wins
  CHECK(metric_r_n_at_k(tie, 2, 1) == doctest::Approx(1.0));
  tie[0].positive_index = 1;  // now the tie goes against the positive
  CHECK(metric_r_n_at_k(tie, 2, 1) == doctest::Approx(0.0));

  std::vector<ScoredGroup> wrong_size;
  wrong_size.push_back({{0.5, 0.5}, 0});
  CHECK_THROWS_AS(metric_r_n_at_k(wrong_size, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(metric_r_n_at_k({}, 2, 1), std::invalid_argument);
}

TEST_CASE("metric_r_n_at_k: random scorer sits near 1/n") {
  std::mt19937_64 rng(11);
  std::vector<ScoredGroup> groups;
  for (int i = 0; i < 800; ++i) {
    ScoredGroup grp;
    grp.positive_index = static_cast<int>(rng() % 10);
    for (int j = 0; j < 10; ++j)
      grp.scores.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    groups.push_back(std::move(grp));
  }
  CHECK(std::abs(metric_r_n_at_k(groups, 10, 1) - 0.1) < 0.05);
}

TEST_CASE("softmax-argmax invariance under constant logit shifts") {
  UtteranceMatchHead head = neutral_head(1);
  head.bilinear.value.fill(1.0);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> logits(5);
    for (double& v : logits) v = std::uniform_real_distribution<double>(-3, 3)(rng);
    const double shift = std::uniform_real_distribution<double>(-10, 10)(rng);
    Graph g;
    Graph::Id base = g.softmax_rows(g.input(Tensor::row(logits)));
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += shift;
    Graph::Id moved = g.softmax_rows(g.input(Tensor::row(shifted)));
    std::vector<double> pb(5), pm(5);
    for (int j = 0; j < 5; ++j) {
      pb[j] = g.val(base).at(0, j);
      pm[j] = g.val(moved).at(0, j);
    }
    CHECK(argmax_lowest_tie(pb) == argmax_lowest_tie(pm));
    for (int j = 0; j < 5; ++j) CHECK(pb[j] == doctest::Approx(pm[j]).epsilon(1e-10));
  }
}

TEST_CASE("losses are nonnegative; zero only at probability one on positives") {
  Graph g;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<double> logits(n);
    for (double& v : logits) v = std::uniform_real_distribution<double>(-4, 4)(rng);
    MatchScores s;
    s.log_probs_node = g.log_softmax_row(g.input(Tensor::row(logits)));
    s.gold.assign(n, 0);
    s.gold[rng() % n] = 1;
    CHECK(g.val(match_loss(g, s)).data[0] >= 0.0);
  }
}

TEST_CASE("gradient flow: bilinear and rs weights pass fd; phi and tables reached") {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.h = 2;
  cfg.layers = 2;
  cfg.ffn_dim = 16;
  cfg.vocab_size = 24;
  cfg.max_positions = 32;
  cfg.max_interlocutors = 6;
  cfg.max_utterances = 8;
  cfg.seed = 19;
  TaskModel model = TaskModel::init(cfg);

  EncodedSequence seq;
  seq.task_tag = Task::AR;
  seq.n_utterances = 3;
  seq.n_candidates = 2;
  seq.edges.n = 3;
  seq.edges.grid.assign(9, EdgeType::IndirectReply);
  for (int i = 0; i < 3; ++i) seq.edges.at(i, i) = EdgeType::ReplySelf;
  seq.edges.at(1, 0) = EdgeType::ReplyTo;
  seq.edges.at(0, 1) = EdgeType::RepliedBy;
  seq.edges.at(2, 1) = EdgeType::ReplyTo;
  seq.edges.at(1, 2) = EdgeType::RepliedBy;
  std::mt19937_64 rng(23);
  for (int i = 0; i < 3; ++i) {
    seq.cls_positions.push_back(seq.length());
    seq.utterance_speaker.push_back(i % 2);
    for (int t = 0; t < 3; ++t) {
      seq.token_ids.push_back(t == 0 ? Vocabulary::kCls : 4 + static_cast<int>(rng() % 20));
      seq.token_utterance.push_back(i);
      seq.speaker_ids.push_back(i % 2 + 1);
      seq.segment_ids.push_back(0);
    }
  }
  seq.position_ids.resize(seq.length());
  for (int p = 0; p < seq.length(); ++p) seq.position_ids[p] = p;
  seq.attention_mask.assign(seq.length(), 1);

  auto loss_of = [&](Graph& g) {
    EncodeResult enc = encode(g, seq, model.encoder);
    Graph::Id reps = utterance_reps(g, enc.hidden, seq.cls_positions, model.ar_head);
    MatchScores s = pairwise_match_scores(g, reps, model.ar_head);
    s.gold = {1, 0};
    Graph::Id l1 = match_loss(g, s);
    RsScore rs = rs_score(g, enc.hidden, 0, model.rs_head);
    return g.add(l1, rs_loss(g, rs, 1));
  };

  Graph g;
  zero_grads(model.all_parameters());
  g.backward(loss_of(g));

  auto grad_norm = [](const Parameter& p) {
    double s = 0;
    for (double v : p.grad.data) s += v * v;
    return s;
  };
  CHECK(grad_norm(model.encoder.phi) > 0.0);
  CHECK(grad_norm(model.encoder.tok_emb) > 0.0);
  CHECK(grad_norm(model.encoder.pos_emb) > 0.0);
  CHECK(grad_norm(model.encoder.seg_emb) > 0.0);
  CHECK(grad_norm(model.encoder.spk_emb) > 0.0);
  CHECK(grad_norm(model.ar_head.bilinear) > 0.0);
  CHECK(grad_norm(model.rs_head.w) > 0.0);

  Graph fg;
  std::mt19937_64 crng(29);
  for (Parameter* p : {&model.ar_head.bilinear, &model.rs_head.w, &model.rs_head.b}) {
    for (int rep = 0; rep < 8; ++rep) {
      const std::int64_t k =
          std::uniform_int_distribution<std::int64_t>(0, p->value.numel() - 1)(crng);
      const double saved = p->value.data[k];
      const double h = 1e-5;
      p->value.data[k] = saved + h;
      fg.reset();
      const double up = fg.val(loss_of(fg)).data[0];
      p->value.data[k] = saved - h;
      fg.reset();
      const double dn = fg.val(loss_of(fg)).data[0];
      p->value.data[k] = saved;
      const double numeric = (up - dn) / (2 * h);
      const double analytic = p->grad.data[k];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-5});
      INFO(p->name, "[", k, "] analytic ", analytic, " numeric ", numeric);
      CHECK(rel < 1e-4);
    }
  }
}
