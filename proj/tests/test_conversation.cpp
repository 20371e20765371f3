#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gift/conversation.hpp"
#include "gift/encoding.hpp"

using namespace gift;

namespace {

MpcInstance make_instance(const std::vector<std::string>& speakers,
                          const std::vector<int>& addressees,  // -1 = none
                          const std::vector<std::string>& texts = {}) {
  MpcInstance inst;
  auto id_of = [&inst](const std::string& name) {
    for (std::size_t i = 0; i < inst.interlocutors.size(); ++i)
      if (inst.interlocutors[i] == name) return static_cast<int>(i);
    inst.interlocutors.push_back(name);
    return static_cast<int>(inst.interlocutors.size()) - 1;
  };
  for (std::size_t n = 0; n < speakers.size(); ++n) {
    Utterance u;
    u.speaker_idx = id_of(speakers[n]);
    u.text = texts.empty() ? "tok" + std::to_string(n) : texts[n];
    inst.utterances.push_back(std::move(u));
  }
  for (std::size_t n = 0; n < addressees.size(); ++n)
    if (addressees[n] >= 0) inst.utterances[n].addressee_idx = addressees[n];
  return inst;
}

Vocabulary test_vocab() {
  std::vector<std::string> toks = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (int i = 0; i < 40; ++i) toks.push_back("tok" + std::to_string(i));
  return Vocabulary(std::move(toks));
}

// Brute-force reply-target oracle: enumerate every preceding utterance by
// the addressee and keep the largest index.
std::optional<int> oracle_target(const MpcInstance& inst, int n) {
  const auto& a = inst.utterances[n].addressee_idx;
  if (!a) return std::nullopt;
  std::optional<int> best;
  for (int m = 0; m < n; ++m)
    if (inst.utterances[m].speaker_idx == *a) best = m;
  return best;
}

MpcInstance random_instance(std::mt19937_64& rng) {
  const int n = 2 + static_cast<int>(rng() % 8);
  const int s = 2 + static_cast<int>(rng() % 3);
  std::vector<std::string> speakers, names;
  for (int i = 0; i < s; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  std::vector<int> addr;
  for (int i = 0; i < n; ++i) {
    speakers.push_back(names[rng() % s]);
    addr.push_back(static_cast<int>(rng() % (s + 1)) - 1);  // -1 or interlocutor
  }
  MpcInstance inst = make_instance(speakers, std::vector<int>(n, -1));
  for (int i = 0; i < n; ++i)
    if (addr[i] >= 0 && addr[i] < static_cast<int>(inst.interlocutors.size()))
      inst.utterances[i].addressee_idx = addr[i];
  return derive_reply_targets(std::move(inst));
}

}  // namespace

TEST_CASE("derive_reply_targets: forced chain") {
  MpcInstance inst = make_instance({"A", "B", "A"}, {-1, 0, 1});
  inst = derive_reply_targets(std::move(inst));
  CHECK(!inst.utterances[0].reply_target);
  CHECK(*inst.utterances[1].reply_target == 0);
  CHECK(*inst.utterances[2].reply_target == 1);
}

TEST_CASE("derive_reply_targets: addressee never spoke before") {
  // C speaks only at the end; U3 addresses C before any C utterance exists.
  MpcInstance inst = make_instance({"A", "B", "A", "C"}, {-1, 0, 2, 0});
  inst = derive_reply_targets(std::move(inst));
  CHECK(!inst.utterances[2].reply_target);  // addressee C never spoke before
}

TEST_CASE("derive_reply_targets: latest utterance of the addressee wins") {
  MpcInstance inst = make_instance({"A", "B", "C", "A"}, {-1, 0, 0, 1});
  inst = derive_reply_targets(std::move(inst));
  CHECK(*inst.utterances[1].reply_target == 0);
  CHECK(*inst.utterances[2].reply_target == 0);
  CHECK(*inst.utterances[3].reply_target == 1);
  for (int n = 0; n < inst.size(); ++n)
    CHECK(inst.utterances[n].reply_target == oracle_target(inst, n));
}

TEST_CASE("derive_reply_targets matches brute-force enumeration on random instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    MpcInstance inst = random_instance(rng);
    for (int n = 0; n < inst.size(); ++n)
      CHECK(inst.utterances[n].reply_target == oracle_target(inst, n));
  }
}

TEST_CASE("edge_type: diagonal, directed pair, and indirect") {
  MpcInstance inst = make_instance({"A", "B", "B"}, {-1, 0, 0});
  inst = derive_reply_targets(std::move(inst));
  // U2 and U3 both reply to U1.
  CHECK(edge_type(1, 1, inst) == EdgeType::ReplySelf);
  CHECK(edge_type(2, 0, inst) == EdgeType::ReplyTo);
  CHECK(edge_type(0, 2, inst) == EdgeType::RepliedBy);
  CHECK(edge_type(1, 2, inst) == EdgeType::IndirectReply);
  CHECK(edge_type(2, 1, inst) == EdgeType::IndirectReply);
  CHECK_THROWS_AS(edge_type(0, 3, inst), std::out_of_range);
}

TEST_CASE("edge matrix invariants: totality, antisymmetry, row sparsity") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    MpcInstance inst = random_instance(rng);
    EdgeMatrix m = build_edge_matrix(inst);
    for (int i = 0; i < m.n; ++i) {
      int reply_to_count = 0;
      CHECK(m.at(i, i) == EdgeType::ReplySelf);
      for (int j = 0; j < m.n; ++j) {
        const auto t = m.at(i, j);
        CHECK((t == EdgeType::ReplyTo || t == EdgeType::RepliedBy ||
               t == EdgeType::ReplySelf || t == EdgeType::IndirectReply));
        CHECK(t == edge_type(i, j, inst));
        if (t == EdgeType::ReplyTo) {
          ++reply_to_count;
          CHECK(m.at(j, i) == EdgeType::RepliedBy);
          CHECK(j < i);  // reply targets strictly precede
        }
      }
      CHECK(reply_to_count <= 1);
    }
  }
}

TEST_CASE("build_encoded_sequence: AR layout arithmetic") {
  MpcInstance inst =
      make_instance({"A", "B"}, {-1, 0}, {"tok1 tok2 tok3", "tok4 tok5 tok6"});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, SequenceLimits{});
  CHECK(seq.length() == 9);  // 2*(1+3)+1
  CHECK(seq.cls_positions == std::vector<int>{0, 4});
  CHECK(seq.token_ids[0] == Vocabulary::kCls);
  CHECK(seq.token_ids[8] == Vocabulary::kSep);
  CHECK(seq.segment_ids == std::vector<int>(9, 0));
  // Speaker ids are interlocutor index + 1, constant within a span.
  for (int p = 0; p < 4; ++p) CHECK(seq.speaker_ids[p] == 1);
  for (int p = 4; p < 9; ++p) CHECK(seq.speaker_ids[p] == 2);
}

TEST_CASE("build_encoded_sequence: RS layout arithmetic and segments") {
  MpcInstance inst =
      make_instance({"A", "B"}, {-1, 0}, {"tok1 tok2 tok3", "tok4 tok5 tok6"});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  const std::vector<int> resp = vocab.tokenize("tok7 tok8");
  EncodedSequence seq = build_encoded_sequence(inst, Task::RS, vocab, SequenceLimits{}, &resp);
  CHECK(seq.length() == 11);  // 1+6+1+2+1
  CHECK(seq.cls_positions == std::vector<int>{0});
  for (int p = 0; p < 8; ++p) CHECK(seq.segment_ids[p] == 0);
  for (int p = 8; p < 11; ++p) CHECK(seq.segment_ids[p] == 1);
  // Virtual CLS: self edge to itself, indirect to everything else.
  CHECK(seq.token_edge(0, 0) == EdgeType::ReplySelf);
  for (int q = 1; q < 11; ++q) CHECK(seq.token_edge(0, q) == EdgeType::IndirectReply);
  CHECK(seq.token_edge(1, 0) == EdgeType::IndirectReply);
}

TEST_CASE("token-level edges expand the utterance-level grid") {
  MpcInstance inst = make_instance({"A", "B", "A"}, {-1, 0, 1},
                                   {"tok1 tok2", "tok3", "tok4 tok5"});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, SequenceLimits{});
  const EdgeMatrix utt = build_edge_matrix(inst);
  for (int p = 0; p < seq.length(); ++p)
    for (int q = 0; q < seq.length(); ++q)
      CHECK(seq.token_edge(p, q) ==
            utt.at(seq.token_utterance[p], seq.token_utterance[q]));
  // Any token of U3 toward any token of U1 carries utterance_level[2][0].
  CHECK(seq.token_edge(seq.cls_positions[2] + 1, seq.cls_positions[0] + 1) == utt.at(2, 0));
}

TEST_CASE("apply_ar_leakage_mask: both directions retyped, history untouched") {
  MpcInstance inst = make_instance({"A", "B", "A", "B"}, {-1, 0, 1, 0});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, SequenceLimits{});
  // Last utterance (idx 3) replies to utterance 0 (latest by A... B? speakers A,B,A,B;
  // addressee of U4 is A, latest A utterance is U3 (idx 2)).
  CHECK(seq.edges.at(3, 2) == EdgeType::ReplyTo);
  EncodedSequence masked = apply_ar_leakage_mask(seq);
  CHECK(masked.edges.at(3, 2) == EdgeType::IndirectReply);
  CHECK(masked.edges.at(2, 3) == EdgeType::IndirectReply);
  // History edges bit-identical.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(masked.edges.at(i, j) == seq.edges.at(i, j));
  CHECK(masked.edges.at(3, 3) == EdgeType::ReplySelf);
}

TEST_CASE("apply_ar_leakage_mask: no reply target, nothing to mask") {
  MpcInstance inst = make_instance({"A", "B"}, {-1, -1});
  const Vocabulary vocab = test_vocab();
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, SequenceLimits{});
  EncodedSequence masked = apply_ar_leakage_mask(seq);
  CHECK(masked.edges.grid == seq.edges.grid);
}

TEST_CASE("apply_si_speaker_mask: scope and idempotence") {
  MpcInstance inst = make_instance({"A", "B", "A"}, {-1, 0, 1},
                                   {"tok1 tok2", "tok3", "tok4 tok5"});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  EncodedSequence seq = build_encoded_sequence(inst, Task::SI, vocab, SequenceLimits{});
  EncodedSequence masked = apply_si_speaker_mask(seq);
  EncodedSequence twice = apply_si_speaker_mask(masked);
  const int last = seq.n_utterances - 1;
  for (int p = 0; p < seq.length(); ++p) {
    if (seq.token_utterance[p] == last) {
      CHECK(masked.speaker_ids[p] == 0);
    } else {
      CHECK(masked.speaker_ids[p] == seq.speaker_ids[p]);
    }
    CHECK(twice.speaker_ids[p] == masked.speaker_ids[p]);
  }
  CHECK(masked.edges.grid == seq.edges.grid);
  CHECK(masked.token_ids == seq.token_ids);
}

TEST_CASE("mask soundness on random instances") {
  std::mt19937_64 rng(53);
  const Vocabulary vocab = test_vocab();
  for (int trial = 0; trial < 60; ++trial) {
    MpcInstance inst = random_instance(rng);
    {
      EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, SequenceLimits{});
      EncodedSequence masked = apply_ar_leakage_mask(seq);
      const int last = masked.n_utterances - 1;
      for (int j = 0; j < masked.edges.n; ++j) {
        if (j == last) continue;
        CHECK(masked.edges.at(last, j) != EdgeType::ReplyTo);
        CHECK(masked.edges.at(j, last) != EdgeType::RepliedBy);
      }
    }
    {
      EncodedSequence seq = build_encoded_sequence(inst, Task::SI, vocab, SequenceLimits{});
      EncodedSequence masked = apply_si_speaker_mask(seq);
      const int last = masked.n_utterances - 1;
      for (int p = 0; p < masked.length(); ++p)
        if (masked.token_utterance[p] == last) CHECK(masked.speaker_ids[p] == 0);
    }
  }
}

TEST_CASE("truncation drops oldest utterances and keeps spans whole") {
  MpcInstance inst = make_instance({"A", "B", "A", "B", "A"}, {-1, 0, 1, 0, 1},
                                   {"tok1 tok2 tok3", "tok4 tok5 tok6", "tok7 tok8 tok9",
                                    "tok1 tok3 tok5", "tok2 tok4 tok6"});
  inst = derive_reply_targets(std::move(inst));
  const Vocabulary vocab = test_vocab();
  SequenceLimits limits;
  limits.max_seq_len = 14;  // fits 3 utterances: 3*(1+3)+1 = 13
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, vocab, limits);
  CHECK(seq.n_utterances == 3);
  CHECK(seq.length() == 13);
  CHECK(seq.cls_positions == std::vector<int>{0, 4, 8});
  // The window is the last 3 utterances; reply links re-indexed.
  CHECK(seq.utterance_speaker == std::vector<int>{0, 1, 0});
  CHECK(seq.edges.at(2, 1) == EdgeType::ReplyTo);
  CHECK(seq.edges.at(1, 0) == EdgeType::ReplyTo);
}

TEST_CASE("errors: empty instance, vocab miss without unknown policy") {
  const Vocabulary vocab = test_vocab();
  MpcInstance empty;
  CHECK_THROWS_AS(build_encoded_sequence(empty, Task::AR, vocab, SequenceLimits{}),
                  std::invalid_argument);
  std::vector<std::string> toks = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "known"};
  Vocabulary strict(toks, /*allow_unknown=*/false);
  MpcInstance inst = make_instance({"A", "B"}, {-1, 0}, {"known", "missing"});
  CHECK_THROWS_AS(build_encoded_sequence(inst, Task::AR, strict, SequenceLimits{}),
                  std::out_of_range);
  Vocabulary lax(toks, /*allow_unknown=*/true);
  EncodedSequence seq = build_encoded_sequence(inst, Task::AR, lax, SequenceLimits{});
  CHECK(seq.token_ids[3] == Vocabulary::kUnk);
}

TEST_CASE("JSONL round-trip preserves the instance") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    MpcInstance inst = random_instance(rng);
    MpcInstance back = instance_from_json(instance_to_json(inst));
    REQUIRE(back.size() == inst.size());
    CHECK(back.interlocutors == inst.interlocutors);
    for (int n = 0; n < inst.size(); ++n) {
      CHECK(back.utterances[n].speaker_idx == inst.utterances[n].speaker_idx);
      CHECK(back.utterances[n].text == inst.utterances[n].text);
      CHECK(back.utterances[n].addressee_idx == inst.utterances[n].addressee_idx);
      CHECK(back.utterances[n].reply_target == inst.utterances[n].reply_target);
    }
  }
}

TEST_CASE("unknown addressee is rejected") {
  const std::string line =
      R"({"utterances":[{"speaker":"a","text":"tok1"},{"speaker":"b","text":"tok2","addressee":"zz"}]})";
  CHECK_THROWS_WITH_AS(instance_from_json(line),
                       doctest::Contains("addressee 'zz' never speaks"),
                       std::invalid_argument);
}
