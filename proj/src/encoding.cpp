#include "gift/encoding.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gift {

const char* task_name(Task t) {
  switch (t) {
    case Task::AR: return "ar";
    case Task::SI: return "si";
    case Task::RS: return "rs";
  }
  throw std::logic_error("task_name: bad enum");
}

Task task_from_name(const std::string& s) {
  if (s == "ar" || s == "AR") return Task::AR;
  if (s == "si" || s == "SI") return Task::SI;
  if (s == "rs" || s == "RS") return Task::RS;
  throw std::invalid_argument("unknown task '" + s + "' (want ar|si|rs)");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, bool allow_unknown)
    : tokens_(std::move(tokens)), allow_unknown_(allow_unknown) {
  if (tokens_.size() < 4 || tokens_[kPad] != "[PAD]" || tokens_[kUnk] != "[UNK]" ||
      tokens_[kCls] != "[CLS]" || tokens_[kSep] != "[SEP]")
    throw std::invalid_argument("Vocabulary: first four tokens must be [PAD] [UNK] [CLS] [SEP]");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("Vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  if (allow_unknown_) return kUnk;
  throw std::out_of_range("Vocabulary: token '" + token + "' missing and no unknown policy");
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(id(tok));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("Vocabulary: cannot write " + path);
  for (const auto& t : tokens_) f << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path, bool allow_unknown) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("Vocabulary: cannot read " + path);
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) toks.push_back(line);
  }
  return Vocabulary(std::move(toks), allow_unknown);
}

EdgeType EncodedSequence::token_edge(int p, int q) const {
  const int up = token_utterance[p];
  const int uq = token_utterance[q];
  if (up < 0 || uq < 0) return p == q ? EdgeType::ReplySelf : EdgeType::IndirectReply;
  return edges.at(up, uq);
}

std::vector<std::uint8_t> EncodedSequence::token_edge_codes() const {
  const int m = length();
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(m) * m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      codes[static_cast<std::size_t>(p) * m + q] =
          static_cast<std::uint8_t>(token_edge(p, q));
  return codes;
}

namespace {

std::vector<int> capped_tokens(const Utterance& u, const Vocabulary& vocab,
                               const SequenceLimits& limits, int index) {
  std::vector<int> toks = u.tokens.empty() ? vocab.tokenize(u.text) : u.tokens;
  if (toks.empty())
    throw std::invalid_argument("utterance " + std::to_string(index) +
                                " has no tokens after tokenization");
  if (static_cast<int>(toks.size()) > limits.max_tokens_per_utterance)
    toks.resize(limits.max_tokens_per_utterance);
  return toks;
}

/// Keeps the longest suffix of utterances whose layout fits the limits.
/// extra_cost covers layout overhead outside the per-utterance spans.
int truncation_offset(const std::vector<std::vector<int>>& toks, int per_utt_overhead,
                      int extra_cost, const SequenceLimits& limits) {
  const int n = static_cast<int>(toks.size());
  int offset = n;
  int cost = extra_cost;
  for (int i = n - 1; i >= 0; --i) {
    const int c = per_utt_overhead + static_cast<int>(toks[i].size());
    if (cost + c > limits.max_seq_len) break;
    if (n - i > limits.max_utterances) break;
    cost += c;
    offset = i;
  }
  return offset;
}

MpcInstance suffix_instance(const MpcInstance& full, int offset) {
  if (offset == 0) return full;
  MpcInstance out;
  out.interlocutors = full.interlocutors;
  for (int i = offset; i < full.size(); ++i) {
    Utterance u = full.utterances[i];
    if (u.reply_target) {
      if (*u.reply_target < offset)
        u.reply_target.reset();  // target fell off the window
      else
        u.reply_target = *u.reply_target - offset;
    }
    out.utterances.push_back(std::move(u));
  }
  return out;
}

}  // namespace

EncodedSequence build_encoded_sequence(const MpcInstance& instance, Task task,
                                       const Vocabulary& vocab, const SequenceLimits& limits,
                                       const std::vector<int>* response) {
  if (instance.utterances.empty()) throw std::invalid_argument("build_encoded_sequence: empty instance");
  if (task == Task::RS && (response == nullptr || response->empty()))
    throw std::invalid_argument("build_encoded_sequence: RS needs a response candidate");

  std::vector<std::vector<int>> toks;
  toks.reserve(instance.utterances.size());
  for (int i = 0; i < instance.size(); ++i)
    toks.push_back(capped_tokens(instance.utterances[i], vocab, limits, i));

  EncodedSequence seq;
  seq.task_tag = task;

  if (task == Task::AR || task == Task::SI) {
    // [CLS] U1 [CLS] U2 ... [CLS] UN [SEP]
    const int offset = truncation_offset(toks, /*per_utt_overhead=*/1, /*extra_cost=*/1, limits);
    const int kept = instance.size() - offset;
    if (kept < 2)
      throw std::invalid_argument("build_encoded_sequence: fewer than 2 utterances fit limits");
    MpcInstance window = suffix_instance(instance, offset);
    seq.n_utterances = kept;
    seq.n_candidates = kept - 1;
    seq.edges = build_edge_matrix(window);
    for (int k = 0; k < kept; ++k) seq.utterance_speaker.push_back(window.utterances[k].speaker_idx);
    for (int k = 0; k < kept; ++k) {
      const Utterance& u = window.utterances[k];
      seq.cls_positions.push_back(seq.length());
      seq.token_ids.push_back(Vocabulary::kCls);
      seq.token_utterance.push_back(k);
      seq.speaker_ids.push_back(u.speaker_idx + 1);
      for (int t : toks[offset + k]) {
        seq.token_ids.push_back(t);
        seq.token_utterance.push_back(k);
        seq.speaker_ids.push_back(u.speaker_idx + 1);
      }
    }
    seq.token_ids.push_back(Vocabulary::kSep);  // belongs to the last utterance
    seq.token_utterance.push_back(kept - 1);
    seq.speaker_ids.push_back(window.utterances[kept - 1].speaker_idx + 1);
    seq.segment_ids.assign(seq.length(), 0);
  } else {
    // [CLS] U1 ... U_{N-1} [SEP] R [SEP]; the whole instance is context.
    std::vector<int> resp = *response;
    if (static_cast<int>(resp.size()) > limits.max_tokens_per_utterance)
      resp.resize(limits.max_tokens_per_utterance);
    const int resp_cost = 3 + static_cast<int>(resp.size());  // CLS + SEP + R + SEP
    const int offset = truncation_offset(toks, /*per_utt_overhead=*/0, resp_cost, limits);
    const int kept = instance.size() - offset;
    if (kept < 1)
      throw std::invalid_argument("build_encoded_sequence: no context utterance fits limits");
    MpcInstance window = suffix_instance(instance, offset);
    seq.n_utterances = kept + 1;  // + response pseudo-utterance
    seq.n_candidates = kept;
    for (int k = 0; k < kept; ++k) seq.utterance_speaker.push_back(window.utterances[k].speaker_idx);
    seq.utterance_speaker.push_back(-1);

    // Context edges plus an indirect-everywhere row/col for the response.
    EdgeMatrix ctx = build_edge_matrix(window);
    seq.edges.n = kept + 1;
    seq.edges.grid.assign(static_cast<std::size_t>(kept + 1) * (kept + 1),
                          EdgeType::IndirectReply);
    for (int i = 0; i < kept; ++i)
      for (int j = 0; j < kept; ++j) seq.edges.at(i, j) = ctx.at(i, j);
    seq.edges.at(kept, kept) = EdgeType::ReplySelf;

    seq.cls_positions.push_back(0);
    seq.token_ids.push_back(Vocabulary::kCls);  // virtual node
    seq.token_utterance.push_back(-1);
    seq.speaker_ids.push_back(0);
    for (int k = 0; k < kept; ++k) {
      const Utterance& u = window.utterances[k];
      for (int t : toks[offset + k]) {
        seq.token_ids.push_back(t);
        seq.token_utterance.push_back(k);
        seq.speaker_ids.push_back(u.speaker_idx + 1);
      }
    }
    seq.token_ids.push_back(Vocabulary::kSep);  // closes the context segment
    seq.token_utterance.push_back(kept - 1);
    seq.speaker_ids.push_back(window.utterances[kept - 1].speaker_idx + 1);
    const int context_len = seq.length();
    for (int t : resp) {
      seq.token_ids.push_back(t);
      seq.token_utterance.push_back(kept);
      seq.speaker_ids.push_back(0);
    }
    seq.token_ids.push_back(Vocabulary::kSep);
    seq.token_utterance.push_back(kept);
    seq.speaker_ids.push_back(0);
    seq.segment_ids.assign(seq.length(), 1);
    for (int p = 0; p < context_len; ++p) seq.segment_ids[p] = 0;
  }

  seq.position_ids.resize(seq.length());
  for (int p = 0; p < seq.length(); ++p) seq.position_ids[p] = p;
  seq.attention_mask.assign(seq.length(), 1);
  return seq;
}

EncodedSequence apply_ar_leakage_mask(EncodedSequence seq) {
  if (seq.task_tag != Task::AR)
    throw std::invalid_argument("apply_ar_leakage_mask: sequence is not an AR item");
  const int last = seq.n_utterances - 1;
  for (int j = 0; j < seq.edges.n; ++j) {
    if (j == last) continue;
    if (seq.edges.at(last, j) == EdgeType::ReplyTo) seq.edges.at(last, j) = EdgeType::IndirectReply;
    if (seq.edges.at(j, last) == EdgeType::RepliedBy) seq.edges.at(j, last) = EdgeType::IndirectReply;
  }
  return seq;
}

EncodedSequence apply_si_speaker_mask(EncodedSequence seq, int mask_speaker_id) {
  if (seq.task_tag != Task::SI)
    throw std::invalid_argument("apply_si_speaker_mask: sequence is not an SI item");
  const int last = seq.n_utterances - 1;
  for (int p = 0; p < seq.length(); ++p)
    if (seq.token_utterance[p] == last) seq.speaker_ids[p] = mask_speaker_id;
  return seq;
}

}  // namespace gift
