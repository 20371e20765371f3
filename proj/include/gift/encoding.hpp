#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gift/conversation.hpp"

namespace gift {

enum class Task { AR, SI, RS };

const char* task_name(Task t);
Task task_from_name(const std::string& s);

/// Whitespace tokenizer over a fixed token list. Ids 0..3 are reserved for
/// [PAD], [UNK], [CLS], [SEP]. Misses map to [UNK]; constructing without an
/// unknown policy makes misses an error instead.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  explicit Vocabulary(std::vector<std::string> tokens, bool allow_unknown = true);

  int id(const std::string& token) const;  // throws without unknown policy
  std::vector<int> tokenize(const std::string& text) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, bool allow_unknown = true);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  bool allow_unknown_;
};

struct SequenceLimits {
  int max_seq_len = 128;
  int max_utterances = 16;
  int max_tokens_per_utterance = 16;
};

/// Token-level encoder input for one task item. token_utterance maps each
/// position to its owning utterance (−1 for the RS virtual [CLS]); the edge
/// grid is utterance-level and expanded on demand through that map.
struct EncodedSequence {
  Task task_tag = Task::AR;
  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> segment_ids;
  std::vector<int> speaker_ids;          // interlocutor idx + 1; 0 = SI mask
  std::vector<std::uint8_t> attention_mask;
  std::vector<int> token_utterance;
  std::vector<int> cls_positions;        // per utterance (AR/SI); [0] for RS
  EdgeMatrix edges;                      // utterance-level grid
  int n_utterances = 0;                  // includes the RS response pseudo-utterance
  int n_candidates = 0;                  // history utterances scoring slots (AR/SI)
  std::vector<int> utterance_speaker;    // interlocutor idx per encoded utterance (−1 for RS response)

  int length() const { return static_cast<int>(token_ids.size()); }
  EdgeType token_edge(int p, int q) const;
  /// Flattened per-token edge codes (row-major M×M) for the logit multiplier.
  std::vector<std::uint8_t> token_edge_codes() const;
};

/// Assembles the task layout. AR/SI: [CLS] U1 … [CLS] UN [SEP]. RS: [CLS]
/// U1 … U_{N−1} [SEP] R [SEP] with `response` as candidate segment.
/// Oldest utterances are dropped first when the layout exceeds the limits.
EncodedSequence build_encoded_sequence(const MpcInstance& instance, Task task,
                                       const Vocabulary& vocab, const SequenceLimits& limits,
                                       const std::vector<int>* response = nullptr);

/// AR leakage mask: the last utterance's ReplyTo edge and its mirrored
/// RepliedBy edge are retyped IndirectReply.
EncodedSequence apply_ar_leakage_mask(EncodedSequence seq);

/// SI leakage mask: the last utterance's tokens get the reserved speaker id.
EncodedSequence apply_si_speaker_mask(EncodedSequence seq, int mask_speaker_id = 0);

}  // namespace gift
