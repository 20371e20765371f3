#pragma once

#include <string>
#include <vector>

#include "gift/conversation.hpp"
#include "gift/encoding.hpp"

namespace gift {

/// Synthetic-corpus generator settings. Planted mode builds conversations
/// whose AR/SI answers are recoverable by following reply edges but
/// ambiguous under bag-of-words matching (echo utterances repeat the live
/// topic token under wrong speakers). planted=false keeps the reply skeleton
/// but randomizes topics and the final-utterance labels, for null-effect
/// control runs.
struct GeneratorConfig {
  int n_conversations = 2500;
  int min_length = 5;
  int max_length = 15;
  int min_speakers = 2;
  int max_speakers = 5;
  int vocab_size = 300;
  int tokens_per_utterance = 5;
  int topic_token_pool = 64;
  int persona_token_pool = 8;
  double noise_rate = 0.25;
  int rs_candidates_n = 10;
  int n_distractors = 3;
  bool planted = true;
  double bow_cap = 0.70;
  unsigned long long seed = 1;

  void validate() const;
};

struct LabeledConversation {
  MpcInstance instance;
  std::string gold_addressee;  // addressee of the last utterance
  std::string gold_speaker;    // speaker of the last utterance
  std::vector<std::string> rs_candidates;
  int rs_positive = -1;
};

struct SynthCorpus {
  std::vector<LabeledConversation> train, valid, test;

  const std::vector<LabeledConversation>& split(const std::string& name) const;
};

/// Success rates of the two structure oracles over a conversation set. The
/// bag-of-words baseline scores candidates by token overlap with the last
/// utterance (ties to the nearest) and predicts that utterance's speaker;
/// the edge oracle follows the reply link (one hop for AR, two for SI).
struct OracleRates {
  double bow_ar = 0.0, bow_si = 0.0;
  double edge_ar = 0.0, edge_si = 0.0;
  int n = 0;
};

OracleRates run_structure_oracles(const std::vector<LabeledConversation>& convs);

SynthCorpus generate_conversations(const GeneratorConfig& cfg);

Vocabulary build_vocabulary(const GeneratorConfig& cfg);

/// Generate, certify planted structure (planted mode), and write
/// train/valid/test JSONL + vocab.txt + manifest.json into out_dir.
/// Throws if the certification gate fails.
void generate_corpus(const GeneratorConfig& cfg, const std::string& out_dir);

std::vector<LabeledConversation> load_jsonl(const std::string& path);

struct Corpus {
  SynthCorpus data;
  Vocabulary vocab;
};

Corpus load_corpus_dir(const std::string& dir);

GeneratorConfig generator_config_from_json(const std::string& json_text);
std::string generator_config_to_json(const GeneratorConfig& cfg);

}  // namespace gift
