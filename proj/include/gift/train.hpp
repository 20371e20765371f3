#pragma once

#include <string>
#include <vector>

#include "gift/checkpoint.hpp"
#include "gift/corpus.hpp"
#include "gift/model.hpp"
#include "gift/optim.hpp"

namespace gift {

/// Edge-matrix rewrites for the ablation matrix: merge the directed pair
/// into indirect, collapse the two directions into one shared type, or merge
/// reply-self into indirect. Distinct trained φ per layer: 4/2/3/3.
enum class AblationMode {
  Full,
  MergeDirectedIntoIndirect,
  MergeDirections,
  MergeSelfIntoIndirect,
};

const char* ablation_name(AblationMode m);
AblationMode ablation_from_name(const std::string& s);
EdgeType rewrite_edge(EdgeType t, AblationMode m);
void apply_ablation(EncodedSequence& seq, AblationMode m);
int distinct_phi_count(AblationMode m);

struct TrainConfig {
  Task task = Task::SI;
  int epochs = 10;  // §5.3 default; desk-scale runs override in config
  int batch_size = 8;
  double peak_lr = 2e-5;
  double warmup_prop = 0.1;
  unsigned long long seed = 7;
  AblationMode ablation = AblationMode::Full;
  EncoderConfig encoder;
  int max_tokens_per_utterance = 16;
  std::string corpus_dir;
  std::string out_dir;

  SequenceLimits limits() const;
  void validate() const;
};

TrainConfig train_config_from_json(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& cfg);

/// One AR/SI scoring item: a masked encoded sequence plus the gold indicator
/// over its candidate utterances.
struct MatchItem {
  EncodedSequence seq;
  std::vector<int> gold;                // indicator per candidate
  std::vector<int> candidate_speakers;  // interlocutor idx per candidate
  int gold_speaker = -1;
  int conv_length = 0;
};

/// One RS group: the shared context encoded once per candidate.
struct RsGroup {
  std::vector<EncodedSequence> candidates;
  int positive = -1;
  int conv_length = 0;
};

struct ItemBuild {
  std::vector<MatchItem> match_items;  // AR or SI
  std::vector<RsGroup> rs_groups;      // RS
  int skipped = 0;                     // items without a usable gold
};

ItemBuild build_items(const std::vector<LabeledConversation>& convs, Task task,
                      const Vocabulary& vocab, const SequenceLimits& limits,
                      AblationMode ablation);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;   // mean per item
  double valid_metric = 0.0; // P@1 or R10@1
  double lr_last = 0.0;
};

struct RunReport {
  TrainConfig cfg;
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_valid_metric = 0.0;
  std::string test_metrics_json;
  std::vector<std::vector<double>> phi;  // of the selected model
  int skipped_train_items = 0;
  double wall_seconds = 0.0;
};

std::string run_report_to_json(const RunReport& r);

/// Seeded end-to-end fine-tuning run. Selects the best epoch on the
/// validation metric, restores it into `model`, and (when out_dir is set)
/// writes checkpoint.json/.bin, run_report.json, metrics_test.json and
/// train_trace.csv.
RunReport train(const TrainConfig& cfg, const Corpus& corpus, TaskModel& model);
RunReport train(const TrainConfig& cfg);  // loads corpus_dir itself

/// Deterministic metric report for one split:
/// {task, split, P@1 | R_2@1/R_10@1, n_items, seed, ablation, length_buckets}.
std::string evaluate_split(TaskModel& model, Task task, AblationMode ablation,
                           const std::vector<LabeledConversation>& convs,
                           const Vocabulary& vocab, const SequenceLimits& limits,
                           const std::string& split_name, unsigned long long seed);

std::string evaluate_checkpoint(const std::string& checkpoint_path,
                                const std::string& corpus_dir, const std::string& task,
                                const std::string& split,
                                int max_tokens_per_utterance = 16);

/// φ table as (layer, edge_type, value) rows; also written as CSV when
/// csv_path is non-empty. Reads the manifest only.
std::vector<std::vector<double>> edge_weights(const std::string& checkpoint_path,
                                              const std::string& csv_path = "");

struct AblationRun {
  AblationMode mode = AblationMode::Full;
  unsigned long long seed = 0;
  double test_metric = 0.0;
  int observed_distinct_phi = 0;
};

struct AblationReport {
  std::vector<AblationRun> runs;              // 4 modes × n_seeds
  std::vector<double> mode_means;             // by mode enum order
  std::vector<std::vector<double>> pairwise;  // mean deltas, mode i − mode j
  std::string to_json() const;
};

AblationReport ablation_suite(const TrainConfig& base_cfg, const Corpus& corpus,
                              int n_seeds = 3);

struct GradcheckClassResult {
  std::string name;
  int checked = 0;
  double max_rel_err = 0.0;
  int worst_coord = -1;
  double analytic = 0.0, numeric = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  bool pass = true;
  std::vector<GradcheckClassResult> classes;
  std::string fault_injected;
  std::string to_json() const;
};

/// Central finite differences (step 1e-5, rel tol 1e-4) on a tiny model
/// (d ≤ 8, L ≤ 2) over a fixed toy batch touching all three heads.
/// fault_op is a test fixture that corrupts one op's backward rule.
GradcheckReport gradcheck(const EncoderConfig& cfg, int coords_per_class = 20,
                          const std::string& fault_op = "");

}  // namespace gift
