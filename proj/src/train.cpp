#include "gift/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace gift {

using nlohmann::json;
namespace fs = std::filesystem;

const char* ablation_name(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::MergeDirectedIntoIndirect: return "merge_directed_into_indirect";
    case AblationMode::MergeDirections: return "merge_directions";
    case AblationMode::MergeSelfIntoIndirect: return "merge_self_into_indirect";
  }
  throw std::logic_error("ablation_name: bad enum");
}

AblationMode ablation_from_name(const std::string& s) {
  for (AblationMode m : {AblationMode::Full, AblationMode::MergeDirectedIntoIndirect,
                         AblationMode::MergeDirections, AblationMode::MergeSelfIntoIndirect})
    if (s == ablation_name(m)) return m;
  throw std::invalid_argument("unknown ablation mode '" + s + "'");
}

EdgeType rewrite_edge(EdgeType t, AblationMode m) {
  switch (m) {
    case AblationMode::Full:
      return t;
    case AblationMode::MergeDirectedIntoIndirect:
      if (t == EdgeType::ReplyTo || t == EdgeType::RepliedBy) return EdgeType::IndirectReply;
      return t;
    case AblationMode::MergeDirections:
      if (t == EdgeType::RepliedBy) return EdgeType::ReplyTo;
      return t;
    case AblationMode::MergeSelfIntoIndirect:
      if (t == EdgeType::ReplySelf) return EdgeType::IndirectReply;
      return t;
  }
  throw std::logic_error("rewrite_edge: bad enum");
}

void apply_ablation(EncodedSequence& seq, AblationMode m) {
  if (m == AblationMode::Full) return;
  for (EdgeType& t : seq.edges.grid) t = rewrite_edge(t, m);
}

int distinct_phi_count(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return 4;
    case AblationMode::MergeDirectedIntoIndirect: return 2;
    case AblationMode::MergeDirections: return 3;
    case AblationMode::MergeSelfIntoIndirect: return 3;
  }
  throw std::logic_error("distinct_phi_count: bad enum");
}

SequenceLimits TrainConfig::limits() const {
  return SequenceLimits{encoder.max_positions, encoder.max_utterances,
                        max_tokens_per_utterance};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size >= 1");
  if (peak_lr <= 0) throw std::invalid_argument("TrainConfig: peak_lr > 0");
  if (warmup_prop <= 0 || warmup_prop >= 1)
    throw std::invalid_argument("TrainConfig: warmup_prop in (0,1)");
  if (max_tokens_per_utterance < 1)
    throw std::invalid_argument("TrainConfig: max_tokens_per_utterance >= 1");
  encoder.validate();
}

TrainConfig train_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  TrainConfig c;
  if (j.contains("task")) c.task = task_from_name(j["task"].get<std::string>());
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("peak_lr", c.peak_lr);
  get("warmup_prop", c.warmup_prop);
  get("seed", c.seed);
  if (j.contains("ablation")) c.ablation = ablation_from_name(j["ablation"].get<std::string>());
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j["encoder"].dump());
  get("max_tokens_per_utterance", c.max_tokens_per_utterance);
  get("corpus_dir", c.corpus_dir);
  get("out_dir", c.out_dir);
  c.validate();
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["task"] = task_name(c.task);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["peak_lr"] = c.peak_lr;
  j["warmup_prop"] = c.warmup_prop;
  j["seed"] = c.seed;
  j["ablation"] = ablation_name(c.ablation);
  j["encoder"] = json::parse(encoder_config_to_json(c.encoder));
  j["max_tokens_per_utterance"] = c.max_tokens_per_utterance;
  j["corpus_dir"] = c.corpus_dir;
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

namespace {

int speaker_index(const MpcInstance& inst, const std::string& name) {
  for (std::size_t i = 0; i < inst.interlocutors.size(); ++i)
    if (inst.interlocutors[i] == name) return static_cast<int>(i);
  return -1;
}

MpcInstance context_of(const MpcInstance& inst) {
  MpcInstance ctx = inst;
  ctx.utterances.pop_back();
  return ctx;
}

}  // namespace

ItemBuild build_items(const std::vector<LabeledConversation>& convs, Task task,
                      const Vocabulary& vocab, const SequenceLimits& limits,
                      AblationMode ablation) {
  ItemBuild out;
  for (const LabeledConversation& c : convs) {
    try {
      if (task == Task::AR || task == Task::SI) {
        const std::string& gold_name = task == Task::AR ? c.gold_addressee : c.gold_speaker;
        const int gold = speaker_index(c.instance, gold_name);
        if (gold < 0) {
          ++out.skipped;
          continue;
        }
        EncodedSequence seq = build_encoded_sequence(c.instance, task, vocab, limits);
        seq = task == Task::AR ? apply_ar_leakage_mask(std::move(seq))
                               : apply_si_speaker_mask(std::move(seq));
        apply_ablation(seq, ablation);
        MatchItem item;
        item.gold_speaker = gold;
        item.conv_length = c.instance.size();
        item.candidate_speakers.assign(seq.utterance_speaker.begin(),
                                       seq.utterance_speaker.begin() + seq.n_candidates);
        item.gold.resize(seq.n_candidates);
        bool any = false;
        for (int k = 0; k < seq.n_candidates; ++k) {
          item.gold[k] = item.candidate_speakers[k] == gold ? 1 : 0;
          any = any || item.gold[k];
        }
        if (!any) {  // gold interlocutor absent from the candidate window
          ++out.skipped;
          continue;
        }
        item.seq = std::move(seq);
        out.match_items.push_back(std::move(item));
      } else {
        if (c.rs_candidates.empty() || c.rs_positive < 0 ||
            c.rs_positive >= static_cast<int>(c.rs_candidates.size())) {
          ++out.skipped;
          continue;
        }
        const MpcInstance ctx = context_of(c.instance);
        RsGroup grp;
        grp.positive = c.rs_positive;
        grp.conv_length = c.instance.size();
        for (const std::string& cand : c.rs_candidates) {
          const std::vector<int> resp = vocab.tokenize(cand);
          EncodedSequence seq = build_encoded_sequence(ctx, Task::RS, vocab, limits, &resp);
          apply_ablation(seq, ablation);
          grp.candidates.push_back(std::move(seq));
        }
        out.rs_groups.push_back(std::move(grp));
      }
    } catch (const std::exception&) {
      ++out.skipped;
    }
  }
  return out;
}

namespace {

struct MatchForward {
  std::vector<double> probs;
  Graph::Id loss = -1;
};

MatchForward match_forward(Graph& g, TaskModel& model, Task task, const MatchItem& item,
                           bool with_loss) {
  EncodeResult enc = encode(g, item.seq, model.encoder);
  UtteranceMatchHead& head = task == Task::AR ? model.ar_head : model.si_head;
  Graph::Id reps = utterance_reps(g, enc.hidden, item.seq.cls_positions, head);
  MatchScores s = pairwise_match_scores(g, reps, head);
  MatchForward out;
  out.probs = s.probs;
  if (with_loss) {
    s.gold = item.gold;
    out.loss = match_loss(g, s);
  }
  return out;
}

struct RsForward {
  double prob = 0.0;
  Graph::Id loss = -1;
};

RsForward rs_forward(Graph& g, TaskModel& model, const EncodedSequence& seq, int label,
                     bool with_loss) {
  EncodeResult enc = encode(g, seq, model.encoder);
  RsScore s = rs_score(g, enc.hidden, seq.cls_positions[0], model.rs_head);
  RsForward out;
  out.prob = s.prob;
  if (with_loss) out.loss = rs_loss(g, s, label);
  return out;
}

const char* length_bucket(int n) {
  if (n <= 5) return "len_le_5";
  if (n <= 10) return "len_6_10";
  if (n <= 15) return "len_11_15";
  return "len_gt_15";
}

struct EvalResult {
  double primary = 0.0;
  json report;
};

/// Reduces a 10-candidate group to the {positive, first negative} pair for
/// R_2@1, keeping original order.
ScoredGroup pair_subgroup(const ScoredGroup& g10) {
  int neg = -1;
  for (int j = 0; j < static_cast<int>(g10.scores.size()); ++j)
    if (j != g10.positive_index) {
      neg = j;
      break;
    }
  ScoredGroup g2;
  const int lo = std::min(neg, g10.positive_index);
  const int hi = std::max(neg, g10.positive_index);
  g2.scores = {g10.scores[lo], g10.scores[hi]};
  g2.positive_index = g10.positive_index == lo ? 0 : 1;
  return g2;
}

EvalResult eval_items(TaskModel& model, Task task, const ItemBuild& items) {
  EvalResult res;
  json buckets = json::object();
  Graph g;
  if (task == Task::AR || task == Task::SI) {
    std::vector<RankedPrediction> preds;
    std::map<std::string, std::vector<RankedPrediction>> by_len;
    preds.reserve(items.match_items.size());
    for (const MatchItem& item : items.match_items) {
      g.reset();
      MatchForward f = match_forward(g, model, task, item, /*with_loss=*/false);
      RankedPrediction p{f.probs, item.candidate_speakers, item.gold_speaker};
      by_len[length_bucket(item.conv_length)].push_back(p);
      preds.push_back(std::move(p));
    }
    res.primary = metric_p_at_1(preds);
    res.report["p_at_1"] = res.primary;
    res.report["n_items"] = preds.size();
    for (auto& [name, v] : by_len)
      buckets[name] = {{"p_at_1", metric_p_at_1(v)}, {"n_items", v.size()}};
  } else {
    std::vector<ScoredGroup> g10s, g2s;
    std::map<std::string, std::vector<ScoredGroup>> by_len;
    for (const RsGroup& grp : items.rs_groups) {
      ScoredGroup sg;
      sg.positive_index = grp.positive;
      for (const EncodedSequence& seq : grp.candidates) {
        g.reset();
        sg.scores.push_back(rs_forward(g, model, seq, 0, /*with_loss=*/false).prob);
      }
      by_len[length_bucket(grp.conv_length)].push_back(sg);
      g2s.push_back(pair_subgroup(sg));
      g10s.push_back(std::move(sg));
    }
    if (g10s.empty()) throw std::invalid_argument("evaluate: no RS groups");
    const int n = static_cast<int>(g10s.front().scores.size());
    res.primary = metric_r_n_at_k(g10s, n, 1);
    res.report["r2_at_1"] = metric_r_n_at_k(g2s, 2, 1);
    res.report["r10_at_1"] = res.primary;
    res.report["candidates_per_group"] = n;
    res.report["n_items"] = g10s.size();
    for (auto& [name, v] : by_len) {
      buckets[name] = {{"r10_at_1", metric_r_n_at_k(v, n, 1)}, {"n_items", v.size()}};
    }
  }
  res.report["length_buckets"] = std::move(buckets);
  return res;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

std::string evaluate_split(TaskModel& model, Task task, AblationMode ablation,
                           const std::vector<LabeledConversation>& convs,
                           const Vocabulary& vocab, const SequenceLimits& limits,
                           const std::string& split_name, unsigned long long seed) {
  ItemBuild items = build_items(convs, task, vocab, limits, ablation);
  EvalResult res = eval_items(model, task, items);
  res.report["task"] = task_name(task);
  res.report["split"] = split_name;
  res.report["seed"] = seed;
  res.report["ablation"] = ablation_name(ablation);
  res.report["skipped"] = items.skipped;
  return res.report.dump(2);
}

std::string run_report_to_json(const RunReport& r) {
  json j;
  j["config"] = json::parse(train_config_to_json(r.cfg));
  json eps = json::array();
  for (const EpochStats& e : r.epochs)
    eps.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"valid_metric", e.valid_metric},
                   {"lr_last", e.lr_last}});
  j["epochs"] = std::move(eps);
  j["best_epoch"] = r.best_epoch;
  j["best_valid_metric"] = r.best_valid_metric;
  j["test_metrics"] = json::parse(r.test_metrics_json);
  j["phi"] = r.phi;
  j["skipped_train_items"] = r.skipped_train_items;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump(2);
}

RunReport train(const TrainConfig& cfg) {
  if (cfg.corpus_dir.empty()) throw std::invalid_argument("train: corpus_dir not set");
  Corpus corpus = load_corpus_dir(cfg.corpus_dir);
  TaskModel model;
  return train(cfg, corpus, model);
}

RunReport train(const TrainConfig& cfg, const Corpus& corpus, TaskModel& model) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.seed = cfg.seed;
  model = TaskModel::init(enc_cfg);

  const SequenceLimits limits = cfg.limits();
  ItemBuild train_items =
      build_items(corpus.data.train, cfg.task, corpus.vocab, limits, cfg.ablation);
  ItemBuild valid_items =
      build_items(corpus.data.valid, cfg.task, corpus.vocab, limits, cfg.ablation);

  // AR/SI train one loss term per conversation; RS one per (context,
  // candidate) pair.
  struct TrainUnit {
    int item = -1, cand = -1;
  };
  std::vector<TrainUnit> units;
  if (cfg.task == Task::RS) {
    for (std::size_t i = 0; i < train_items.rs_groups.size(); ++i)
      for (std::size_t c = 0; c < train_items.rs_groups[i].candidates.size(); ++c)
        units.push_back({static_cast<int>(i), static_cast<int>(c)});
  } else {
    for (std::size_t i = 0; i < train_items.match_items.size(); ++i)
      units.push_back({static_cast<int>(i), -1});
  }
  if (units.empty()) throw std::runtime_error("train: no usable training items");

  std::vector<Parameter*> params = model.parameters(cfg.task);
  AdamState adam(params);
  const long n_batches = (static_cast<long>(units.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = n_batches * cfg.epochs;

  RunReport report;
  report.cfg = cfg;
  report.cfg.encoder = enc_cfg;
  report.skipped_train_items = train_items.skipped;

  double best_metric = -1.0;
  int best_epoch = -1;
  std::vector<Tensor> best_values;

  Graph g;
  long step = 0;
  double lr = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::seed_seq eseq{static_cast<std::uint32_t>(cfg.seed),
                       static_cast<std::uint32_t>(cfg.seed >> 32), 0xE50Cu,
                       static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 erng(eseq);
    std::vector<int> order(units.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), erng);

    double loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end = std::min(cursor + cfg.batch_size, order.size());
      const double inv = 1.0 / static_cast<double>(batch_end - cursor);
      for (std::size_t i = cursor; i < batch_end; ++i) {
        const TrainUnit& u = units[order[i]];
        g.reset();
        Graph::Id loss;
        if (cfg.task == Task::RS) {
          const RsGroup& grp = train_items.rs_groups[u.item];
          const int label = u.cand == grp.positive ? 1 : 0;
          loss = rs_forward(g, model, grp.candidates[u.cand], label, true).loss;
        } else {
          loss = match_forward(g, model, cfg.task, train_items.match_items[u.item], true).loss;
        }
        const double lv = g.val(loss).data[0];
        if (!std::isfinite(lv))
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(step));
        loss_sum += lv;
        g.backward(g.scale(loss, inv));
      }
      ++step;
      lr = warmup_lr(step, total_steps, cfg.peak_lr, cfg.warmup_prop);
      adam_step(params, adam, lr);
      zero_grads(params);
      cursor = batch_end;
    }

    EvalResult valid = eval_items(model, cfg.task, valid_items);
    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / static_cast<double>(units.size());
    es.valid_metric = valid.primary;
    es.lr_last = lr;
    report.epochs.push_back(es);

    if (valid.primary > best_metric) {
      best_metric = valid.primary;
      best_epoch = epoch;
      best_values.clear();
      for (Parameter* p : model.all_parameters()) best_values.push_back(p->value);
    }
  }

  // The validation set selects the model that gets evaluated and shipped.
  std::vector<Parameter*> all = model.all_parameters();
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = best_values[i];
  report.best_epoch = best_epoch;
  report.best_valid_metric = best_metric;

  report.test_metrics_json =
      evaluate_split(model, cfg.task, cfg.ablation, corpus.data.test, corpus.vocab, limits,
                     "test", cfg.seed);
  {
    const Tensor& phi = model.encoder.phi.value;
    report.phi.assign(phi.rows(), std::vector<double>(phi.cols()));
    for (int l = 0; l < phi.rows(); ++l)
      for (int t = 0; t < phi.cols(); ++t) report.phi[l][t] = phi.at(l, t);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    CheckpointMeta meta{task_name(cfg.task), ablation_name(cfg.ablation), cfg.seed, enc_cfg};
    save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), model, meta);
    write_text_file(fs::path(cfg.out_dir) / "run_report.json", run_report_to_json(report) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "metrics_test.json",
                    report.test_metrics_json + "\n");
    std::string csv = "epoch,train_loss,valid_metric,lr_last\n";
    for (const EpochStats& e : report.epochs)
      csv += std::to_string(e.epoch) + "," + std::to_string(e.train_loss) + "," +
             std::to_string(e.valid_metric) + "," + std::to_string(e.lr_last) + "\n";
    write_text_file(fs::path(cfg.out_dir) / "train_trace.csv", csv);
  }
  return report;
}

std::string evaluate_checkpoint(const std::string& checkpoint_path,
                                const std::string& corpus_dir, const std::string& task,
                                const std::string& split, int max_tokens_per_utterance) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
  if (!task.empty() && task != ckpt.meta.task)
    throw std::invalid_argument("task mismatch: checkpoint was trained for '" +
                                ckpt.meta.task + "', asked to evaluate '" + task + "'");
  const Task t = task_from_name(ckpt.meta.task);
  Corpus corpus = load_corpus_dir(corpus_dir);
  if (corpus.vocab.size() != ckpt.meta.encoder_cfg.vocab_size)
    throw std::invalid_argument(
        "corpus mismatch: vocabulary size " + std::to_string(corpus.vocab.size()) +
        " vs checkpoint " + std::to_string(ckpt.meta.encoder_cfg.vocab_size));
  SequenceLimits limits{ckpt.meta.encoder_cfg.max_positions,
                        ckpt.meta.encoder_cfg.max_utterances, max_tokens_per_utterance};
  return evaluate_split(ckpt.model, t, ablation_from_name(ckpt.meta.ablation),
                        corpus.data.split(split), corpus.vocab, limits, split,
                        ckpt.meta.seed);
}

std::vector<std::vector<double>> edge_weights(const std::string& checkpoint_path,
                                              const std::string& csv_path) {
  std::vector<std::vector<double>> phi = read_phi_table(checkpoint_path);
  if (!csv_path.empty()) {
    std::string csv = "layer,edge_type,value\n";
    for (std::size_t l = 0; l < phi.size(); ++l) {
      if (phi[l].size() != kNumEdgeTypes)
        throw std::runtime_error("edge_weights: malformed phi row");
      for (int t = 0; t < kNumEdgeTypes; ++t) {
        json v = phi[l][t];  // shortest round-trip formatting
        csv += std::to_string(l) + "," + edge_type_name(static_cast<EdgeType>(t)) + "," +
               v.dump() + "\n";
      }
    }
    write_text_file(csv_path, csv);
  }
  return phi;
}

std::string AblationReport::to_json() const {
  json j;
  json jr = json::array();
  for (const AblationRun& r : runs)
    jr.push_back({{"mode", ablation_name(r.mode)},
                  {"seed", r.seed},
                  {"test_metric", r.test_metric},
                  {"observed_distinct_phi", r.observed_distinct_phi},
                  {"expected_distinct_phi", distinct_phi_count(r.mode)}});
  j["runs"] = std::move(jr);
  json means = json::object();
  json deltas = json::object();
  for (int i = 0; i < 4; ++i) {
    means[ablation_name(static_cast<AblationMode>(i))] = mode_means[i];
    for (int k = 0; k < 4; ++k) {
      if (i == k) continue;
      deltas[std::string(ablation_name(static_cast<AblationMode>(i))) + "-" +
             ablation_name(static_cast<AblationMode>(k))] = pairwise[i][k];
    }
  }
  j["mode_means"] = std::move(means);
  j["pairwise_deltas"] = std::move(deltas);
  return j.dump(2);
}

namespace {

int observed_distinct_edge_types(const ItemBuild& items) {
  std::set<std::uint8_t> seen;
  auto scan = [&seen](const EncodedSequence& seq) {
    for (EdgeType t : seq.edges.grid) seen.insert(static_cast<std::uint8_t>(t));
  };
  const std::size_t cap = 16;
  for (std::size_t i = 0; i < items.match_items.size() && i < cap; ++i)
    scan(items.match_items[i].seq);
  for (std::size_t i = 0; i < items.rs_groups.size() && i < cap; ++i)
    scan(items.rs_groups[i].candidates.front());
  return static_cast<int>(seen.size());
}

}  // namespace

AblationReport ablation_suite(const TrainConfig& base_cfg, const Corpus& corpus, int n_seeds) {
  if (n_seeds < 1) throw std::invalid_argument("ablation_suite: n_seeds >= 1");
  AblationReport report;
  report.mode_means.assign(4, 0.0);
  report.pairwise.assign(4, std::vector<double>(4, 0.0));
  for (int mi = 0; mi < 4; ++mi) {
    const AblationMode mode = static_cast<AblationMode>(mi);
    double sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      TrainConfig cfg = base_cfg;
      cfg.ablation = mode;
      cfg.seed = base_cfg.seed + static_cast<unsigned long long>(s);
      if (!base_cfg.out_dir.empty())
        cfg.out_dir = (fs::path(base_cfg.out_dir) /
                       (std::string(ablation_name(mode)) + "_seed" + std::to_string(cfg.seed)))
                          .string();
      TaskModel model;
      RunReport run = train(cfg, corpus, model);
      json test = json::parse(run.test_metrics_json);
      const double metric =
          cfg.task == Task::RS ? test["r10_at_1"].get<double>() : test["p_at_1"].get<double>();
      AblationRun ar;
      ar.mode = mode;
      ar.seed = cfg.seed;
      ar.test_metric = metric;
      ar.observed_distinct_phi = observed_distinct_edge_types(
          build_items(corpus.data.test, cfg.task, corpus.vocab, cfg.limits(), mode));
      report.runs.push_back(ar);
      sum += metric;
    }
    report.mode_means[mi] = sum / n_seeds;
  }
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      report.pairwise[i][k] = report.mode_means[i] - report.mode_means[k];
  return report;
}

namespace {

/// Fixed toy conversations covering all three heads for gradcheck.
std::vector<LabeledConversation> gradcheck_conversations() {
  auto conv = [](std::vector<std::tuple<std::string, std::string, std::string, int>> rows,
                 std::string addressee, std::string speaker,
                 std::vector<std::string> cands, int pos) {
    LabeledConversation c;
    json utts = json::array();
    for (auto& [spk, text, addr, reply] : rows) {
      json u = {{"speaker", spk}, {"text", text}};
      if (!addr.empty()) u["addressee"] = addr;
      if (reply >= 0) u["reply_to"] = reply;
      utts.push_back(std::move(u));
    }
    c.instance = instance_from_json(json{{"utterances", utts}}.dump());
    c.gold_addressee = std::move(addressee);
    c.gold_speaker = std::move(speaker);
    c.rs_candidates = std::move(cands);
    c.rs_positive = pos;
    return c;
  };
  return {
      conv({{"a", "x1 x2", "", -1},
            {"b", "x1 x3", "a", 0},
            {"a", "x2 x4", "b", 1},
            {"b", "x5 x1", "a", 2}},
           "a", "b", {"x5 x1", "x6 x7"}, 0),
      conv({{"c", "x3 x6", "", -1},
            {"a", "x3 x2", "c", 0},
            {"c", "x4 x8", "a", 1},
            {"b", "x8 x2", "c", 2},
            {"c", "x6 x5", "b", 3}},
           "b", "c", {"x2 x3", "x6 x5"}, 1),
  };
}

Vocabulary gradcheck_vocab(int vocab_size) {
  std::vector<std::string> toks = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (int i = 1; static_cast<int>(toks.size()) < vocab_size; ++i)
    toks.push_back("x" + std::to_string(i));
  return Vocabulary(std::move(toks));
}

double total_toy_loss(Graph& g, TaskModel& model, const ItemBuild& ar, const ItemBuild& si,
                      const ItemBuild& rs, Graph::Id* loss_node) {
  g.reset();
  Graph::Id total = g.input(Tensor::scalar(0.0));
  for (const MatchItem& item : ar.match_items)
    total = g.add(total, match_forward(g, model, Task::AR, item, true).loss);
  for (const MatchItem& item : si.match_items)
    total = g.add(total, match_forward(g, model, Task::SI, item, true).loss);
  for (const RsGroup& grp : rs.rs_groups)
    for (std::size_t c = 0; c < grp.candidates.size(); ++c)
      total = g.add(total, rs_forward(g, model, grp.candidates[c],
                                      static_cast<int>(c) == grp.positive ? 1 : 0, true)
                               .loss);
  if (loss_node) *loss_node = total;
  return g.val(total).data[0];
}

}  // namespace

std::string GradcheckReport::to_json() const {
  json j;
  j["pass"] = pass;
  if (!fault_injected.empty()) j["fault_injected"] = fault_injected;
  json cls = json::array();
  for (const GradcheckClassResult& c : classes) {
    json e = {{"name", c.name},     {"checked", c.checked}, {"max_rel_err", c.max_rel_err},
              {"pass", c.pass},     {"worst_coord", c.worst_coord},
              {"analytic", c.analytic}, {"numeric", c.numeric}};
    cls.push_back(std::move(e));
  }
  j["classes"] = std::move(cls);
  return j.dump(2);
}

GradcheckReport gradcheck(const EncoderConfig& cfg, int coords_per_class,
                          const std::string& fault_op) {
  if (cfg.d > 8 || cfg.layers > 2)
    throw std::invalid_argument("gradcheck: wants a tiny model (d <= 8, layers <= 2)");
  if (cfg.vocab_size < 12)
    throw std::invalid_argument("gradcheck: vocab_size >= 12 for the toy batch");
  EncoderConfig tiny = cfg;
  tiny.validate();

  TaskModel model = TaskModel::init(tiny);
  const Vocabulary vocab = gradcheck_vocab(tiny.vocab_size);
  const SequenceLimits limits{tiny.max_positions, tiny.max_utterances, 8};
  const std::vector<LabeledConversation> convs = gradcheck_conversations();
  const ItemBuild ar = build_items(convs, Task::AR, vocab, limits, AblationMode::Full);
  const ItemBuild si = build_items(convs, Task::SI, vocab, limits, AblationMode::Full);
  const ItemBuild rs = build_items(convs, Task::RS, vocab, limits, AblationMode::Full);
  if (ar.match_items.empty() || si.match_items.empty() || rs.rs_groups.empty())
    throw std::logic_error("gradcheck: toy batch construction failed");

  // Analytic pass (optionally with a corrupted backward rule).
  Graph g;
  g.inject_backward_fault(fault_op);
  std::vector<Parameter*> params = model.all_parameters();
  zero_grads(params);
  Graph::Id loss_node = -1;
  total_toy_loss(g, model, ar, si, rs, &loss_node);
  g.backward(loss_node);

  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-4;
  constexpr double kDenomFloor = 1e-5;

  GradcheckReport report;
  report.fault_injected = fault_op;
  Graph fg;  // clean graph for the numeric side
  std::mt19937_64 rng(0xF00DULL);
  for (Parameter* p : params) {
    GradcheckClassResult cls;
    cls.name = p->name;
    const std::int64_t n = p->value.numel();
    std::vector<std::int64_t> coords;
    if (n <= coords_per_class) {
      for (std::int64_t k = 0; k < n; ++k) coords.push_back(k);
    } else {
      std::set<std::int64_t> picked;
      while (static_cast<int>(picked.size()) < coords_per_class)
        picked.insert(std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng));
      coords.assign(picked.begin(), picked.end());
    }
    for (std::int64_t k : coords) {
      const double saved = p->value.data[k];
      p->value.data[k] = saved + kStep;
      const double up = total_toy_loss(fg, model, ar, si, rs, nullptr);
      p->value.data[k] = saved - kStep;
      const double dn = total_toy_loss(fg, model, ar, si, rs, nullptr);
      p->value.data[k] = saved;
      const double numeric = (up - dn) / (2.0 * kStep);
      const double analytic = p->grad.data[k];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), kDenomFloor});
      ++cls.checked;
      if (rel > cls.max_rel_err) {
        cls.max_rel_err = rel;
        cls.worst_coord = static_cast<int>(k);
        cls.analytic = analytic;
        cls.numeric = numeric;
      }
    }
    cls.pass = cls.max_rel_err <= kRelTol;
    report.pass = report.pass && cls.pass;
    report.classes.push_back(std::move(cls));
  }
  return report;
}

}  // namespace gift
