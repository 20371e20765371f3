#include "gift/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gift {

using nlohmann::json;
namespace fs = std::filesystem;

void GeneratorConfig::validate() const {
  if (n_conversations < 10) throw std::invalid_argument("generator: need >= 10 conversations");
  if (min_length < 5 || max_length < min_length)
    throw std::invalid_argument("generator: length range must be within [5, ...]");
  if (min_speakers < 2 || max_speakers < min_speakers)
    throw std::invalid_argument("generator: speaker range must be within [2, ...]");
  if (max_speakers > persona_token_pool)
    throw std::invalid_argument("generator: persona pool smaller than speaker count");
  if (tokens_per_utterance < 3)
    throw std::invalid_argument("generator: need >= 3 tokens per utterance");
  const int filler = vocab_size - 4 - persona_token_pool - topic_token_pool;
  if (filler < 2)
    throw std::invalid_argument("generator: pools + noise tokens do not fit vocab_size");
  if (noise_rate < 0.0 || noise_rate > 1.0)
    throw std::invalid_argument("generator: noise_rate must be in [0,1]");
  if (rs_candidates_n < 2) throw std::invalid_argument("generator: rs_candidates_n >= 2");
  if (n_distractors < 0) throw std::invalid_argument("generator: n_distractors >= 0");
  if (n_conversations / 10 < rs_candidates_n)
    throw std::invalid_argument("generator: splits too small for RS negative sampling");
}

const std::vector<LabeledConversation>& SynthCorpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split '" + name + "'");
}

namespace {

std::mt19937_64 conv_rng(unsigned long long seed, unsigned long long stream,
                         unsigned long long index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

int rand_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct TokenPools {
  int persona0, topic0, filler0, n_filler;

  std::string persona(int speaker) const { return "p" + std::to_string(speaker); }
  std::string topic(int k) const { return "t" + std::to_string(k); }
  std::string filler(int k) const { return "w" + std::to_string(k); }
};

TokenPools pools_of(const GeneratorConfig& cfg) {
  TokenPools p;
  p.persona0 = 4;
  p.topic0 = 4 + cfg.persona_token_pool;
  p.filler0 = p.topic0 + cfg.topic_token_pool;
  p.n_filler = cfg.vocab_size - p.filler0;
  return p;
}

/// Slot plan for one conversation. The main thread starts at a randomized
/// early slot (so absolute position never identifies it), the two slots
/// before the query are dedicated childless side roots for late echo
/// distractors, and — when room allows — one more early childless side root
/// hosts an echo ahead of the main reply. The last slot always extends the
/// main thread, so the query has a parent and grandparent. One side thread
/// may be rooted by the query's speaker so "the partner of the query
/// speaker" stays ambiguous without following the reply edges.
enum class SlotAction { MainRoot, MainExtend, SideRoot, SideExtend };

struct ConvPlan {
  int n = 0;
  int n_speakers = 0;
  std::vector<SlotAction> actions;
  std::vector<int> side_thread_of_slot;  // which side thread a side slot belongs to
  int n_side_threads = 0;
  int main_count = 0;            // main-thread members including the query
  int partner_decoy_slot = -1;   // side root spoken by the query speaker
  int partner_decoy_thread = -1;
  int main_root_slot = 0;
  int main_reply_slot = 1;
  std::vector<int> echo_slots;   // dedicated childless side roots, never extended
};

ConvPlan plan_conversation(std::mt19937_64& rng, const GeneratorConfig& cfg) {
  ConvPlan plan;
  plan.n = rand_int(rng, cfg.min_length, cfg.max_length);
  plan.n_speakers = rand_int(rng, cfg.min_speakers, cfg.max_speakers);
  const int n = plan.n;
  plan.actions.assign(n, SlotAction::SideRoot);
  plan.side_thread_of_slot.assign(n, -1);

  plan.main_root_slot = rand_int(rng, 0, std::min(2, n - 5));
  plan.main_reply_slot =
      rand_int(rng, plan.main_root_slot + 1, std::min(plan.main_root_slot + 3, n - 4));
  plan.actions[plan.main_root_slot] = SlotAction::MainRoot;
  plan.actions[plan.main_reply_slot] = SlotAction::MainExtend;
  plan.actions[n - 1] = SlotAction::MainExtend;
  plan.main_count = 3;

  // Late echo pair between the main tip and the query.
  for (int s : {n - 3, n - 2}) {
    plan.side_thread_of_slot[s] = plan.n_side_threads;
    plan.echo_slots.push_back(s);
    ++plan.n_side_threads;
  }
  // Early echo ahead of the main reply when a slot is free.
  if (n >= 7 && std::uniform_real_distribution<double>(0, 1)(rng) < 0.6) {
    std::vector<int> early;
    for (int s = 0; s < plan.main_reply_slot; ++s)
      if (s != plan.main_root_slot) early.push_back(s);
    if (!early.empty()) {
      const int s = early[rand_int(rng, 0, static_cast<int>(early.size()) - 1)];
      plan.side_thread_of_slot[s] = plan.n_side_threads;
      plan.echo_slots.push_back(s);
      ++plan.n_side_threads;
    }
  }

  const bool want_decoy = std::uniform_real_distribution<double>(0, 1)(rng) < 0.7;
  std::vector<int> open_side_threads;
  for (int s = 0; s < n - 3; ++s) {
    if (plan.actions[s] == SlotAction::MainRoot || plan.actions[s] == SlotAction::MainExtend ||
        plan.side_thread_of_slot[s] >= 0)
      continue;  // already assigned (main or echo)
    const bool go_main =
        s > plan.main_reply_slot && std::uniform_real_distribution<double>(0, 1)(rng) < 0.4;
    if (go_main) {
      plan.actions[s] = SlotAction::MainExtend;
      ++plan.main_count;
      continue;
    }
    const bool fresh = open_side_threads.size() >= 3
                           ? false
                           : (open_side_threads.empty() ||
                              std::uniform_real_distribution<double>(0, 1)(rng) < 0.5);
    if (fresh) {
      plan.actions[s] = SlotAction::SideRoot;
      plan.side_thread_of_slot[s] = plan.n_side_threads;
      if (want_decoy && plan.partner_decoy_slot < 0) {
        plan.partner_decoy_slot = s;
        plan.partner_decoy_thread = plan.n_side_threads;
      }
      open_side_threads.push_back(plan.n_side_threads++);
    } else {
      plan.actions[s] = SlotAction::SideExtend;
      plan.side_thread_of_slot[s] =
          open_side_threads[rand_int(rng, 0, static_cast<int>(open_side_threads.size()) - 1)];
    }
  }
  return plan;
}

struct UttDraft {
  int speaker = -1;
  int addressee = -1;    // -1 = none
  int reply_to = -1;     // -1 = none
  int topic = -1;        // topic pool index actually displayed
  bool is_echo = false;
  bool persona_visible = true;
};

std::string render_text(const UttDraft& u, const GeneratorConfig& cfg, const TokenPools& pools,
                        std::mt19937_64& rng) {
  std::ostringstream text;
  if (u.persona_visible)
    text << pools.persona(u.speaker);
  else
    text << pools.filler(0);
  text << " " << pools.topic(u.topic);
  for (int k = 0; k < cfg.tokens_per_utterance - 2; ++k) {
    const bool noisy = std::uniform_real_distribution<double>(0, 1)(rng) < cfg.noise_rate;
    text << " " << (noisy ? pools.filler(rand_int(rng, 1, pools.n_filler - 1)) : pools.filler(0));
  }
  return text.str();
}

LabeledConversation make_conversation(const GeneratorConfig& cfg, const TokenPools& pools,
                                      std::mt19937_64& rng) {
  const ConvPlan plan = plan_conversation(rng, cfg);
  const int n = plan.n;
  const int S = plan.n_speakers;

  // Distinct topic per thread, main first.
  std::vector<int> topic_ids(cfg.topic_token_pool);
  for (int i = 0; i < cfg.topic_token_pool; ++i) topic_ids[i] = i;
  std::shuffle(topic_ids.begin(), topic_ids.end(), rng);
  const int main_topic = topic_ids[0];

  std::vector<UttDraft> drafts(n);
  int main_tip = -1;
  std::vector<int> side_tip(plan.n_side_threads, -1);
  std::vector<int> side_topic(plan.n_side_threads, -1);
  for (int t = 0; t < plan.n_side_threads; ++t)
    side_topic[t] = topic_ids[(t + 1) % cfg.topic_token_pool];

  // Main-thread speakers alternate from the root, so the query's speaker and
  // addressee are known from the member count before any slot is realized.
  const int speaker_a = rand_int(rng, 0, S - 1);
  int speaker_b;
  do speaker_b = rand_int(rng, 0, S - 1);
  while (speaker_b == speaker_a);
  const int query_speaker = (plan.main_count - 1) % 2 == 0 ? speaker_a : speaker_b;
  const int query_addressee = query_speaker == speaker_a ? speaker_b : speaker_a;

  auto extend = [&](int slot, int tip) {
    UttDraft& u = drafts[slot];
    const UttDraft& parent = drafts[tip];
    u.reply_to = tip;
    u.addressee = parent.speaker;
    if (parent.addressee >= 0) {
      u.speaker = parent.addressee;
    } else if (plan.side_thread_of_slot[slot] == plan.partner_decoy_thread && S > 2) {
      // First responder in the decoy thread: a partner that is not the
      // query's addressee, so the query speaker talks to two people.
      do u.speaker = rand_int(rng, 0, S - 1);
      while (u.speaker == parent.speaker || u.speaker == query_addressee);
    } else {
      do u.speaker = rand_int(rng, 0, S - 1);
      while (u.speaker == parent.speaker);
    }
    u.topic = parent.topic;
  };

  for (int slot = 0; slot < n; ++slot) {
    UttDraft& u = drafts[slot];
    switch (plan.actions[slot]) {
      case SlotAction::MainRoot:
        u.speaker = speaker_a;
        u.topic = main_topic;
        main_tip = slot;
        break;
      case SlotAction::MainExtend:
        if (slot == plan.main_reply_slot) {  // the root has no addressee; pin the alternation
          u.reply_to = plan.main_root_slot;
          u.addressee = speaker_a;
          u.speaker = speaker_b;
          u.topic = main_topic;
        } else {
          extend(slot, main_tip);
          u.topic = main_topic;
        }
        main_tip = slot;
        break;
      case SlotAction::SideRoot: {
        const int t = plan.side_thread_of_slot[slot];
        u.speaker = slot == plan.partner_decoy_slot ? query_speaker
                                                    : rand_int(rng, 0, S - 1);
        u.topic = side_topic[t];
        side_tip[t] = slot;
        break;
      }
      case SlotAction::SideExtend: {
        const int t = plan.side_thread_of_slot[slot];
        extend(slot, side_tip[t]);
        side_tip[t] = slot;
        break;
      }
    }
  }

  const int query = n - 1;
  drafts[query].persona_visible = false;

  if (cfg.planted) {
    // Echo distractors on the dedicated childless side roots, re-labelled
    // with the main topic. One wrong speaker carries every echo, so the
    // echo speaker rivals the true addressee in topic-matching frequency.
    const int gold_speaker = drafts[query].speaker;
    const int gold_addressee = drafts[query].addressee;
    std::vector<int> off_gold;
    for (int s = 0; s < S; ++s)
      if (s != gold_speaker && s != gold_addressee) off_gold.push_back(s);
    const int echo_speaker =
        off_gold.empty() ? gold_speaker
                         : off_gold[rand_int(rng, 0, static_cast<int>(off_gold.size()) - 1)];
    int planted_echoes = 0;
    for (int slot : plan.echo_slots) {
      if (planted_echoes >= cfg.n_distractors) break;
      UttDraft& u = drafts[slot];
      u.is_echo = true;
      u.topic = main_topic;
      u.speaker = echo_speaker;
      ++planted_echoes;
    }
  } else {
    // Control mode: topics carry no thread signal and the query labels are
    // re-drawn independently of the reply skeleton.
    for (int slot = 0; slot < n; ++slot)
      drafts[slot].topic = topic_ids[rand_int(rng, 0, cfg.topic_token_pool - 1)];
    UttDraft& q = drafts[query];
    q.reply_to = rand_int(rng, 0, n - 2);
    q.addressee = drafts[q.reply_to].speaker;
    q.speaker = drafts[rand_int(rng, 0, n - 2)].speaker;
  }

  LabeledConversation out;
  std::vector<int> speaker_map(S, -1);  // interlocutor ids by first appearance
  auto map_speaker = [&](int s) {
    if (speaker_map[s] < 0) {
      speaker_map[s] = static_cast<int>(out.instance.interlocutors.size());
      out.instance.interlocutors.push_back("s" + std::to_string(s));
    }
    return speaker_map[s];
  };
  for (int slot = 0; slot < n; ++slot) {
    const UttDraft& d = drafts[slot];
    Utterance u;
    u.speaker_idx = map_speaker(d.speaker);
    u.text = render_text(d, cfg, pools, rng);
    if (d.addressee >= 0) u.addressee_idx = map_speaker(d.addressee);
    if (d.reply_to >= 0) u.reply_target = d.reply_to;
    out.instance.utterances.push_back(std::move(u));
  }
  out.instance.validate();
  out.gold_speaker = out.instance.interlocutors[out.instance.utterances[query].speaker_idx];
  out.gold_addressee =
      out.instance.interlocutors[*out.instance.utterances[query].addressee_idx];
  return out;
}

std::vector<int> token_set(const std::string& text) {
  std::istringstream ss(text);
  std::set<std::string> toks;
  std::string t;
  while (ss >> t) toks.insert(t);
  std::vector<int> ids;
  for (const auto& s : toks) ids.push_back(static_cast<int>(std::hash<std::string>{}(s)));
  std::sort(ids.begin(), ids.end());
  return ids;
}

int overlap(const std::vector<int>& a, const std::vector<int>& b) {
  int c = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) ++c, ++i, ++j;
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  return c;
}

}  // namespace

OracleRates run_structure_oracles(const std::vector<LabeledConversation>& convs) {
  OracleRates r;
  r.n = static_cast<int>(convs.size());
  if (r.n == 0) throw std::invalid_argument("oracles: empty conversation set");
  for (const LabeledConversation& c : convs) {
    const MpcInstance& inst = c.instance;
    const int n = inst.size();
    const Utterance& last = inst.utterances[n - 1];

    // Bag-of-words: best token overlap, ties to the nearest utterance.
    const std::vector<int> query_toks = token_set(last.text);
    int best = -1, best_ov = -1;
    for (int m = 0; m < n - 1; ++m) {
      const int ov = overlap(query_toks, token_set(inst.utterances[m].text));
      if (ov >= best_ov) best_ov = ov, best = m;
    }
    const std::string bow_pred = inst.interlocutors[inst.utterances[best].speaker_idx];
    if (bow_pred == c.gold_addressee) r.bow_ar += 1.0;
    if (bow_pred == c.gold_speaker) r.bow_si += 1.0;

    // Edge following: one reply hop for AR, two for SI.
    if (last.reply_target) {
      const Utterance& parent = inst.utterances[*last.reply_target];
      if (inst.interlocutors[parent.speaker_idx] == c.gold_addressee) r.edge_ar += 1.0;
      if (parent.reply_target) {
        const Utterance& grand = inst.utterances[*parent.reply_target];
        if (inst.interlocutors[grand.speaker_idx] == c.gold_speaker) r.edge_si += 1.0;
      }
    }
  }
  r.bow_ar /= r.n;
  r.bow_si /= r.n;
  r.edge_ar /= r.n;
  r.edge_si /= r.n;
  return r;
}

Vocabulary build_vocabulary(const GeneratorConfig& cfg) {
  const TokenPools p = pools_of(cfg);
  std::vector<std::string> toks = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (int i = 0; i < cfg.persona_token_pool; ++i) toks.push_back(p.persona(i));
  for (int i = 0; i < cfg.topic_token_pool; ++i) toks.push_back(p.topic(i));
  for (int i = 0; i < p.n_filler; ++i) toks.push_back(p.filler(i));
  return Vocabulary(std::move(toks));
}

SynthCorpus generate_conversations(const GeneratorConfig& cfg) {
  cfg.validate();
  const TokenPools pools = pools_of(cfg);
  std::vector<LabeledConversation> all;
  all.reserve(cfg.n_conversations);
  for (int i = 0; i < cfg.n_conversations; ++i) {
    std::mt19937_64 rng = conv_rng(cfg.seed, 0xC0, static_cast<unsigned long long>(i));
    all.push_back(make_conversation(cfg, pools, rng));
  }

  // Seeded shuffle, fixed 80/10/10 split by conversation.
  std::vector<int> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 split_rng = conv_rng(cfg.seed, 0x511, 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const int n_train = cfg.n_conversations * 8 / 10;
  const int n_valid = cfg.n_conversations / 10;

  SynthCorpus corpus;
  for (int i = 0; i < cfg.n_conversations; ++i) {
    LabeledConversation& c = all[order[i]];
    if (i < n_train) corpus.train.push_back(std::move(c));
    else if (i < n_train + n_valid) corpus.valid.push_back(std::move(c));
    else corpus.test.push_back(std::move(c));
  }

  // RS candidates: the true response plus negatives sampled (without
  // replacement) from other conversations of the same split.
  auto fill_candidates = [&cfg](std::vector<LabeledConversation>& split,
                                unsigned long long stream) {
    const int n_split = static_cast<int>(split.size());
    for (int i = 0; i < n_split; ++i) {
      std::mt19937_64 rng = conv_rng(cfg.seed, stream, i);
      std::set<int> picked;
      std::vector<std::string> cands;
      cands.push_back(split[i].instance.utterances.back().text);
      while (static_cast<int>(cands.size()) < cfg.rs_candidates_n) {
        const int j = rand_int(rng, 0, n_split - 1);
        if (j == i || picked.count(j)) continue;
        picked.insert(j);
        cands.push_back(split[j].instance.utterances.back().text);
      }
      split[i].rs_positive = rand_int(rng, 0, cfg.rs_candidates_n - 1);
      std::swap(cands[0], cands[split[i].rs_positive]);
      split[i].rs_candidates = std::move(cands);
    }
  };
  fill_candidates(corpus.train, 0xA1);
  fill_candidates(corpus.valid, 0xA2);
  fill_candidates(corpus.test, 0xA3);
  return corpus;
}

namespace {

json conversation_to_json_obj(const LabeledConversation& c) {
  json j = json::parse(instance_to_json(c.instance));
  j["label"] = {{"addressee", c.gold_addressee},
                {"speaker", c.gold_speaker},
                {"rs_candidates", c.rs_candidates},
                {"rs_positive", c.rs_positive}};
  return j;
}

void write_jsonl(const std::vector<LabeledConversation>& convs, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);  // LF endings regardless of platform
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const auto& c : convs) f << conversation_to_json_obj(c).dump() << "\n";
}

json oracle_rates_json(const OracleRates& r) {
  return {{"bow_ar", r.bow_ar}, {"bow_si", r.bow_si},
          {"edge_ar", r.edge_ar}, {"edge_si", r.edge_si}, {"n", r.n}};
}

}  // namespace

void generate_corpus(const GeneratorConfig& cfg, const std::string& out_dir) {
  SynthCorpus corpus = generate_conversations(cfg);

  json cert = json::object();
  if (cfg.planted) {
    for (const auto& [name, convs] : {std::pair<const char*, const std::vector<LabeledConversation>*>{
             "train", &corpus.train}, {"valid", &corpus.valid}, {"test", &corpus.test}}) {
      const OracleRates r = run_structure_oracles(*convs);
      cert[name] = oracle_rates_json(r);
      if (r.edge_ar < 1.0 || r.edge_si < 1.0)
        throw std::runtime_error(std::string("corpus certification failed: edge oracle below "
                                             "1.0 on split ") + name);
      // The ambiguity cap is only a claim when distractors are planted.
      if (cfg.n_distractors >= 2 && (r.bow_ar > cfg.bow_cap || r.bow_si > cfg.bow_cap))
        throw std::runtime_error(std::string("corpus certification failed: bag-of-words oracle "
                                             "above cap on split ") + name);
    }
  }

  fs::create_directories(out_dir);
  write_jsonl(corpus.train, fs::path(out_dir) / "train.jsonl");
  write_jsonl(corpus.valid, fs::path(out_dir) / "valid.jsonl");
  write_jsonl(corpus.test, fs::path(out_dir) / "test.jsonl");
  build_vocabulary(cfg).save((fs::path(out_dir) / "vocab.txt").string());

  json manifest;
  manifest["config"] = json::parse(generator_config_to_json(cfg));
  manifest["splits"] = {{"train", corpus.train.size()},
                        {"valid", corpus.valid.size()},
                        {"test", corpus.test.size()}};
  manifest["certification"] = cert;
  std::ofstream mf(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
}

std::vector<LabeledConversation> load_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<LabeledConversation> out;
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      LabeledConversation c;
      c.instance = instance_from_json(line);
      json j = json::parse(line);
      if (j.contains("label")) {
        const json& lbl = j["label"];
        if (lbl.contains("addressee")) c.gold_addressee = lbl["addressee"].get<std::string>();
        if (lbl.contains("speaker")) c.gold_speaker = lbl["speaker"].get<std::string>();
        if (lbl.contains("rs_candidates"))
          c.rs_candidates = lbl["rs_candidates"].get<std::vector<std::string>>();
        if (lbl.contains("rs_positive")) c.rs_positive = lbl["rs_positive"].get<int>();
      }
      const Utterance& last = c.instance.utterances.back();
      if (c.gold_addressee.empty() && last.addressee_idx)
        c.gold_addressee = c.instance.interlocutors[*last.addressee_idx];
      if (c.gold_speaker.empty())
        c.gold_speaker = c.instance.interlocutors[last.speaker_idx];
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      errors.push_back(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = std::to_string(errors.size()) + " malformed line(s):";
    for (std::size_t i = 0; i < errors.size() && i < 10; ++i) msg += "\n  " + errors[i];
    throw std::runtime_error(msg);
  }
  return out;
}

Corpus load_corpus_dir(const std::string& dir) {
  Corpus c{SynthCorpus{}, Vocabulary::load((fs::path(dir) / "vocab.txt").string())};
  c.data.train = load_jsonl((fs::path(dir) / "train.jsonl").string());
  c.data.valid = load_jsonl((fs::path(dir) / "valid.jsonl").string());
  c.data.test = load_jsonl((fs::path(dir) / "test.jsonl").string());
  return c;
}

GeneratorConfig generator_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  GeneratorConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("n_conversations", c.n_conversations);
  get("min_length", c.min_length);
  get("max_length", c.max_length);
  get("min_speakers", c.min_speakers);
  get("max_speakers", c.max_speakers);
  get("vocab_size", c.vocab_size);
  get("tokens_per_utterance", c.tokens_per_utterance);
  get("topic_token_pool", c.topic_token_pool);
  get("persona_token_pool", c.persona_token_pool);
  get("noise_rate", c.noise_rate);
  get("rs_candidates_n", c.rs_candidates_n);
  get("n_distractors", c.n_distractors);
  get("planted", c.planted);
  get("bow_cap", c.bow_cap);
  get("seed", c.seed);
  c.validate();
  return c;
}

std::string generator_config_to_json(const GeneratorConfig& c) {
  json j;
  j["n_conversations"] = c.n_conversations;
  j["min_length"] = c.min_length;
  j["max_length"] = c.max_length;
  j["min_speakers"] = c.min_speakers;
  j["max_speakers"] = c.max_speakers;
  j["vocab_size"] = c.vocab_size;
  j["tokens_per_utterance"] = c.tokens_per_utterance;
  j["topic_token_pool"] = c.topic_token_pool;
  j["persona_token_pool"] = c.persona_token_pool;
  j["noise_rate"] = c.noise_rate;
  j["rs_candidates_n"] = c.rs_candidates_n;
  j["n_distractors"] = c.n_distractors;
  j["planted"] = c.planted;
  j["bow_cap"] = c.bow_cap;
  j["seed"] = c.seed;
  return j.dump(2);
}

}  // namespace gift
