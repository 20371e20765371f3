#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gift/corpus.hpp"
#include "gift/train.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool seed_override(unsigned long long& seed) {
  const char* env = std::getenv("GIFT_SEED");
  if (!env || !*env) return false;
  seed = std::stoull(env);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GIFT: graph-induced fine-tuning for multi-party conversations"};
  app.require_subcommand(1);

  std::string config_path, corpus_dir, out_path, checkpoint_path, task, split = "test",
              csv_path;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic MPC corpus");
  gen->add_option("--config", config_path, "generator config JSON")->required();
  gen->add_option("--out", out_path, "output directory")->required();

  auto* tr = app.add_subcommand("train", "Fine-tune on a downstream task");
  tr->add_option("--task", task, "ar|si|rs (overrides config)");
  tr->add_option("--config", config_path, "train config JSON")->required();
  tr->add_option("--corpus", corpus_dir, "corpus directory (overrides config)");
  tr->add_option("--out", out_path, "output directory (overrides config)");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint manifest")->required();
  ev->add_option("--corpus", corpus_dir, "corpus directory")->required();
  ev->add_option("--task", task, "ar|si|rs (must match the checkpoint)");
  ev->add_option("--split", split, "train|valid|test (default test)");
  ev->add_option("--out", out_path, "also write the metric JSON here");

  auto* ab = app.add_subcommand("ablate", "Run the 4-mode ablation matrix");
  ab->add_option("--config", config_path, "train config JSON")->required();
  ab->add_option("--corpus", corpus_dir, "corpus directory (overrides config)");
  ab->add_option("--out", out_path, "report path (default stdout)");

  auto* ew = app.add_subcommand("edge-weights", "Dump the phi table from a checkpoint");
  ew->add_option("--checkpoint", checkpoint_path, "checkpoint manifest")->required();
  ew->add_option("--csv", csv_path, "CSV output path")->required();

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc->add_option("--config", config_path, "train config JSON (tiny encoder)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gift::GeneratorConfig cfg = gift::generator_config_from_json(slurp(config_path));
      seed_override(cfg.seed);
      gift::generate_corpus(cfg, out_path);
      std::cout << "corpus written to " << out_path << "\n";
    } else if (tr->parsed()) {
      gift::TrainConfig cfg = gift::train_config_from_json(slurp(config_path));
      if (!task.empty()) cfg.task = gift::task_from_name(task);
      if (!corpus_dir.empty()) cfg.corpus_dir = corpus_dir;
      if (!out_path.empty()) cfg.out_dir = out_path;
      seed_override(cfg.seed);
      gift::RunReport report = gift::train(cfg);
      std::cout << gift::run_report_to_json(report) << "\n";
    } else if (ev->parsed()) {
      const std::string metrics =
          gift::evaluate_checkpoint(checkpoint_path, corpus_dir, task, split);
      if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out_path);
        f << metrics << "\n";
      }
      std::cout << metrics << "\n";
    } else if (ab->parsed()) {
      gift::TrainConfig cfg = gift::train_config_from_json(slurp(config_path));
      if (!corpus_dir.empty()) cfg.corpus_dir = corpus_dir;
      seed_override(cfg.seed);
      if (cfg.corpus_dir.empty()) throw std::runtime_error("ablate: corpus_dir not set");
      gift::Corpus corpus = gift::load_corpus_dir(cfg.corpus_dir);
      gift::AblationReport report = gift::ablation_suite(cfg, corpus);
      const std::string text = report.to_json();
      if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out_path);
        f << text << "\n";
      }
      std::cout << text << "\n";
    } else if (ew->parsed()) {
      gift::edge_weights(checkpoint_path, csv_path);
      std::cout << "phi table written to " << csv_path << "\n";
    } else if (gc->parsed()) {
      gift::TrainConfig cfg = gift::train_config_from_json(slurp(config_path));
      seed_override(cfg.encoder.seed);
      gift::GradcheckReport report = gift::gradcheck(cfg.encoder);
      std::cout << report.to_json() << "\n";
      if (!report.pass) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
