#include "gift/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace gift {

using nlohmann::json;
namespace fs = std::filesystem;

std::string encoder_config_to_json(const EncoderConfig& cfg) {
  json j;
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["layers"] = cfg.layers;
  j["ffn_dim"] = cfg.ffn_dim;
  j["vocab_size"] = cfg.vocab_size;
  j["max_positions"] = cfg.max_positions;
  j["max_interlocutors"] = cfg.max_interlocutors;
  j["max_utterances"] = cfg.max_utterances;
  j["seed"] = cfg.seed;
  j["scale_mode"] = scale_mode_name(cfg.scale_mode);
  return j.dump();
}

EncoderConfig encoder_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  EncoderConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("d", c.d);
  get("h", c.h);
  get("layers", c.layers);
  get("ffn_dim", c.ffn_dim);
  get("vocab_size", c.vocab_size);
  get("max_positions", c.max_positions);
  get("max_interlocutors", c.max_interlocutors);
  get("max_utterances", c.max_utterances);
  get("seed", c.seed);
  if (j.contains("scale_mode")) c.scale_mode = scale_mode_from_name(j["scale_mode"]);
  c.validate();
  return c;
}

namespace {

std::string payload_name(const fs::path& manifest_path) {
  fs::path p = manifest_path.filename();
  if (p.extension() == ".json") p.replace_extension(".bin");
  else p += ".bin";
  return p.string();
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, TaskModel& model,
                     const CheckpointMeta& meta) {
  const fs::path mpath(manifest_path);
  if (mpath.has_parent_path()) fs::create_directories(mpath.parent_path());
  const std::string payload = payload_name(mpath);

  std::vector<Parameter*> params = model.all_parameters();
  json plist = json::array();
  std::int64_t offset = 0;
  std::ofstream bin(mpath.parent_path() / payload, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write checkpoint payload " + payload);
  for (Parameter* p : params) {
    plist.push_back({{"name", p->name}, {"shape", p->value.shape}, {"offset", offset}});
    bin.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
    offset += p->value.numel();
  }
  bin.close();

  const auto& phi = model.encoder.phi.value;
  json phi_rows = json::array();
  for (int l = 0; l < phi.rows(); ++l) {
    json row = json::array();
    for (int t = 0; t < phi.cols(); ++t) row.push_back(phi.at(l, t));
    phi_rows.push_back(std::move(row));
  }

  json manifest;
  manifest["format"] = "gift-checkpoint-v1";
  manifest["task"] = meta.task;
  manifest["ablation"] = meta.ablation;
  manifest["seed"] = meta.seed;
  manifest["encoder"] = json::parse(encoder_config_to_json(meta.encoder_cfg));
  manifest["payload"] = payload;
  manifest["byte_order"] = "little_endian";
  manifest["dtype"] = "float64";
  manifest["params"] = std::move(plist);
  manifest["phi"] = std::move(phi_rows);

  std::ofstream mf(mpath, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write checkpoint manifest " + manifest_path);
  mf << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot read checkpoint " + manifest_path);
  json manifest = json::parse(mf);
  if (manifest.value("format", "") != "gift-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format in " + manifest_path);

  LoadedCheckpoint out{TaskModel{}, CheckpointMeta{}};
  out.meta.task = manifest.at("task").get<std::string>();
  out.meta.ablation = manifest.at("ablation").get<std::string>();
  out.meta.seed = manifest.at("seed").get<unsigned long long>();
  out.meta.encoder_cfg = encoder_config_from_json(manifest.at("encoder").dump());
  out.model = TaskModel::init(out.meta.encoder_cfg);

  const fs::path dir = fs::path(manifest_path).parent_path();
  std::ifstream bin(dir / manifest.at("payload").get<std::string>(), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read checkpoint payload for " + manifest_path);

  std::vector<Parameter*> params = out.model.all_parameters();
  const json& plist = manifest.at("params");
  if (plist.size() != params.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& entry = plist[i];
    if (entry.at("name").get<std::string>() != params[i]->name)
      throw std::runtime_error("checkpoint parameter order mismatch at " + params[i]->name);
    if (entry.at("shape").get<std::vector<int>>() != params[i]->value.shape)
      throw std::runtime_error("checkpoint shape mismatch at " + params[i]->name);
    bin.read(reinterpret_cast<char*>(params[i]->value.data.data()),
             static_cast<std::streamsize>(params[i]->value.data.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("checkpoint payload truncated at " + params[i]->name);
  }
  return out;
}

std::vector<std::vector<double>> read_phi_table(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot read checkpoint " + manifest_path);
  json manifest = json::parse(mf);
  if (!manifest.contains("phi"))
    throw std::runtime_error("checkpoint has no phi table: " + manifest_path);
  return manifest["phi"].get<std::vector<std::vector<double>>>();
}

}  // namespace gift
