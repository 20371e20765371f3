#pragma once

#include <string>

#include "gift/model.hpp"

namespace gift {

/// On-disk model: a JSON manifest (config, task, ablation tag, seed, named
/// parameter shapes/offsets, and the φ table for execution-free inspection)
/// plus a sibling .bin payload of raw little-endian float64 values.
struct CheckpointMeta {
  std::string task = "si";
  std::string ablation = "full";
  unsigned long long seed = 0;
  EncoderConfig encoder_cfg;
};

void save_checkpoint(const std::string& manifest_path, TaskModel& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  TaskModel model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& manifest_path);

/// φ table straight from the manifest; no payload read, no model execution.
std::vector<std::vector<double>> read_phi_table(const std::string& manifest_path);

std::string encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const std::string& json_text);

}  // namespace gift
