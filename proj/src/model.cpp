#include "gift/model.hpp"

namespace gift {

TaskModel TaskModel::init(const EncoderConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  TaskModel m;
  m.encoder = GiftEncoderParams::init(cfg, rng);
  m.ar_head = UtteranceMatchHead::init("ar_head", cfg.d, rng);
  m.si_head = UtteranceMatchHead::init("si_head", cfg.d, rng);
  m.rs_head = ResponseHead::init("rs_head", cfg.d, rng);
  return m;
}

std::vector<Parameter*> TaskModel::parameters(Task task, bool include_phi) {
  std::vector<Parameter*> out = encoder.parameters(include_phi);
  std::vector<Parameter*> head;
  switch (task) {
    case Task::AR: head = ar_head.parameters(); break;
    case Task::SI: head = si_head.parameters(); break;
    case Task::RS: head = rs_head.parameters(); break;
  }
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

std::vector<Parameter*> TaskModel::all_parameters(bool include_phi) {
  std::vector<Parameter*> out = encoder.parameters(include_phi);
  for (auto* p : ar_head.parameters()) out.push_back(p);
  for (auto* p : si_head.parameters()) out.push_back(p);
  for (auto* p : rs_head.parameters()) out.push_back(p);
  return out;
}

}  // namespace gift
