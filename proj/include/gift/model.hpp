#pragma once

#include "gift/encoder.hpp"
#include "gift/heads.hpp"

namespace gift {

/// Encoder plus the three task heads. AR and SI get separate match heads;
/// training touches only the active task's head, but all parameters are
/// initialized and checkpointed so round-trips are exact for any task.
struct TaskModel {
  GiftEncoderParams encoder;
  UtteranceMatchHead ar_head;
  UtteranceMatchHead si_head;
  ResponseHead rs_head;

  static TaskModel init(const EncoderConfig& cfg);

  std::vector<Parameter*> parameters(Task task, bool include_phi = true);
  std::vector<Parameter*> all_parameters(bool include_phi = true);
};

}  // namespace gift
