#pragma once

#include <vector>

#include "gift/graph.hpp"

namespace gift {

/// Adam with bias correction. Moment buffers are aligned with the parameter
/// list passed at construction; the same list (same order) must be used for
/// every step.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  explicit AdamState(const std::vector<Parameter*>& params, double b1 = 0.9,
                     double b2 = 0.999, double e = 1e-8);
};

/// One update from the accumulated grads. Grads are left untouched; the
/// caller zeroes them.
void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr);

void zero_grads(const std::vector<Parameter*>& params);

/// Linear ramp 0→peak over warmup_prop·total_steps, then linear decay to 0
/// at total_steps.
double warmup_lr(long step, long total_steps, double peak_lr, double warmup_prop);

}  // namespace gift
