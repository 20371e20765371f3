#include "gift/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gift {

AdamState::AdamState(const std::vector<Parameter*>& params, double b1, double b2, double e)
    : beta1(b1), beta2(b2), eps(e) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Parameter* p : params) {
    m.push_back(Tensor::zeros(p->value.shape));
    v.push_back(Tensor::zeros(p->value.shape));
  }
}

void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr) {
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter list does not match state");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& mi = state.m[i];
    Tensor& vi = state.v[i];
    for (std::size_t k = 0; k < p.value.data.size(); ++k) {
      const double g = p.grad.data[k];
      mi.data[k] = state.beta1 * mi.data[k] + (1.0 - state.beta1) * g;
      vi.data[k] = state.beta2 * vi.data[k] + (1.0 - state.beta2) * g * g;
      const double mhat = mi.data[k] / bc1;
      const double vhat = vi.data[k] / bc2;
      p.value.data[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

double warmup_lr(long step, long total_steps, double peak_lr, double warmup_prop) {
  if (total_steps <= 0) throw std::invalid_argument("warmup_lr: total_steps must be > 0");
  if (warmup_prop <= 0.0 || warmup_prop >= 1.0)
    throw std::invalid_argument("warmup_lr: warmup_prop must be in (0,1)");
  if (step < 0) step = 0;
  if (step > total_steps) step = total_steps;
  const double warm = warmup_prop * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s <= warm) return peak_lr * s / warm;
  return peak_lr * (static_cast<double>(total_steps) - s) /
         (static_cast<double>(total_steps) - warm);
}

}  // namespace gift
