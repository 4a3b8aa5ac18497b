#include "mixda/optimizer.hpp"

#include <cmath>

namespace mixda {

double lr_at(int step, const ScheduleConfig& sched) {
  if (sched.total_steps <= 0) throw ConfigError("lr_at: total_steps must be positive");
  if (sched.warmup_steps < 0 || sched.warmup_steps > sched.total_steps)
    throw ConfigError("lr_at: warmup_steps must lie in [0, total_steps]");
  if (step >= sched.total_steps) return 0.0;
  if (step <= sched.warmup_steps) {
    if (sched.warmup_steps == 0) return 1.0;
    return static_cast<double>(step) / sched.warmup_steps;
  }
  return static_cast<double>(sched.total_steps - step) /
         (sched.total_steps - sched.warmup_steps);
}

void AdamW::step(ParameterStore& store, double lr_scale) {
  ++step_;
  const double lr = cfg_.lr * lr_scale;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const std::string& name : store.trainable()) {
    Tensor& p = store.ref(name);
    if (!p.has_grad())
      throw ConfigError("adamw: trainable parameter '" + name + "' has no gradient");
    auto g = p.grad();
    auto w = p.data();
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != w.size()) m.assign(w.size(), 0.0);
    if (v.size() != w.size()) v.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      w[i] -= lr * cfg_.weight_decay * w[i];  // decoupled decay
    }
    p.zero_grad();
  }
}

}  // namespace mixda
