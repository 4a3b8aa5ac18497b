#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixda/store.hpp"

namespace mixda {

// Linear warmup followed by linear decay to zero at total_steps.
struct ScheduleConfig {
  int warmup_steps = 0;
  int total_steps = 1;
};

// Multiplier in [0, 1]; ramps 0 -> 1 over warmup, decays 1 -> 0 at total.
// Steps past total clamp to 0.
double lr_at(int step, const ScheduleConfig& sched);

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.05;
};

// Decoupled-weight-decay Adam. Moment buffers exist only for parameters in
// the store's trainable mask; everything else is left bitwise untouched.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  // One update over the trainable mask; grads of masked parameters are
  // zeroed afterwards. lr_scale is the schedule multiplier for this step.
  void step(ParameterStore& store, double lr_scale = 1.0);

  std::int64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::int64_t step_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace mixda
