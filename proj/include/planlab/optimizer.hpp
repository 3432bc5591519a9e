#pragma once

#include <vector>

#include <Eigen/Core>

#include "planlab/dense_net.hpp"

namespace planlab {

// Linear warmup to the peak rate over the first warmup_ratio fraction of
// total_steps, then cosine decay to zero. Continuous at the boundary.
struct LrSchedule {
  double peak = 2e-4;
  double warmup_ratio = 0.10;
  long total_steps = 1;

  double at(long step) const;
};

// Adaptive-moment optimizer with decoupled weight decay: the decay scales
// parameters by (1 - lr * wd) directly instead of entering the gradient.
struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  LrSchedule schedule;
  long step_count = 0;

  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;

  static AdamW make(const DenseNet& net, const LrSchedule& schedule, double weight_decay = 1e-4);

  double current_lr() const { return schedule.at(step_count); }

  // Throws on any non-finite gradient component, naming the parameter block.
  void step(DenseNet& net, const NetGrads& grads);
};

}  // namespace planlab
