#include "planlab/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace planlab {

double LrSchedule::at(long step) const {
  if (step < 0) throw std::invalid_argument("schedule step must be non-negative");
  const double warm = warmup_ratio * static_cast<double>(total_steps);
  const double s = static_cast<double>(std::min(step, total_steps));
  if (warm > 0.0 && s < warm) return peak * (s / warm);
  const double span = static_cast<double>(total_steps) - warm;
  if (span <= 0.0) return peak;
  const double progress = (s - warm) / span;
  return peak * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

AdamW AdamW::make(const DenseNet& net, const LrSchedule& schedule, double weight_decay) {
  AdamW opt;
  opt.schedule = schedule;
  opt.weight_decay = weight_decay;
  for (size_t l = 0; l < net.w.size(); ++l) {
    opt.mw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    opt.vw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    opt.mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    opt.vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  return opt;
}

namespace {

template <typename T>
void check_finite(const T& g, const std::string& block) {
  if (!g.allFinite()) {
    throw std::runtime_error("training divergence: non-finite gradient in " + block);
  }
}

}  // namespace

void AdamW::step(DenseNet& net, const NetGrads& grads) {
  if (mw.size() != net.w.size()) throw std::invalid_argument("optimizer/net shape mismatch");
  for (size_t l = 0; l < net.w.size(); ++l) {
    check_finite(grads.w[l], "w[" + std::to_string(l) + "]");
    check_finite(grads.b[l], "b[" + std::to_string(l) + "]");
  }

  const double lr = schedule.at(step_count);
  const double t = static_cast<double>(step_count + 1);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);

  for (size_t l = 0; l < net.w.size(); ++l) {
    mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.w[l];
    vw[l] = beta2 * vw[l] + (1.0 - beta2) * grads.w[l].cwiseProduct(grads.w[l]);
    mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.b[l];
    vb[l] = beta2 * vb[l] + (1.0 - beta2) * grads.b[l].cwiseProduct(grads.b[l]);

    net.w[l].array() -=
        lr * (mw[l].array() / bc1) / ((vw[l].array() / bc2).sqrt() + eps);
    net.b[l].array() -=
        lr * (mb[l].array() / bc1) / ((vb[l].array() / bc2).sqrt() + eps);

    if (weight_decay > 0.0) {
      net.w[l] *= 1.0 - lr * weight_decay;
      net.b[l] *= 1.0 - lr * weight_decay;
    }
  }
  ++step_count;
}

}  // namespace planlab
