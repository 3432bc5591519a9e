#include "planlab/il.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "planlab/features.hpp"
#include "planlab/optimizer.hpp"

namespace planlab {

int assign_positive(const AnchorSet& anchors, const Trajectory& expert) {
  if (anchors.size() < 1) throw std::invalid_argument("assign_positive: empty anchor set");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < anchors.size(); ++k) {
    const Trajectory& a = anchors.anchors[k];
    if (a.size() != expert.size()) throw std::invalid_argument("assign_positive: N_f mismatch");
    double d = 0.0;
    for (int i = 0; i < expert.size(); ++i) d += (a.wp[i] - expert.wp[i]).norm();
    d /= expert.size();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ILLossResult il_loss(const DiffusionPolicy& policy, const ILExample& example,
                     const std::vector<int>& ts, const std::vector<Eigen::VectorXd>& eps_draws) {
  const int k_total = policy.anchors.size();
  if (static_cast<int>(ts.size()) != k_total || static_cast<int>(eps_draws.size()) != k_total) {
    throw std::invalid_argument("il_loss: need one (t, eps) draw per anchor");
  }
  const int n_out = policy.n_coords();
  const Eigen::VectorXd expert_norm = policy.normalize(example.expert);

  ILLossResult res;
  res.grads = NetGrads::zeros_like(policy.net);
  for (int k = 0; k < k_total; ++k) {
    const Eigen::VectorXd tau_t =
        forward_diffuse(policy.anchor_norm(k), ts[k], policy.schedule, eps_draws[k]);
    const auto pred = policy.predict(example.features, k, tau_t, ts[k]);
    const double y = k == example.positive ? 1.0 : 0.0;

    Eigen::VectorXd gout = Eigen::VectorXd::Zero(n_out + 1);
    if (k == example.positive) {
      const Eigen::VectorXd err = pred.tau0_hat - expert_norm;
      res.l_rec += err.squaredNorm() / n_out;
      gout.head(n_out) = 2.0 * err / n_out;
    }
    res.rec_grad_norms.push_back(gout.head(n_out).norm());
    res.l_bce += bce_with_logit(pred.score_logit, y);
    gout[n_out] = squash_score(pred.score_logit) - y;

    res.grads.add_scaled(backward(policy.net, pred.net_input, gout), 1.0);
  }
  res.total = res.l_rec + res.l_bce;
  return res;
}

ILLossResult il_loss_sampled(const DiffusionPolicy& policy, const ILExample& example, Rng& rng) {
  const int k_total = policy.anchors.size();
  std::vector<int> ts(k_total);
  std::vector<Eigen::VectorXd> eps(k_total);
  for (int k = 0; k < k_total; ++k) {
    ts[k] = rng.uniform_int(1, policy.schedule.t_trunc);
    eps[k].resize(policy.n_coords());
    for (int d = 0; d < eps[k].size(); ++d) eps[k][d] = rng.normal();
  }
  return il_loss(policy, example, ts, eps);
}

ILExample make_il_example(const DiffusionPolicy& policy, const Scene& scene) {
  ILExample ex;
  ex.features = scene_features(scene);
  ex.expert = scene.expert;
  ex.positive = assign_positive(policy.anchors, scene.expert);
  return ex;
}

ILResult train_il(const ILConfig& config, const std::vector<Scene>& dataset, uint64_t seed,
                  const std::optional<AnchorSet>& anchor_override) {
  if (dataset.empty()) throw std::invalid_argument("train_il: empty dataset");

  std::vector<Trajectory> experts;
  experts.reserve(dataset.size());
  for (const auto& s : dataset) experts.push_back(s.expert);

  AnchorSet anchors =
      anchor_override ? *anchor_override : kmeans_anchors(experts, config.n_anchor, seed);
  double sx = 1.0, sy = 1.0;
  fit_norm_scales(experts, &sx, &sy);

  const NoiseSchedule schedule = make_schedule(config.t_trunc, config.beta_lo, config.beta_hi);
  DiffusionPolicy policy = DiffusionPolicy::make(anchors, schedule, sx, sy, kFeatureDim,
                                                 config.hidden_dims, config.policy, seed);

  std::vector<ILExample> examples;
  examples.reserve(dataset.size());
  for (const auto& s : dataset) examples.push_back(make_il_example(policy, s));

  const long iters_per_epoch =
      (static_cast<long>(examples.size()) + config.batch_size - 1) / config.batch_size;
  LrSchedule lrs{config.lr, config.warmup_ratio, config.epochs * iters_per_epoch};
  AdamW opt = AdamW::make(policy.net, lrs, config.weight_decay);

  Rng rng(seed ^ 0x11aa22bb33cc44ddULL);
  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  ILResult result;
  DenseNet last_good = policy.net;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Seeded Fisher-Yates shuffle.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    for (long it = 0; it < iters_per_epoch; ++it) {
      NetGrads grads = NetGrads::zeros_like(policy.net);
      double l_rec = 0.0, l_bce = 0.0;
      int count = 0;
      for (int b = 0; b < config.batch_size; ++b) {
        const size_t idx = (it * config.batch_size + b) % order.size();
        const ILExample& ex = examples[order[idx]];
        ILLossResult lr = il_loss_sampled(policy, ex, rng);
        grads.add_scaled(lr.grads, 1.0);
        l_rec += lr.l_rec;
        l_bce += lr.l_bce;
        ++count;
      }
      grads.scale(1.0 / count);
      l_rec /= count;
      l_bce /= count;
      const double total = l_rec + l_bce;
      if (!std::isfinite(total)) {
        policy.net = last_good;  // abort, keep the last good parameters
        result.policy = std::move(policy);
        return result;
      }
      last_good = policy.net;
      try {
        opt.step(policy.net, grads);
      } catch (const std::runtime_error&) {
        policy.net = last_good;
        result.policy = std::move(policy);
        return result;
      }
      result.curve.push_back({step, l_rec, l_bce, total});
      ++step;
    }
  }
  result.policy = std::move(policy);
  return result;
}

}  // namespace planlab
