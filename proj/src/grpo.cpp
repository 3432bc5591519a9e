#include "planlab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "planlab/features.hpp"
#include "planlab/metrics.hpp"
#include "planlab/optimizer.hpp"

namespace planlab {

std::vector<double> intra_anchor_advantage(std::span<const double> rewards, double eps_stab) {
  const int g = static_cast<int>(rewards.size());
  if (g < 2) throw std::invalid_argument("advantage needs a group of at least 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= g;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= g;  // population convention
  const double denom = std::sqrt(var) + eps_stab;
  std::vector<double> adv(g);
  for (int i = 0; i < g; ++i) adv[i] = denom > 0.0 ? (rewards[i] - mean) / denom : 0.0;
  return adv;
}

std::vector<double> truncate_advantages(std::span<const double> advantages,
                                        const std::vector<bool>& collided) {
  if (advantages.size() != collided.size()) {
    throw std::invalid_argument("truncate_advantages: length mismatch");
  }
  std::vector<double> out(advantages.size());
  for (size_t i = 0; i < advantages.size(); ++i) {
    out[i] = collided[i] ? -1.0 : std::max(0.0, advantages[i]);
  }
  return out;
}

GroupRollout build_rollout(const DiffusionPolicy& policy, const Scene& scene, int group_size,
                           uint64_t seed, ExploreNoise noise_type) {
  GroupRollout rollout;
  rollout.features = scene_features(scene);
  rollout.group_size = group_size;

  const std::vector<DenoiseChain> flat =
      policy.sample_group(rollout.features, group_size, seed, noise_type);
  const int k_total = policy.anchors.size();
  rollout.chains.resize(k_total);
  rollout.rewards.resize(k_total);
  rollout.collided.resize(k_total);
  for (const auto& chain : flat) {
    const int k = chain.anchor_index;
    const RewardBreakdown rb = score_submetrics(scene, chain.final_traj);
    rollout.rewards[k].push_back(rb.pdms);
    rollout.collided[k].push_back(rb.collided);
    rollout.chains[k].push_back(chain);
  }
  return rollout;
}

void fill_advantages(GroupRollout& rollout, double eps_stab, bool intra_anchor, bool inter_trunc) {
  const int k_total = static_cast<int>(rollout.chains.size());
  rollout.advantages.assign(k_total, {});

  if (intra_anchor) {
    for (int k = 0; k < k_total; ++k) {
      std::vector<double> adv = intra_anchor_advantage(rollout.rewards[k], eps_stab);
      rollout.advantages[k] =
          inter_trunc ? truncate_advantages(adv, rollout.collided[k]) : std::move(adv);
    }
    return;
  }

  // Naive pooled baseline: one signed group over all anchors. Truncation is
  // defined on intra-anchor groups, so it is off in this mode regardless of
  // inter_trunc.
  std::vector<double> pooled;
  for (int k = 0; k < k_total; ++k) {
    pooled.insert(pooled.end(), rollout.rewards[k].begin(), rollout.rewards[k].end());
  }
  const std::vector<double> adv = intra_anchor_advantage(pooled, eps_stab);
  size_t pos = 0;
  for (int k = 0; k < k_total; ++k) {
    for (size_t i = 0; i < rollout.rewards[k].size(); ++i) rollout.advantages[k].push_back(adv[pos++]);
  }
}

RLLossResult rl_loss(const DiffusionPolicy& policy, const GroupRollout& rollout, double gamma) {
  RLLossResult res;
  res.grads = NetGrads::zeros_like(policy.net);

  const int k_total = static_cast<int>(rollout.chains.size());
  const int n_out = policy.n_coords();
  const int t_total = policy.schedule.t_trunc;
  int group = rollout.group_size;

  for (int k = 0; k < k_total; ++k) {
    for (size_t i = 0; i < rollout.chains[k].size(); ++i) {
      const DenoiseChain& chain = rollout.chains[k][i];
      if (chain.steps.empty()) throw std::invalid_argument("rl_loss: chain without step records");
      const double adv = rollout.advantages[k][i];
      const double norm = 1.0 / (static_cast<double>(k_total) * group * t_total);
      if (adv == 0.0) continue;  // no loss mass, no gradient

      for (const StepRecord& rec : chain.steps) {
        if (rec.input.size() == 0 || rec.output.size() == 0) {
          throw std::invalid_argument("rl_loss: missing step record data");
        }
        // gamma^(t-1): full weight at the final denoising step (t = 1).
        const double w = std::pow(gamma, rec.t - 1);

        const auto pred = policy.predict(rollout.features, k, rec.input, rec.t);
        const double ab_cur = policy.schedule.alpha_bar[rec.t];
        const double ab_prev = policy.schedule.alpha_bar[rec.t_prev];
        const double sigma2 = 1.0 - policy.schedule.alpha[rec.t];
        const Eigen::VectorXd eps_hat =
            (rec.input - std::sqrt(ab_cur) * pred.tau0_hat) / std::sqrt(1.0 - ab_cur);
        const Eigen::VectorXd mean =
            std::sqrt(ab_prev) * pred.tau0_hat +
            std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma2)) * eps_hat;

        const double logp =
            step_log_likelihood(rec.output, mean, rec.stddev, policy.cfg.loglik_floor);
        res.loss -= norm * w * logp * adv;

        const double sigma_eval = std::max(rec.stddev, policy.cfg.loglik_floor);
        const double coeff = policy.mean_coeff(rec.t, rec.t_prev, 1.0);
        Eigen::VectorXd gout = Eigen::VectorXd::Zero(n_out + 1);
        // d(-w*logp*adv)/d(tau0_hat) through the step mean only.
        gout.head(n_out) =
            -norm * w * adv * coeff / (sigma_eval * sigma_eval) * (rec.output - mean);
        res.grads.add_scaled(backward(policy.net, pred.net_input, gout), 1.0);
      }
    }
  }
  return res;
}

RLLossResult combined_loss(const RLLossResult& rl, const ILLossResult& il, double lambda_il) {
  RLLossResult res;
  res.loss = rl.loss + lambda_il * il.total;
  res.grads = rl.grads;
  res.grads.add_scaled(il.grads, lambda_il);
  return res;
}

RLResult train_rl(const RLConfig& config, const std::vector<Scene>& dataset,
                  const DiffusionPolicy& il_checkpoint, uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("train_rl: empty dataset");
  if (config.group_size < 2) throw std::invalid_argument("train_rl: G must be >= 2");

  RLResult result;
  DiffusionPolicy policy = il_checkpoint;
  policy.cfg.explore_floor = config.explore_floor;
  policy.cfg.loglik_floor = config.loglik_floor;
  policy.cfg.mul_noise_std = config.mul_noise_std;

  std::vector<ILExample> examples;
  examples.reserve(dataset.size());
  for (const auto& s : dataset) examples.push_back(make_il_example(policy, s));

  const long iters_per_epoch =
      (static_cast<long>(dataset.size()) + config.batch_size - 1) / config.batch_size;
  LrSchedule lrs{config.lr, config.warmup_ratio, config.epochs * iters_per_epoch};
  AdamW opt = AdamW::make(policy.net, lrs, config.weight_decay);

  Rng rng(seed ^ 0x715feed5a11ad5ULL);        // shuffling
  Rng roll_base(seed ^ 0x9d2c5680aa11cc33ULL);  // rollout sampling
  Rng il_base(seed ^ 0x2545f4914f6cdd1dULL);    // IL-regularizer draws
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  DenseNet last_good = policy.net;
  long iteration = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    for (long it = 0; it < iters_per_epoch; ++it) {
      NetGrads grads = NetGrads::zeros_like(policy.net);
      double rl_sum = 0.0, il_sum = 0.0, reward_sum = 0.0, div_sum = 0.0;
      long n_chains = 0, n_collided = 0;
      int used = 0;

      for (int b = 0; b < config.batch_size; ++b) {
        const size_t idx = (it * config.batch_size + b) % order.size();
        const Scene& scene = dataset[order[idx]];
        const uint64_t stream = static_cast<uint64_t>(iteration) * config.batch_size + b;
        GroupRollout rollout;
        try {
          rollout = build_rollout(policy, scene, config.group_size, roll_base.fork(stream).seed(),
                                  config.noise_type);
        } catch (const std::exception& e) {
          result.warnings.push_back("iteration " + std::to_string(iteration) + ": skipped scene " +
                                    std::to_string(scene.seed) + ": " + e.what());
          continue;
        }
        fill_advantages(rollout, config.eps_stab, config.intra_anchor, config.inter_trunc);

        RLLossResult rl = rl_loss(policy, rollout, config.gamma);
        Rng il_rng = il_base.fork(stream);
        ILLossResult il = il_loss_sampled(policy, examples[order[idx]], il_rng);
        RLLossResult combined = combined_loss(rl, il, config.lambda_il);

        grads.add_scaled(combined.grads, 1.0);
        rl_sum += rl.loss;
        il_sum += il.total;
        ++used;

        std::vector<Trajectory> finals;
        for (int k = 0; k < static_cast<int>(rollout.chains.size()); ++k) {
          for (size_t c = 0; c < rollout.chains[k].size(); ++c) {
            reward_sum += rollout.rewards[k][c];
            n_collided += rollout.collided[k][c] ? 1 : 0;
            ++n_chains;
            finals.push_back(rollout.chains[k][c].final_traj);
          }
        }
        if (finals.size() >= 2) div_sum += diversity(finals);
      }
      if (used == 0) {
        ++iteration;
        continue;
      }
      grads.scale(1.0 / used);

      const double total = (rl_sum + config.lambda_il * il_sum) / used;
      if (!std::isfinite(total)) {
        policy.net = last_good;
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

      result.metrics.push_back({iteration, reward_sum / n_chains,
                                static_cast<double>(n_collided) / n_chains, div_sum / used,
                                rl_sum / used, il_sum / used});
      ++iteration;
    }
  }
  result.policy = std::move(policy);
  return result;
}

}  // namespace planlab
