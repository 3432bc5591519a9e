#pragma once

#include <span>
#include <string>
#include <vector>

#include "planlab/il.hpp"
#include "planlab/policy.hpp"
#include "planlab/scene.hpp"

namespace planlab {

// Group-relative advantages: (r_i - mean) / (population std + eps_stab).
std::vector<double> intra_anchor_advantage(std::span<const double> rewards, double eps_stab);

// Collision -> -1 (checked first); otherwise negatives clipped to zero.
std::vector<double> truncate_advantages(std::span<const double> advantages,
                                        const std::vector<bool>& collided);

// One scene's worth of per-anchor chain groups with rewards and advantages.
struct GroupRollout {
  Eigen::VectorXd features;
  int group_size = 0;
  std::vector<std::vector<DenoiseChain>> chains;   // [anchor][replicate]
  std::vector<std::vector<double>> rewards;        // PDMS of the final trajectory
  std::vector<std::vector<bool>> collided;
  std::vector<std::vector<double>> advantages;     // after optional truncation
};

GroupRollout build_rollout(const DiffusionPolicy& policy, const Scene& scene, int group_size,
                           uint64_t seed, ExploreNoise noise_type = ExploreNoise::multiplicative);

// Standardize rewards into advantages: per anchor group when intra_anchor,
// pooled over all anchors otherwise; then apply Eq.-10-style truncation when
// inter_trunc is set.
void fill_advantages(GroupRollout& rollout, double eps_stab, bool intra_anchor, bool inter_trunc);

struct RLLossResult {
  double loss = 0.0;
  NetGrads grads;
};

// Discounted per-step REINFORCE over the recorded chains. The step means are
// recomputed from the current parameters; sampled trajectories are fixed.
// gamma^(t-1) weights the step at diffusion time t, so the final (cleanest)
// denoising step carries full weight.
RLLossResult rl_loss(const DiffusionPolicy& policy, const GroupRollout& rollout, double gamma);

// total = rl + lambda_il * il; gradients combined the same way.
RLLossResult combined_loss(const RLLossResult& rl, const ILLossResult& il, double lambda_il);

struct RLConfig {
  int group_size = 8;          // G
  double gamma = 0.8;          // denoising discount
  double lambda_il = 0.1;      // IL-regularizer weight
  double eps_stab = 1e-8;      // group-std stabilizer
  int epochs = 10;
  int batch_size = 16;
  double lr = 2e-4;
  double weight_decay = 1e-4;
  double warmup_ratio = 0.10;
  double explore_floor = 0.04;
  double loglik_floor = 0.1;
  double mul_noise_std = 0.10;
  bool intra_anchor = true;    // per-anchor groups vs pooled advantages
  bool inter_trunc = true;     // Eq.-10 truncation on/off
  ExploreNoise noise_type = ExploreNoise::multiplicative;
};

struct RLMetricsRow {
  long iteration = 0;
  double mean_reward = 0.0;
  double collision_rate = 0.0;
  double diversity = 0.0;
  double rl_loss = 0.0;
  double il_loss = 0.0;
};

struct RLResult {
  DiffusionPolicy policy;
  std::vector<RLMetricsRow> metrics;
  std::vector<std::string> warnings;
};

// On-policy fine-tuning from an IL checkpoint: groups are re-sampled every
// optimizer step, scored with the rule-based reward engine, standardized,
// truncated, and combined with a fresh-timestep IL term on the same batch.
RLResult train_rl(const RLConfig& config, const std::vector<Scene>& dataset,
                  const DiffusionPolicy& il_checkpoint, uint64_t seed);

}  // namespace planlab
