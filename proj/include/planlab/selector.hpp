#pragma once

#include <string>
#include <vector>

#include "planlab/policy.hpp"
#include "planlab/scene.hpp"

namespace planlab {

// Post-hoc coarse-to-fine trajectory scorer. Both stages are dense nets over
// (scene features ++ flattened normalized trajectory) -> scalar logit.
struct Selector {
  DenseNet coarse;
  DenseNet fine;
  double margin = 0.05;
  int top_k = 0;            // 0 -> ceil(M / 2) at call time
  bool two_stage = true;    // single-stage ablation scores with coarse only
  bool use_rank = true;     // rank loss on/off (training-time switch)
  double scale_x = 1.0;
  double scale_y = 1.0;
  int feat_dim = 0;
  int n_f = 8;

  Eigen::VectorXd encode(const Eigen::VectorXd& features, const Trajectory& traj) const;
};

struct SelectResult {
  int best = 0;
  std::vector<double> coarse_scores;           // all candidates
  std::vector<double> fine_scores;             // -inf where not evaluated
};

// Coarse scorer ranks all M candidates; the top-k by coarse logit (ties to
// the lower index) go to the fine scorer; returns the argmax fine logit.
SelectResult select(const Selector& nets, const Eigen::VectorXd& features,
                    const std::vector<Trajectory>& candidates, int k);

// Full ranking: coarse-top-k ordered by fine logit first, remainder by
// coarse logit; ties always break to the lower candidate index.
std::vector<int> rank_candidates(const Selector& nets, const Eigen::VectorXd& features,
                                 const std::vector<Trajectory>& candidates);

// Margin-rank loss over ordered pairs with distinct ground-truth quality:
// mean of max(0, -sign(s_i - s_j) * (pred_i - pred_j) + m). Tied-quality
// pairs are skipped.
double rank_loss(std::span<const double> pred, std::span<const double> gt, double margin);

struct SelectorConfig {
  int epochs = 20;
  int batch_size = 8;
  double lr = 2e-4;
  double weight_decay = 1e-4;
  double warmup_ratio = 0.10;
  std::vector<int> hidden_dims = {96, 96};
  double margin = 0.05;
  int top_k = 0;
  int n_aug = 2;              // augmented copies per candidate
  double aug_std_lo = 0.1;    // per-axis multiplicative-noise std range
  double aug_std_hi = 0.2;
  int infer_steps = 2;
  bool two_stage = true;
  bool use_rank = true;
};

struct SelectorResult {
  Selector selector;
  std::vector<std::string> warnings;
};

// The training candidate pool for one scene: the generator's inferred
// trajectories followed by n_aug multiplicative-noise copies of each, with
// per-axis std drawn uniformly from [aug_std_lo, aug_std_hi]. Deterministic
// in (train_seed, scene.seed), independent of dataset order.
std::vector<Trajectory> build_selector_candidates(const SelectorConfig& config,
                                                  const DiffusionPolicy& generator,
                                                  const Scene& scene, uint64_t train_seed);

// Candidates per scene are the generator's inferred trajectories plus n_aug
// noise-augmented copies each; binary labels mark the argmax-PDMS candidates
// and the continuous quality target is the PDMS itself.
SelectorResult train_selector(const SelectorConfig& config, const DiffusionPolicy& generator,
                              const std::vector<Scene>& dataset, uint64_t seed);

void save_selector_file(const Selector& sel, const std::string& path);
Selector load_selector_file(const std::string& path);

}  // namespace planlab
