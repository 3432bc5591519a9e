#pragma once

#include <optional>
#include <vector>

#include "planlab/policy.hpp"
#include "planlab/scene.hpp"

namespace planlab {

// Index of the anchor with the smallest mean per-waypoint L2 distance to the
// expert; ties break to the lowest index.
int assign_positive(const AnchorSet& anchors, const Trajectory& expert);

struct ILExample {
  Eigen::VectorXd features;
  Trajectory expert;   // meters
  int positive = 0;
};

struct ILLossResult {
  double l_rec = 0.0;
  double l_bce = 0.0;
  double total = 0.0;
  NetGrads grads;
  // Norm of d l_rec / d(denoised output) per anchor; exactly zero for every
  // negative anchor (the y^k gate), assertable per batch.
  std::vector<double> rec_grad_norms;
};

// Reconstruction on the positive anchor only (mean squared coordinate error
// in normalized units) plus independent per-anchor BCE on the score logits.
// The denoiser is supervised at one sampled timestep per anchor: ts[k] and
// eps_draws[k] are the forward-diffusion draw for anchor k.
ILLossResult il_loss(const DiffusionPolicy& policy, const ILExample& example,
                     const std::vector<int>& ts, const std::vector<Eigen::VectorXd>& eps_draws);

// Convenience wrapper drawing the per-anchor timesteps and noise from rng.
ILLossResult il_loss_sampled(const DiffusionPolicy& policy, const ILExample& example, Rng& rng);

struct ILConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr = 2e-4;
  double weight_decay = 1e-4;
  double warmup_ratio = 0.10;
  std::vector<int> hidden_dims = {96, 96};
  int n_anchor = 8;
  int t_trunc = 8;
  double beta_lo = 0.05;
  double beta_hi = 0.40;
  PolicyConfig policy;
};

struct CurveRow {
  long step = 0;
  double l_rec = 0.0;
  double l_bce = 0.0;
  double total = 0.0;
};

struct ILResult {
  DiffusionPolicy policy;
  std::vector<CurveRow> curve;
};

ILExample make_il_example(const DiffusionPolicy& policy, const Scene& scene);

// Cold-start imitation training. anchor_override bypasses k-means clustering
// (used by the single-zero-anchor baseline).
ILResult train_il(const ILConfig& config, const std::vector<Scene>& dataset, uint64_t seed,
                  const std::optional<AnchorSet>& anchor_override = std::nullopt);

}  // namespace planlab
