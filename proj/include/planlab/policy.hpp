#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "planlab/dense_net.hpp"
#include "planlab/rng.hpp"
#include "planlab/trajectory.hpp"

namespace planlab {

// Truncated forward-diffusion coefficients. alpha_bar[0] = 1, strictly
// decreasing, all in (0, 1]; alpha[t] = alpha_bar[t] / alpha_bar[t-1].
struct NoiseSchedule {
  int t_trunc = 0;
  std::vector<double> alpha_bar;  // size t_trunc + 1
  std::vector<double> alpha;      // size t_trunc + 1, alpha[0] unused (1)
};

// Linear beta ramp from beta_lo to beta_hi over t_trunc steps.
NoiseSchedule make_schedule(int t_trunc, double beta_lo, double beta_hi);
void validate_schedule(const NoiseSchedule& s);

// tau_t = sqrt(alpha_bar_t) * anchor + sqrt(1 - alpha_bar_t) * eps, applied
// coordinate-wise to the flattened (normalized) trajectory. t = 0 is the
// identity edge.
Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& anchor_flat, int t,
                                const NoiseSchedule& schedule, const Eigen::VectorXd& gaussian_draw);

// Evenly spaced reverse-process timestep subset, ending at 0. For example
// t_total = 8, n_steps = 2 -> {8, 4, 0}; n_steps = t_total -> {8, 7, ..., 0}.
std::vector<int> infer_timesteps(int t_total, int n_steps);

// Numerically stable binary cross-entropy on a logit (no overflow for
// |logit| <= 50).
double bce_with_logit(double logit, double target);

// Isotropic Gaussian log-density summed over coordinates, with the standard
// deviation floored (default 0.1) for evaluation regardless of how the
// sample was drawn.
double step_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, double stddev,
                           double stddev_floor = 0.1);

double squash_score(double logit);  // logistic; squash_score(0) = 0.5

struct PolicyConfig {
  int n_f = 8;
  double dt = 0.5;
  int temb_dim = 16;
  double explore_floor = 0.04;    // minimum sampling std of exploration noise
  double loglik_floor = 0.1;      // minimum std when evaluating likelihoods
  double mul_noise_std = 0.10;    // multiplicative exploration draw std
};

enum class ExploreNoise { multiplicative, additive };

struct StepRecord {
  int t = 0;                   // diffusion time of the input
  int t_prev = 0;
  Eigen::VectorXd input;       // tau_t, normalized flat
  Eigen::VectorXd mean;        // policy mean for tau_{t_prev}
  double stddev = 0.0;         // sampling std actually used (0 when eta = 0)
  Eigen::VectorXd output;      // tau_{t_prev}
  double score_logit = 0.0;
};

struct DenoiseChain {
  int anchor_index = 0;
  MulNoise eps_mul;                   // multiplicative perturbation applied to the start
  std::vector<StepRecord> steps;      // ordered t = T_trunc .. 1
  Trajectory final_traj;              // meters
  double final_score_logit = 0.0;
};

// Anchored truncated-diffusion generator: a dense net conditioned on scene
// features, anchor, noisy trajectory and timestep embedding predicts the
// clean-sample estimate (anchor + offset) and a mode-score logit.
struct DiffusionPolicy {
  DenseNet net;
  NoiseSchedule schedule;
  double scale_x = 1.0;   // dataset-level normalization constants, meters
  double scale_y = 1.0;
  AnchorSet anchors;
  PolicyConfig cfg;
  int feat_dim = 0;

  static DiffusionPolicy make(const AnchorSet& anchors, const NoiseSchedule& schedule,
                              double scale_x, double scale_y, int feat_dim,
                              const std::vector<int>& hidden_dims, const PolicyConfig& cfg,
                              uint64_t seed);

  int n_coords() const { return 2 * cfg.n_f; }
  int net_input_dim() const { return feat_dim + 2 * n_coords() + cfg.temb_dim; }
  int net_output_dim() const { return n_coords() + 1; }

  Eigen::VectorXd normalize(const Trajectory& traj) const;
  Trajectory denormalize(const Eigen::VectorXd& flat) const;
  const Eigen::VectorXd& anchor_norm(int k) const { return anchor_norm_[k]; }

  Eigen::VectorXd timestep_embedding(int t) const;
  Eigen::VectorXd encode_input(const Eigen::VectorXd& features, int anchor_index,
                               const Eigen::VectorXd& tau_t, int t) const;

  // Net output convention: [0, 2*N_f) = offset from the anchor, [2*N_f] = score logit.
  struct Prediction {
    Eigen::VectorXd tau0_hat;  // anchor + offset, normalized
    double score_logit;
    Eigen::VectorXd net_input;
  };
  Prediction predict(const Eigen::VectorXd& features, int anchor_index,
                     const Eigen::VectorXd& tau_t, int t) const;

  // Deterministic update toward t_prev computed from the predicted clean
  // sample; with eta = 1 adds Gaussian noise of variance eta * (1 - alpha_t)
  // per coordinate, sampling std floored at cfg.explore_floor.
  StepRecord denoise_to(const Eigen::VectorXd& features, int anchor_index,
                        const Eigen::VectorXd& tau_t, int t, int t_prev, double eta,
                        Rng* rng) const;

  // d(step mean)/d(tau0_hat), a scalar because the update is coordinate-wise.
  double mean_coeff(int t, int t_prev, double eta) const;

  // Per anchor, G stochastic chains (eta = 1): forward-diffuse the anchor to
  // T_trunc, apply one exploration perturbation to the noised input, then run
  // recorded denoising steps. Bit-identical for a fixed seed.
  std::vector<DenoiseChain> sample_group(const Eigen::VectorXd& features, int group_size,
                                         uint64_t seed,
                                         ExploreNoise noise_type = ExploreNoise::multiplicative) const;

  struct GroupSampleOptions {
    ExploreNoise noise_type = ExploreNoise::multiplicative;
    double eta = 1.0;
    bool zero_noise = false;  // diagnostic: zero initial draw and exploration
  };
  std::vector<DenoiseChain> sample_group(const Eigen::VectorXd& features, int group_size,
                                         uint64_t seed, const GroupSampleOptions& options) const;

  // Deterministic (eta = 0) reverse process on an evenly spaced timestep
  // subset of length n_steps; one candidate per anchor.
  std::vector<std::pair<Trajectory, double>> infer(const Eigen::VectorXd& features, int n_steps,
                                                   uint64_t seed) const;

  void rebuild_anchor_cache();

 private:
  std::vector<Eigen::VectorXd> anchor_norm_;
};

void save_policy(const DiffusionPolicy& policy, std::ostream& os);
DiffusionPolicy load_policy(std::istream& is);
void save_policy_file(const DiffusionPolicy& policy, const std::string& path);
DiffusionPolicy load_policy_file(const std::string& path);

// Dataset-level normalization constants: max absolute x and y over the
// expert waypoints, floored at 1 m.
void fit_norm_scales(const std::vector<Trajectory>& experts, double* sx, double* sy);

}  // namespace planlab
