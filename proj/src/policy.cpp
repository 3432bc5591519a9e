#include "planlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace planlab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

NoiseSchedule make_schedule(int t_trunc, double beta_lo, double beta_hi) {
  if (t_trunc < 1) throw std::invalid_argument("t_trunc must be >= 1");
  if (!(0.0 < beta_lo && beta_lo <= beta_hi && beta_hi < 1.0)) {
    throw std::invalid_argument("need 0 < beta_lo <= beta_hi < 1");
  }
  NoiseSchedule s;
  s.t_trunc = t_trunc;
  s.alpha_bar.resize(t_trunc + 1);
  s.alpha.resize(t_trunc + 1);
  s.alpha_bar[0] = 1.0;
  s.alpha[0] = 1.0;
  for (int t = 1; t <= t_trunc; ++t) {
    const double beta =
        t_trunc == 1 ? beta_lo : beta_lo + (beta_hi - beta_lo) * (t - 1) / (t_trunc - 1);
    s.alpha[t] = 1.0 - beta;
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  validate_schedule(s);
  return s;
}

void validate_schedule(const NoiseSchedule& s) {
  if (s.t_trunc < 1 || static_cast<int>(s.alpha_bar.size()) != s.t_trunc + 1 ||
      static_cast<int>(s.alpha.size()) != s.t_trunc + 1) {
    throw std::invalid_argument("schedule: bad sizes");
  }
  if (s.alpha_bar[0] != 1.0) throw std::invalid_argument("schedule: alpha_bar[0] must be 1");
  for (int t = 1; t <= s.t_trunc; ++t) {
    if (!(s.alpha_bar[t] > 0.0 && s.alpha_bar[t] < s.alpha_bar[t - 1])) {
      throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing in (0, 1]");
    }
  }
}

Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& anchor_flat, int t,
                                const NoiseSchedule& schedule,
                                const Eigen::VectorXd& gaussian_draw) {
  if (t < 0 || t > schedule.t_trunc) throw std::invalid_argument("forward_diffuse: t out of range");
  if (gaussian_draw.size() != anchor_flat.size()) {
    throw std::invalid_argument("forward_diffuse: draw size mismatch");
  }
  if (t == 0) return anchor_flat;  // alpha_bar_0 = 1
  const double ab = schedule.alpha_bar[t];
  return std::sqrt(ab) * anchor_flat + std::sqrt(1.0 - ab) * gaussian_draw;
}

std::vector<int> infer_timesteps(int t_total, int n_steps) {
  if (n_steps < 1 || n_steps > t_total) throw std::invalid_argument("bad n_steps");
  std::vector<int> ts(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) {
    ts[i] = static_cast<int>(std::lround(static_cast<double>(t_total) * (n_steps - i) / n_steps));
  }
  return ts;
}

double bce_with_logit(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

double step_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, double stddev,
                           double stddev_floor) {
  if (x.size() != mean.size()) throw std::invalid_argument("log_likelihood: shape mismatch");
  const double sigma = std::max(stddev, stddev_floor);
  if (!(sigma > 0.0)) throw std::runtime_error("log_likelihood: non-positive std after flooring");
  const double d = static_cast<double>(x.size());
  const double var = sigma * sigma;
  return -0.5 * d * std::log(kTwoPi * var) - (x - mean).squaredNorm() / (2.0 * var);
}

double squash_score(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

DiffusionPolicy DiffusionPolicy::make(const AnchorSet& anchors, const NoiseSchedule& schedule,
                                      double scale_x, double scale_y, int feat_dim,
                                      const std::vector<int>& hidden_dims, const PolicyConfig& cfg,
                                      uint64_t seed) {
  validate_schedule(schedule);
  if (anchors.size() < 1) throw std::invalid_argument("policy needs at least one anchor");
  DiffusionPolicy p;
  p.schedule = schedule;
  p.scale_x = scale_x;
  p.scale_y = scale_y;
  p.anchors = anchors;
  p.cfg = cfg;
  p.cfg.n_f = anchors.anchors.front().size();
  p.feat_dim = feat_dim;
  std::vector<int> dims;
  dims.push_back(p.net_input_dim());
  for (int h : hidden_dims) dims.push_back(h);
  dims.push_back(p.net_output_dim());
  p.net = DenseNet::make(dims, seed);
  p.rebuild_anchor_cache();
  return p;
}

void DiffusionPolicy::rebuild_anchor_cache() {
  anchor_norm_.clear();
  for (const auto& a : anchors.anchors) anchor_norm_.push_back(normalize(a));
}

Eigen::VectorXd DiffusionPolicy::normalize(const Trajectory& traj) const {
  Eigen::VectorXd v(2 * traj.size());
  for (int i = 0; i < traj.size(); ++i) {
    v[2 * i] = traj.wp[i].x() / scale_x;
    v[2 * i + 1] = traj.wp[i].y() / scale_y;
  }
  return v;
}

Trajectory DiffusionPolicy::denormalize(const Eigen::VectorXd& flat) const {
  Trajectory t;
  t.dt = cfg.dt;
  t.wp.resize(flat.size() / 2);
  for (size_t i = 0; i < t.wp.size(); ++i) {
    t.wp[i] = Eigen::Vector2d(flat[2 * i] * scale_x, flat[2 * i + 1] * scale_y);
  }
  return t;
}

Eigen::VectorXd DiffusionPolicy::timestep_embedding(int t) const {
  Eigen::VectorXd e(cfg.temb_dim);
  const int half = cfg.temb_dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    e[2 * i] = std::sin(t * freq);
    e[2 * i + 1] = std::cos(t * freq);
  }
  return e;
}

Eigen::VectorXd DiffusionPolicy::encode_input(const Eigen::VectorXd& features, int anchor_index,
                                              const Eigen::VectorXd& tau_t, int t) const {
  if (features.size() != feat_dim) throw std::invalid_argument("encode_input: feature dim mismatch");
  if (anchor_index < 0 || anchor_index >= anchors.size()) {
    throw std::invalid_argument("encode_input: anchor index out of range");
  }
  if (tau_t.size() != n_coords()) throw std::invalid_argument("encode_input: tau size mismatch");
  Eigen::VectorXd in(net_input_dim());
  in << features, anchor_norm_[anchor_index], tau_t, timestep_embedding(t);
  return in;
}

DiffusionPolicy::Prediction DiffusionPolicy::predict(const Eigen::VectorXd& features,
                                                     int anchor_index,
                                                     const Eigen::VectorXd& tau_t, int t) const {
  Prediction pred;
  pred.net_input = encode_input(features, anchor_index, tau_t, t);
  const Eigen::VectorXd out = net.forward(pred.net_input);
  if (!out.allFinite()) throw std::runtime_error("policy divergence: non-finite network output");
  pred.tau0_hat = anchor_norm_[anchor_index] + out.head(n_coords());
  pred.score_logit = out[n_coords()];
  return pred;
}

double DiffusionPolicy::mean_coeff(int t, int t_prev, double eta) const {
  const double ab_cur = schedule.alpha_bar[t];
  const double ab_prev = schedule.alpha_bar[t_prev];
  const double sigma2 = eta * (1.0 - schedule.alpha[t]);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma2));
  return std::sqrt(ab_prev) - dir * std::sqrt(ab_cur) / std::sqrt(1.0 - ab_cur);
}

StepRecord DiffusionPolicy::denoise_to(const Eigen::VectorXd& features, int anchor_index,
                                       const Eigen::VectorXd& tau_t, int t, int t_prev, double eta,
                                       Rng* rng) const {
  if (t < 1 || t > schedule.t_trunc || t_prev < 0 || t_prev >= t) {
    throw std::invalid_argument("denoise_to: bad timestep pair");
  }
  const Prediction pred = predict(features, anchor_index, tau_t, t);

  const double ab_cur = schedule.alpha_bar[t];
  const double ab_prev = schedule.alpha_bar[t_prev];
  const double sigma2 = eta * (1.0 - schedule.alpha[t]);
  const Eigen::VectorXd eps_hat =
      (tau_t - std::sqrt(ab_cur) * pred.tau0_hat) / std::sqrt(1.0 - ab_cur);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma2));

  StepRecord rec;
  rec.t = t;
  rec.t_prev = t_prev;
  rec.input = tau_t;
  rec.mean = std::sqrt(ab_prev) * pred.tau0_hat + dir * eps_hat;
  rec.score_logit = pred.score_logit;
  if (eta > 0.0) {
    rec.stddev = std::max(cfg.explore_floor, std::sqrt(sigma2));
    rec.output = rec.mean;
    for (int i = 0; i < rec.output.size(); ++i) rec.output[i] += rec.stddev * rng->normal();
  } else {
    rec.stddev = 0.0;
    rec.output = rec.mean;
  }
  if (!rec.output.allFinite()) throw std::runtime_error("policy divergence: non-finite step output");
  return rec;
}

std::vector<DenoiseChain> DiffusionPolicy::sample_group(const Eigen::VectorXd& features,
                                                        int group_size, uint64_t seed,
                                                        ExploreNoise noise_type) const {
  GroupSampleOptions options;
  options.noise_type = noise_type;
  return sample_group(features, group_size, seed, options);
}

std::vector<DenoiseChain> DiffusionPolicy::sample_group(const Eigen::VectorXd& features,
                                                        int group_size, uint64_t seed,
                                                        const GroupSampleOptions& options) const {
  if (group_size < 2) throw std::invalid_argument("sample_group: G must be >= 2");
  const int t_total = schedule.t_trunc;
  const double mul_std = std::max(cfg.explore_floor, cfg.mul_noise_std);
  Rng base(seed);

  std::vector<DenoiseChain> chains;
  chains.reserve(anchors.size() * group_size);
  for (int k = 0; k < anchors.size(); ++k) {
    for (int i = 0; i < group_size; ++i) {
      Rng rng = base.fork(static_cast<uint64_t>(k) * group_size + i);
      DenoiseChain chain;
      chain.anchor_index = k;

      Eigen::VectorXd eps = Eigen::VectorXd::Zero(n_coords());
      if (!options.zero_noise) {
        for (int d = 0; d < eps.size(); ++d) eps[d] = rng.normal();
      }
      Eigen::VectorXd tau = forward_diffuse(anchor_norm_[k], t_total, schedule, eps);

      if (!options.zero_noise) {
        if (options.noise_type == ExploreNoise::multiplicative) {
          chain.eps_mul.eps_long = std::max(-0.9, rng.normal(0.0, mul_std));
          chain.eps_mul.eps_lat = std::max(-0.9, rng.normal(0.0, mul_std));
          for (int d = 0; d < tau.size(); d += 2) tau[d] *= 1.0 + chain.eps_mul.eps_long;
          for (int d = 1; d < tau.size(); d += 2) tau[d] *= 1.0 + chain.eps_mul.eps_lat;
        } else {
          // Additive baseline at matched noise energy: per-point std scaled
          // by the RMS coordinate magnitude of the input being perturbed.
          const double rms = std::sqrt(tau.squaredNorm() / tau.size());
          const double add_std = mul_std * rms;
          for (int d = 0; d < tau.size(); ++d) tau[d] += rng.normal(0.0, add_std);
        }
      }

      for (int t = t_total; t >= 1; --t) {
        StepRecord rec = denoise_to(features, k, tau, t, t - 1, options.eta,
                                    options.eta > 0.0 ? &rng : nullptr);
        tau = rec.output;
        chain.steps.push_back(std::move(rec));
      }
      chain.final_traj = denormalize(tau);
      chain.final_score_logit = chain.steps.back().score_logit;
      chains.push_back(std::move(chain));
    }
  }
  return chains;
}

std::vector<std::pair<Trajectory, double>> DiffusionPolicy::infer(const Eigen::VectorXd& features,
                                                                  int n_steps,
                                                                  uint64_t seed) const {
  const int t_total = schedule.t_trunc;
  if (n_steps < 1 || n_steps > t_total) throw std::invalid_argument("infer: bad n_steps");

  // Evenly spaced timestep subset, e.g. T=8, n_steps=2 -> 8, 4, 0.
  const std::vector<int> ts = infer_timesteps(t_total, n_steps);

  Rng base(seed);
  std::vector<std::pair<Trajectory, double>> out;
  out.reserve(anchors.size());
  for (int k = 0; k < anchors.size(); ++k) {
    Rng rng = base.fork(k);
    Eigen::VectorXd eps(n_coords());
    for (int d = 0; d < eps.size(); ++d) eps[d] = rng.normal();
    Eigen::VectorXd tau = forward_diffuse(anchor_norm_[k], t_total, schedule, eps);
    double logit = 0.0;
    for (int i = 0; i + 1 <= n_steps; ++i) {
      StepRecord rec = denoise_to(features, k, tau, ts[i], ts[i + 1], 0.0, nullptr);
      tau = rec.output;
      logit = rec.score_logit;
    }
    out.emplace_back(denormalize(tau), logit);
  }
  return out;
}

void fit_norm_scales(const std::vector<Trajectory>& experts, double* sx, double* sy) {
  double mx = 1.0, my = 1.0;
  for (const auto& t : experts) {
    for (const auto& p : t.wp) {
      mx = std::max(mx, std::abs(p.x()));
      my = std::max(my, std::abs(p.y()));
    }
  }
  *sx = mx;
  *sy = my;
}

namespace {

void save_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i) os << format_double(v[i]) << '\n';
}

Eigen::VectorXd load_vector(std::istream& is, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    if (!(is >> v[i])) throw std::runtime_error("checkpoint: truncated vector");
  }
  return v;
}

}  // namespace

void save_policy(const DiffusionPolicy& p, std::ostream& os) {
  os << "policycheckpoint 1\n";
  os << "feat_dim " << p.feat_dim << '\n';
  os << "nf " << p.cfg.n_f << '\n';
  os << "dt " << format_double(p.cfg.dt) << '\n';
  os << "temb " << p.cfg.temb_dim << '\n';
  os << "explore_floor " << format_double(p.cfg.explore_floor) << '\n';
  os << "loglik_floor " << format_double(p.cfg.loglik_floor) << '\n';
  os << "mul_noise_std " << format_double(p.cfg.mul_noise_std) << '\n';
  os << "scale " << format_double(p.scale_x) << ' ' << format_double(p.scale_y) << '\n';
  os << "schedule " << p.schedule.t_trunc << '\n';
  for (int t = 0; t <= p.schedule.t_trunc; ++t) os << format_double(p.schedule.alpha_bar[t]) << '\n';
  os << "anchors " << p.anchors.size() << ' ' << p.cfg.n_f << '\n';
  for (int k = 0; k < p.anchors.size(); ++k) {
    os << p.anchors.counts[k] << '\n';
    save_vector(os, p.anchors.anchors[k].flat());
  }
  save_dense_net(p.net, os);
}

DiffusionPolicy load_policy(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "policycheckpoint" || version != 1) {
    throw std::runtime_error("checkpoint: bad policy header");
  }
  DiffusionPolicy p;
  auto expect = [&](const std::string& name) {
    std::string got;
    is >> got;
    if (got != name) throw std::runtime_error("checkpoint: expected field " + name);
  };
  expect("feat_dim");
  is >> p.feat_dim;
  expect("nf");
  is >> p.cfg.n_f;
  expect("dt");
  is >> p.cfg.dt;
  expect("temb");
  is >> p.cfg.temb_dim;
  expect("explore_floor");
  is >> p.cfg.explore_floor;
  expect("loglik_floor");
  is >> p.cfg.loglik_floor;
  expect("mul_noise_std");
  is >> p.cfg.mul_noise_std;
  expect("scale");
  is >> p.scale_x >> p.scale_y;
  expect("schedule");
  is >> p.schedule.t_trunc;
  p.schedule.alpha_bar.resize(p.schedule.t_trunc + 1);
  for (int t = 0; t <= p.schedule.t_trunc; ++t) is >> p.schedule.alpha_bar[t];
  p.schedule.alpha.resize(p.schedule.t_trunc + 1);
  p.schedule.alpha[0] = 1.0;
  for (int t = 1; t <= p.schedule.t_trunc; ++t) {
    p.schedule.alpha[t] = p.schedule.alpha_bar[t] / p.schedule.alpha_bar[t - 1];
  }
  expect("anchors");
  int n_anchor = 0, nf = 0;
  is >> n_anchor >> nf;
  if (!is || n_anchor < 1 || nf != p.cfg.n_f) throw std::runtime_error("checkpoint: bad anchors");
  for (int k = 0; k < n_anchor; ++k) {
    int count = 0;
    is >> count;
    p.anchors.counts.push_back(count);
    p.anchors.anchors.push_back(Trajectory::from_flat(load_vector(is, 2 * nf), p.cfg.dt));
  }
  p.net = load_dense_net(is);
  validate_schedule(p.schedule);
  p.rebuild_anchor_cache();
  return p;
}

void save_policy_file(const DiffusionPolicy& policy, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save_policy(policy, os);
}

DiffusionPolicy load_policy_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  return load_policy(is);
}

}  // namespace planlab
