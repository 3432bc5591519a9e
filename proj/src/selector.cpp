#include "planlab/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "planlab/features.hpp"
#include "planlab/metrics.hpp"
#include "planlab/optimizer.hpp"

namespace planlab {

Eigen::VectorXd Selector::encode(const Eigen::VectorXd& features, const Trajectory& traj) const {
  Eigen::VectorXd in(feat_dim + 2 * n_f);
  in.head(feat_dim) = features;
  for (int i = 0; i < traj.size(); ++i) {
    in[feat_dim + 2 * i] = traj.wp[i].x() / scale_x;
    in[feat_dim + 2 * i + 1] = traj.wp[i].y() / scale_y;
  }
  return in;
}

namespace {

int effective_top_k(int configured, int m) {
  const int k = configured > 0 ? configured : (m + 1) / 2;
  return std::clamp(k, 1, m);
}

// Indices of the k largest scores, ties to the lower index.
std::vector<int> top_k_indices(const std::vector<double>& scores, int k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

}  // namespace

SelectResult select(const Selector& nets, const Eigen::VectorXd& features,
                    const std::vector<Trajectory>& candidates, int k) {
  const int m = static_cast<int>(candidates.size());
  if (m < 1) throw std::invalid_argument("select: empty candidate list");
  if (k < 1 || k > m) throw std::invalid_argument("select: k out of range");

  SelectResult res;
  res.coarse_scores.resize(m);
  res.fine_scores.assign(m, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i) {
    res.coarse_scores[i] = nets.coarse.forward(nets.encode(features, candidates[i]))[0];
  }
  if (!nets.two_stage) {
    res.best = static_cast<int>(std::max_element(res.coarse_scores.begin(),
                                                 res.coarse_scores.end()) -
                                res.coarse_scores.begin());
    return res;
  }

  const std::vector<int> shortlist = top_k_indices(res.coarse_scores, k);
  res.best = shortlist.front();
  double best_fine = -std::numeric_limits<double>::infinity();
  for (int i : shortlist) {
    const double f = nets.fine.forward(nets.encode(features, candidates[i]))[0];
    res.fine_scores[i] = f;
    if (f > best_fine || (f == best_fine && i < res.best)) {
      best_fine = f;
      res.best = i;
    }
  }
  return res;
}

std::vector<int> rank_candidates(const Selector& nets, const Eigen::VectorXd& features,
                                 const std::vector<Trajectory>& candidates) {
  const int m = static_cast<int>(candidates.size());
  const int k = effective_top_k(nets.top_k, m);
  const SelectResult res = select(nets, features, candidates, k);

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (!nets.two_stage) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return res.coarse_scores[a] > res.coarse_scores[b];
    });
    return order;
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool a_fine = std::isfinite(res.fine_scores[a]);
    const bool b_fine = std::isfinite(res.fine_scores[b]);
    if (a_fine != b_fine) return a_fine;
    if (a_fine) return res.fine_scores[a] > res.fine_scores[b];
    return res.coarse_scores[a] > res.coarse_scores[b];
  });
  return order;
}

double rank_loss(std::span<const double> pred, std::span<const double> gt, double margin) {
  if (pred.size() != gt.size()) throw std::invalid_argument("rank_loss: length mismatch");
  const int n = static_cast<int>(pred.size());
  double sum = 0.0;
  long pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || gt[i] == gt[j]) continue;
      const double sign = gt[i] > gt[j] ? 1.0 : -1.0;
      sum += std::max(0.0, -sign * (pred[i] - pred[j]) + margin);
      ++pairs;
    }
  }
  return pairs > 0 ? sum / pairs : 0.0;
}

namespace {

// d rank_loss / d pred, matching rank_loss' pair enumeration.
std::vector<double> rank_loss_grad(const std::vector<double>& pred, const std::vector<double>& gt,
                                   double margin) {
  const int n = static_cast<int>(pred.size());
  std::vector<double> g(n, 0.0);
  long pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || gt[i] == gt[j]) continue;
      ++pairs;
    }
  }
  if (pairs == 0) return g;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || gt[i] == gt[j]) continue;
      const double sign = gt[i] > gt[j] ? 1.0 : -1.0;
      if (-sign * (pred[i] - pred[j]) + margin > 0.0) {
        g[i] -= sign / pairs;
        g[j] += sign / pairs;
      }
    }
  }
  return g;
}

struct SelectorScene {
  Eigen::VectorXd features;
  std::vector<Trajectory> candidates;
  std::vector<double> quality;   // PDMS per candidate
  std::vector<double> label;     // 1 within 1e-6 of the max
};

// One training pass of a single stage over a candidate subset.
void stage_losses(const Selector& sel, const DenseNet& net, const SelectorScene& scene,
                  const std::vector<int>& subset, bool use_rank, double margin, NetGrads* grads,
                  double* loss_out) {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> logits, gt;
  for (int idx : subset) {
    inputs.push_back(sel.encode(scene.features, scene.candidates[idx]));
    logits.push_back(net.forward(inputs.back())[0]);
    gt.push_back(scene.quality[idx]);
  }
  double loss = 0.0;
  std::vector<double> dlogit(subset.size(), 0.0);
  for (size_t i = 0; i < subset.size(); ++i) {
    const double y = scene.label[subset[i]];
    loss += bce_with_logit(logits[i], y) / subset.size();
    dlogit[i] += (squash_score(logits[i]) - y) / subset.size();
  }
  if (use_rank) {
    loss += rank_loss(logits, gt, margin);
    const std::vector<double> rg = rank_loss_grad(logits, gt, margin);
    for (size_t i = 0; i < subset.size(); ++i) dlogit[i] += rg[i];
  }
  for (size_t i = 0; i < subset.size(); ++i) {
    Eigen::VectorXd gout(1);
    gout[0] = dlogit[i];
    grads->add_scaled(backward(net, inputs[i], gout), 1.0);
  }
  *loss_out += loss;
}

}  // namespace

std::vector<Trajectory> build_selector_candidates(const SelectorConfig& config,
                                                  const DiffusionPolicy& generator,
                                                  const Scene& scene, uint64_t train_seed) {
  Rng rng(mix_seed(train_seed ^ 0xa06d5ebb17ULL, scene.seed));
  std::vector<Trajectory> pool;
  const auto inferred = generator.infer(scene_features(scene), config.infer_steps, scene.seed);
  for (const auto& [traj, logit] : inferred) {
    pool.push_back(traj);
    for (int a = 0; a < config.n_aug; ++a) {
      MulNoise noise;
      noise.eps_long =
          std::max(-0.9, rng.normal(0.0, rng.uniform(config.aug_std_lo, config.aug_std_hi)));
      noise.eps_lat =
          std::max(-0.9, rng.normal(0.0, rng.uniform(config.aug_std_lo, config.aug_std_hi)));
      pool.push_back(apply_multiplicative_noise(traj, noise));
    }
  }
  return pool;
}

SelectorResult train_selector(const SelectorConfig& config, const DiffusionPolicy& generator,
                              const std::vector<Scene>& dataset, uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("train_selector: empty dataset");

  SelectorResult out;
  Selector sel;
  sel.margin = config.margin;
  sel.top_k = config.top_k;
  sel.two_stage = config.two_stage;
  sel.use_rank = config.use_rank;
  sel.scale_x = generator.scale_x;
  sel.scale_y = generator.scale_y;
  sel.feat_dim = generator.feat_dim;
  sel.n_f = generator.cfg.n_f;

  std::vector<int> dims;
  dims.push_back(sel.feat_dim + 2 * sel.n_f);
  for (int h : config.hidden_dims) dims.push_back(h);
  dims.push_back(1);
  sel.coarse = DenseNet::make(dims, seed ^ 0xc0a25eULL);
  sel.fine = DenseNet::make(dims, seed ^ 0xf19e5eULL);

  // Candidate pools per scene; scenes whose candidates all score zero are
  // skipped.
  std::vector<SelectorScene> scenes;
  for (size_t si = 0; si < dataset.size(); ++si) {
    const Scene& sc = dataset[si];
    SelectorScene ss;
    ss.features = scene_features(sc);
    ss.candidates = build_selector_candidates(config, generator, sc, seed);
    double max_q = 0.0;
    for (const auto& cand : ss.candidates) {
      ss.quality.push_back(score_submetrics(sc, cand).pdms);
      max_q = std::max(max_q, ss.quality.back());
    }
    if (max_q <= 0.0) {
      out.warnings.push_back("scene " + std::to_string(sc.seed) +
                             " skipped: all candidates score zero");
      continue;
    }
    for (double q : ss.quality) ss.label.push_back(q >= max_q - 1e-6 ? 1.0 : 0.0);
    scenes.push_back(std::move(ss));
  }
  if (scenes.empty()) throw std::runtime_error("train_selector: no usable scenes");

  const long iters_per_epoch =
      (static_cast<long>(scenes.size()) + config.batch_size - 1) / config.batch_size;
  LrSchedule lrs{config.lr, config.warmup_ratio, config.epochs * iters_per_epoch};
  AdamW opt_coarse = AdamW::make(sel.coarse, lrs, config.weight_decay);
  AdamW opt_fine = AdamW::make(sel.fine, lrs, config.weight_decay);

  Rng rng(seed ^ 0x5e1ec70bb5ULL);
  std::vector<int> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    for (long it = 0; it < iters_per_epoch; ++it) {
      NetGrads g_coarse = NetGrads::zeros_like(sel.coarse);
      NetGrads g_fine = NetGrads::zeros_like(sel.fine);
      double loss = 0.0;
      int used = 0;
      for (int b = 0; b < config.batch_size; ++b) {
        const SelectorScene& ss = scenes[order[(it * config.batch_size + b) % order.size()]];
        const int m = static_cast<int>(ss.candidates.size());
        std::vector<int> all(m);
        std::iota(all.begin(), all.end(), 0);

        // Coarse stage trains on every candidate.
        stage_losses(sel, sel.coarse, ss, all, config.use_rank, config.margin, &g_coarse, &loss);

        if (config.two_stage) {
          // Fine stage trains on the coarse shortlist; gradients flow only
          // through the fine net.
          std::vector<double> coarse_scores(m);
          for (int i = 0; i < m; ++i) {
            coarse_scores[i] = sel.coarse.forward(sel.encode(ss.features, ss.candidates[i]))[0];
          }
          const std::vector<int> shortlist =
              top_k_indices(coarse_scores, effective_top_k(config.top_k, m));
          stage_losses(sel, sel.fine, ss, shortlist, config.use_rank, config.margin, &g_fine,
                       &loss);
        }
        ++used;
      }
      g_coarse.scale(1.0 / used);
      g_fine.scale(1.0 / used);
      opt_coarse.step(sel.coarse, g_coarse);
      if (config.two_stage) opt_fine.step(sel.fine, g_fine);
    }
  }
  out.selector = std::move(sel);
  return out;
}

void save_selector_file(const Selector& sel, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "selector 1 " << format_double(sel.margin) << ' ' << sel.top_k << ' '
     << (sel.two_stage ? 1 : 0) << ' ' << (sel.use_rank ? 1 : 0) << ' '
     << format_double(sel.scale_x) << ' ' << format_double(sel.scale_y) << ' ' << sel.feat_dim
     << ' ' << sel.n_f << '\n';
  save_dense_net(sel.coarse, os);
  save_dense_net(sel.fine, os);
}

Selector load_selector_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::string tag;
  int version = 0, two_stage = 0, use_rank = 0;
  Selector sel;
  is >> tag >> version >> sel.margin >> sel.top_k >> two_stage >> use_rank >> sel.scale_x >>
      sel.scale_y >> sel.feat_dim >> sel.n_f;
  if (tag != "selector" || version != 1 || !is) {
    throw std::runtime_error("checkpoint: bad selector header");
  }
  sel.two_stage = two_stage != 0;
  sel.use_rank = use_rank != 0;
  sel.coarse = load_dense_net(is);
  sel.fine = load_dense_net(is);
  return sel;
}

}  // namespace planlab
