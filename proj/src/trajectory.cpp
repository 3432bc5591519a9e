#include "planlab/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "planlab/rng.hpp"

namespace planlab {

bool Trajectory::finite() const {
  for (const auto& p : wp) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return false;
  }
  return std::isfinite(dt) && dt > 0.0;
}

Eigen::VectorXd Trajectory::flat() const {
  Eigen::VectorXd v(2 * size());
  for (int i = 0; i < size(); ++i) {
    v[2 * i] = wp[i].x();
    v[2 * i + 1] = wp[i].y();
  }
  return v;
}

Trajectory Trajectory::from_flat(const Eigen::VectorXd& v, double dt) {
  if (v.size() % 2 != 0) throw std::invalid_argument("flat trajectory length must be even");
  Trajectory t;
  t.dt = dt;
  t.wp.resize(v.size() / 2);
  for (int i = 0; i < static_cast<int>(t.wp.size()); ++i) {
    t.wp[i] = Eigen::Vector2d(v[2 * i], v[2 * i + 1]);
  }
  return t;
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory needs at least 2 waypoints");
  if (!traj.finite()) throw std::invalid_argument("trajectory has non-finite entries");
}

Trajectory apply_multiplicative_noise(const Trajectory& traj, const MulNoise& noise) {
  if (!std::isfinite(noise.eps_long) || !std::isfinite(noise.eps_lat) || noise.eps_long <= -1.0 ||
      noise.eps_lat <= -1.0) {
    throw std::invalid_argument("multiplicative noise must be finite and > -1");
  }
  Trajectory out = traj;
  for (auto& p : out.wp) {
    p.x() *= 1.0 + noise.eps_long;
    p.y() *= 1.0 + noise.eps_lat;
  }
  return out;
}

Trajectory apply_additive_noise(const Trajectory& traj, std::span<const double> per_point_noise) {
  if (static_cast<int>(per_point_noise.size()) != 2 * traj.size()) {
    throw std::invalid_argument("additive noise length must be 2 * N_f");
  }
  Trajectory out = traj;
  for (int i = 0; i < out.size(); ++i) {
    out.wp[i].x() += per_point_noise[2 * i];
    out.wp[i].y() += per_point_noise[2 * i + 1];
  }
  return out;
}

namespace {

int count_distinct(const std::vector<Eigen::VectorXd>& pts) {
  int distinct = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool seen = false;
    for (size_t j = 0; j < i; ++j) {
      if (pts[i] == pts[j]) {
        seen = true;
        break;
      }
    }
    if (!seen) ++distinct;
  }
  return distinct;
}

// k-means++ over the distinct point values (first-occurrence order), so the
// init does not depend on duplication multiplicity.
std::vector<Eigen::VectorXd> kmeanspp_init(const std::vector<Eigen::VectorXd>& pts, int k, Rng& rng) {
  std::vector<Eigen::VectorXd> uniq;
  for (const auto& p : pts) {
    bool seen = false;
    for (const auto& u : uniq) {
      if (u == p) seen = true;
    }
    if (!seen) uniq.push_back(p);
  }

  std::vector<Eigen::VectorXd> centers;
  centers.reserve(k);
  centers.push_back(uniq[rng.uniform_int(0, static_cast<int>(uniq.size()) - 1)]);
  std::vector<double> d2(uniq.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < uniq.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (uniq[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      for (size_t i = 0; i < uniq.size(); ++i) {
        bool used = false;
        for (const auto& c : centers) {
          if (uniq[i] == c) used = true;
        }
        if (!used) {
          centers.push_back(uniq[i]);
          break;
        }
      }
      continue;
    }
    double r = rng.uniform() * total;
    size_t pick = uniq.size() - 1;
    for (size_t i = 0; i < uniq.size(); ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(uniq[pick]);
  }
  return centers;
}

}  // namespace

AnchorSet kmeans_anchors(const std::vector<Trajectory>& expert_trajs, int n_anchor, uint64_t seed,
                         std::vector<double>* inertia_trace) {
  if (n_anchor < 1) throw std::invalid_argument("n_anchor must be >= 1");
  if (static_cast<int>(expert_trajs.size()) < n_anchor) {
    throw std::invalid_argument("need at least n_anchor trajectories");
  }
  const int n_f = expert_trajs.front().size();
  const double dt = expert_trajs.front().dt;
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(expert_trajs.size());
  for (const auto& t : expert_trajs) {
    if (t.size() != n_f) throw std::invalid_argument("all trajectories must share N_f");
    pts.push_back(t.flat());
  }
  if (count_distinct(pts) < n_anchor) {
    throw std::invalid_argument("fewer distinct trajectories than n_anchor");
  }

  Rng rng(seed);
  std::vector<Eigen::VectorXd> centers = kmeanspp_init(pts, n_anchor, rng);
  std::vector<int> assign(pts.size(), -1);

  auto nearest = [&](const Eigen::VectorXd& p) {
    int best = 0;
    double best_d = (p - centers[0]).squaredNorm();
    for (int c = 1; c < n_anchor; ++c) {
      const double d = (p - centers[c]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  };

  std::vector<int> counts(n_anchor, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      const int c = nearest(pts[i]);
      inertia += (pts[i] - centers[c]).squaredNorm();
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (inertia_trace) inertia_trace->push_back(inertia);

    std::vector<Eigen::VectorXd> sums(n_anchor, Eigen::VectorXd::Zero(2 * n_f));
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < pts.size(); ++i) {
      sums[assign[i]] += pts[i];
      ++counts[assign[i]];
    }
    for (int c = 0; c < n_anchor; ++c) {
      if (counts[c] > 0) {
        centers[c] = sums[c] / counts[c];
      } else {
        // Re-seed to the point farthest from its assigned center.
        size_t far_i = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < pts.size(); ++i) {
          const double d = (pts[i] - centers[assign[i]]).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        centers[c] = pts[far_i];
        changed = true;
      }
    }

    // Duplicate centers would violate the anchor-set invariant; split the
    // worst-served point off instead.
    for (int c = 0; c < n_anchor; ++c) {
      for (int c2 = 0; c2 < c; ++c2) {
        if (centers[c] == centers[c2]) {
          size_t far_i = 0;
          double far_d = -1.0;
          for (size_t i = 0; i < pts.size(); ++i) {
            const double d = (pts[i] - centers[assign[i]]).squaredNorm();
            if (d > far_d) {
              far_d = d;
              far_i = i;
            }
          }
          centers[c] = pts[far_i];
          changed = true;
        }
      }
    }

    if (!changed && iter > 0) break;
  }

  AnchorSet out;
  out.anchors.reserve(n_anchor);
  for (int c = 0; c < n_anchor; ++c) {
    out.anchors.push_back(Trajectory::from_flat(centers[c], dt));
    out.counts.push_back(std::max(1, counts[c]));
  }
  return out;
}

double kmeans_inertia(const std::vector<Trajectory>& trajs, const AnchorSet& anchors) {
  double inertia = 0.0;
  for (const auto& t : trajs) {
    const Eigen::VectorXd p = t.flat();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors.anchors) best = std::min(best, (p - a.flat()).squaredNorm());
    inertia += best;
  }
  return inertia;
}

double diversity(const std::vector<Trajectory>& trajs, double eps) {
  const int m = static_cast<int>(trajs.size());
  if (m < 2) throw std::invalid_argument("diversity needs at least 2 trajectories");
  const int n_f = trajs.front().size();
  for (const auto& t : trajs) {
    if (t.size() != n_f) throw std::invalid_argument("diversity inputs must share N_f");
  }

  double acc = 0.0;
  for (int n = 0; n < n_f; ++n) {
    double raw = 0.0;
    for (int i = 0; i < m - 1; ++i) {
      for (int j = i + 1; j < m; ++j) {
        raw += (trajs[i].wp[n] - trajs[j].wp[n]).norm();
      }
    }
    raw *= 2.0 / (static_cast<double>(m) * (m - 1));

    double scale = 0.0;
    for (int i = 0; i < m; ++i) scale += trajs[i].wp[n].norm();
    scale /= m;

    acc += raw == 0.0 ? 0.0 : std::min(1.0, raw / (eps + scale));
  }
  return acc / n_f;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json j;
  std::vector<double> flat(2 * traj.size());
  for (int i = 0; i < traj.size(); ++i) {
    flat[2 * i] = traj.wp[i].x();
    flat[2 * i + 1] = traj.wp[i].y();
  }
  j["wp"] = flat;
  j["dt"] = traj.dt;
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  const auto flat = j.at("wp").get<std::vector<double>>();
  if (flat.size() % 2 != 0) throw std::invalid_argument("trajectory json: odd wp length");
  Trajectory t;
  t.dt = j.at("dt").get<double>();
  t.wp.resize(flat.size() / 2);
  for (size_t i = 0; i < t.wp.size(); ++i) {
    t.wp[i] = Eigen::Vector2d(flat[2 * i], flat[2 * i + 1]);
  }
  return t;
}

}  // namespace planlab
