#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "planlab/geometry.hpp"
#include "planlab/rng.hpp"
#include "planlab/trajectory.hpp"

using namespace planlab;

namespace {

Trajectory make_traj(std::initializer_list<std::pair<double, double>> pts, double dt = 0.5) {
  Trajectory t;
  t.dt = dt;
  for (const auto& [x, y] : pts) t.wp.emplace_back(x, y);
  return t;
}

Trajectory line_traj(const Vec2& p0, const Vec2& step, int n) {
  Trajectory t;
  for (int i = 0; i < n; ++i) t.wp.push_back(p0 + static_cast<double>(i) * step);
  return t;
}

double max_second_diff(const Trajectory& t) {
  double m = 0.0;
  for (int i = 0; i + 2 < t.size(); ++i) {
    m = std::max(m, (t.wp[i + 2] - 2.0 * t.wp[i + 1] + t.wp[i]).norm());
  }
  return m;
}

}  // namespace

TEST_CASE("multiplicative noise: identity, axis scaling, collinearity") {
  const Trajectory t = make_traj({{2.0, 4.0}, {3.0, 1.0}});
  const Trajectory same = apply_multiplicative_noise(t, {0.0, 0.0});
  CHECK(same.wp[0] == t.wp[0]);
  CHECK(same.wp[1] == t.wp[1]);

  const Trajectory scaled = apply_multiplicative_noise(t, {0.1, -0.05});
  CHECK(scaled.wp[0].x() == doctest::Approx(2.2).epsilon(1e-14));
  CHECK(scaled.wp[0].y() == doctest::Approx(3.8).epsilon(1e-14));
  CHECK(scaled.dt == t.dt);
  CHECK(scaled.size() == t.size());

  // Collinear through the origin stays collinear through the origin.
  const Trajectory ray = line_traj({0.5, 0.25}, {0.5, 0.25}, 6);
  const Trajectory ray2 = apply_multiplicative_noise(ray, {0.3, -0.2});
  for (int i = 0; i < ray2.size(); ++i) {
    CHECK(ray2.wp[i].x() * ray2.wp[0].y() - ray2.wp[i].y() * ray2.wp[0].x() == 0.0);
  }

  CHECK_THROWS_AS(apply_multiplicative_noise(t, {-1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("additive noise: zero, per-point placement, length check") {
  const Trajectory t = make_traj({{0.0, 0.0}, {1.0, 1.0}});
  const std::vector<double> zero(4, 0.0);
  const Trajectory same = apply_additive_noise(t, zero);
  CHECK(same.wp[0] == t.wp[0]);

  const std::vector<double> one{1.0, 0.0, 0.0, 0.0};
  const Trajectory moved = apply_additive_noise(t, one);
  CHECK(moved.wp[0] == Vec2(1.0, 0.0));
  CHECK(moved.wp[1] == t.wp[1]);

  const std::vector<double> bad(3, 0.0);
  CHECK_THROWS_AS(apply_additive_noise(t, bad), std::invalid_argument);
}

TEST_CASE("additive noise is jagged, multiplicative is not, at matched energy") {
  const Trajectory base = line_traj({1.0, 0.5}, {2.0, 0.8}, 8);
  const double sigma = 0.1;
  // Match expected squared perturbation energy: additive per-point std equals
  // sigma times the RMS coordinate magnitude.
  const double rms = std::sqrt(base.flat().squaredNorm() / (2.0 * base.size()));

  int additive_wins = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 7 + 3);
    MulNoise mul{rng.normal(0.0, sigma), rng.normal(0.0, sigma)};
    std::vector<double> add(2 * base.size());
    for (auto& a : add) a = rng.normal(0.0, sigma * rms);
    const double mul_jag = max_second_diff(apply_multiplicative_noise(base, mul));
    const double add_jag = max_second_diff(apply_additive_noise(base, add));
    if (add_jag > mul_jag) ++additive_wins;
  }
  CHECK(additive_wins >= 95);
}

TEST_CASE("kmeans: fixpoints and weighting invariance") {
  std::vector<Trajectory> trajs;
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    Trajectory t;
    for (int n = 0; n < 4; ++n) t.wp.emplace_back(rng.normal() * 3, rng.normal() * 3);
    trajs.push_back(t);
  }

  // n_anchor == number of distinct trajectories: anchors equal the inputs.
  AnchorSet exact = kmeans_anchors(trajs, 5, 17);
  for (const auto& t : trajs) {
    bool found = false;
    for (const auto& a : exact.anchors) {
      if (a.flat() == t.flat()) found = true;
    }
    CHECK(found);
  }

  // Duplicated dataset gives the same centers as the deduplicated one.
  std::vector<Trajectory> doubled = trajs;
  doubled.insert(doubled.end(), trajs.begin(), trajs.end());
  AnchorSet dup = kmeans_anchors(doubled, 3, 23);
  AnchorSet ded = kmeans_anchors(trajs, 3, 23);
  auto sorted_flat = [](const AnchorSet& s) {
    std::vector<Eigen::VectorXd> v;
    for (const auto& a : s.anchors) v.push_back(a.flat());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      for (int i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
      }
      return false;
    });
    return v;
  };
  const auto va = sorted_flat(dup), vb = sorted_flat(ded);
  REQUIRE(va.size() == vb.size());
  for (size_t i = 0; i < va.size(); ++i) CHECK((va[i] - vb[i]).norm() < 1e-12);

  CHECK_THROWS_AS(kmeans_anchors(trajs, 6, 1), std::invalid_argument);
  std::vector<Trajectory> dupes(4, trajs[0]);
  CHECK_THROWS_AS(kmeans_anchors(dupes, 2, 1), std::invalid_argument);
}

TEST_CASE("kmeans: two well-separated bundles against brute-force enumeration") {
  // 6 trajectories, 3 around each of two distant prototypes.
  std::vector<Trajectory> trajs;
  Rng rng(11);
  const Vec2 centers[2] = {{0.0, 0.0}, {40.0, 10.0}};
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 3; ++i) {
      Trajectory t;
      for (int n = 0; n < 3; ++n) {
        t.wp.push_back(centers[c] + Vec2(n * 2.0 + rng.normal() * 0.3, rng.normal() * 0.3));
      }
      trajs.push_back(t);
    }
  }

  const AnchorSet got = kmeans_anchors(trajs, 2, 99);

  // Brute force: try every 2-way assignment, centers at cluster means.
  double best_inertia = 1e18;
  Eigen::VectorXd best_c0, best_c1;
  for (int mask = 1; mask < 63; ++mask) {
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(6), s1 = Eigen::VectorXd::Zero(6);
    int n0 = 0, n1 = 0;
    for (int i = 0; i < 6; ++i) {
      if (mask & (1 << i)) {
        s0 += trajs[i].flat();
        ++n0;
      } else {
        s1 += trajs[i].flat();
        ++n1;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    s0 /= n0;
    s1 /= n1;
    double inertia = 0.0;
    for (int i = 0; i < 6; ++i) {
      inertia += (mask & (1 << i)) ? (trajs[i].flat() - s0).squaredNorm()
                                   : (trajs[i].flat() - s1).squaredNorm();
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_c0 = s0;
      best_c1 = s1;
    }
  }

  CHECK(kmeans_inertia(trajs, got) == doctest::Approx(best_inertia).epsilon(1e-9));
  const Eigen::VectorXd g0 = got.anchors[0].flat(), g1 = got.anchors[1].flat();
  const bool direct = (g0 - best_c0).norm() < 1e-9 && (g1 - best_c1).norm() < 1e-9;
  const bool swapped = (g0 - best_c1).norm() < 1e-9 && (g1 - best_c0).norm() < 1e-9;
  CHECK((direct || swapped));
}

TEST_CASE("kmeans: inertia never increases across iterations") {
  std::vector<Trajectory> trajs;
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    Trajectory t;
    for (int n = 0; n < 4; ++n) t.wp.emplace_back(rng.normal() * 5, rng.normal() * 5);
    trajs.push_back(t);
  }
  std::vector<double> trace;
  kmeans_anchors(trajs, 5, 3, &trace);
  REQUIRE(trace.size() >= 2);
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
}

TEST_CASE("diversity: identical, hand case, clamp, invariances") {
  const Trajectory a = make_traj({{3.0, 1.0}, {4.0, 2.0}});
  CHECK(diversity({a, a, a}) == 0.0);

  // M = 2, N_f = 1: raw = sqrt(2), scale = 1 -> clamps to 1.
  const Trajectory p1 = make_traj({{1.0, 0.0}});
  const Trajectory p2 = make_traj({{0.0, 1.0}});
  CHECK(diversity({p1, p2}, 1e-6) == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng(77);
  std::vector<Trajectory> rand_trajs;
  for (int i = 0; i < 6; ++i) {
    Trajectory t;
    for (int n = 0; n < 5; ++n) t.wp.emplace_back(rng.normal() * 4, rng.normal() * 4);
    rand_trajs.push_back(t);
  }
  const double d = diversity(rand_trajs);
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);

  // Permutation invariance.
  std::vector<Trajectory> shuffled = {rand_trajs[3], rand_trajs[0], rand_trajs[5],
                                      rand_trajs[1], rand_trajs[4], rand_trajs[2]};
  CHECK(diversity(shuffled) == doctest::Approx(d).epsilon(1e-12));

  // Ratio homogeneity at eps = 0: scaling all trajectories leaves it unchanged.
  const double d0 = diversity(rand_trajs, 0.0);
  std::vector<Trajectory> scaled = rand_trajs;
  for (auto& t : scaled) {
    for (auto& p : t.wp) p *= 7.5;
  }
  CHECK(diversity(scaled, 0.0) == doctest::Approx(d0).epsilon(1e-12));

  CHECK_THROWS_AS(diversity({a}), std::invalid_argument);
}

TEST_CASE("trajectory json round-trip is value-exact") {
  Rng rng(123);
  Trajectory t;
  t.dt = 0.5;
  for (int n = 0; n < 8; ++n) t.wp.emplace_back(rng.normal() * 12.345, rng.normal() * 3.21);
  const std::string dumped = trajectory_to_json(t).dump();
  const Trajectory back = trajectory_from_json(nlohmann::json::parse(dumped));
  CHECK(back.dt == t.dt);
  for (int n = 0; n < t.size(); ++n) CHECK(back.wp[n] == t.wp[n]);
}
