#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "planlab/features.hpp"
#include "planlab/il.hpp"
#include "planlab/metrics.hpp"
#include "planlab/scene_gen.hpp"
#include "planlab/selector.hpp"

using namespace planlab;

namespace {

Selector random_selector(uint64_t seed, int feat_dim = 4, int n_f = 3) {
  Selector sel;
  sel.feat_dim = feat_dim;
  sel.n_f = n_f;
  sel.scale_x = 10.0;
  sel.scale_y = 5.0;
  sel.coarse = DenseNet::make({feat_dim + 2 * n_f, 12, 1}, seed);
  sel.fine = DenseNet::make({feat_dim + 2 * n_f, 12, 1}, seed ^ 0xabc);
  return sel;
}

std::vector<Trajectory> random_candidates(int m, int n_f, uint64_t seed) {
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (int i = 0; i < m; ++i) {
    Trajectory t;
    t.dt = 0.5;
    for (int n = 0; n < n_f; ++n) t.wp.emplace_back(rng.normal() * 5, rng.normal() * 2);
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("rank_loss: hand-evaluated cases") {
  CHECK(rank_loss(std::vector<double>{0.9, 0.1}, std::vector<double>{1.0, 0.5}, 0.2) == 0.0);
  CHECK(rank_loss(std::vector<double>{0.3, 0.25}, std::vector<double>{1.0, 0.5}, 0.2) ==
        doctest::Approx(0.15).epsilon(1e-12));
  // Constant predictions: every distinct-quality pair contributes the margin.
  CHECK(rank_loss(std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{0.9, 0.5, 0.1}, 0.07) ==
        doctest::Approx(0.07).epsilon(1e-12));
  // All-tied ground truth: no pairs, zero loss.
  CHECK(rank_loss(std::vector<double>{0.1, 0.9}, std::vector<double>{0.5, 0.5}, 0.2) == 0.0);
  CHECK(rank_loss(std::vector<double>{}, std::vector<double>{}, 0.2) == 0.0);
}

TEST_CASE("rank_loss: non-negative; zero iff pairs ordered with gap > margin") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> pred(5), gt(5);
    for (auto& x : pred) x = rng.normal();
    for (auto& x : gt) x = rng.uniform();
    const double loss = rank_loss(pred, gt, 0.05);
    CHECK(loss >= 0.0);
    bool all_separated = true;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i == j || gt[i] == gt[j]) continue;
        const double sign = gt[i] > gt[j] ? 1.0 : -1.0;
        if (sign * (pred[i] - pred[j]) <= 0.05) all_separated = false;
      }
    }
    CHECK((loss == 0.0) == all_separated);
  }
}

TEST_CASE("select: k = M equals fine-only argmax; M = 1 trivial") {
  const Selector sel = random_selector(3);
  Rng rng(5);
  Eigen::VectorXd f(4);
  for (int i = 0; i < 4; ++i) f[i] = rng.normal();
  const auto cands = random_candidates(6, 3, 9);

  const SelectResult res = select(sel, f, cands, 6);
  int fine_best = 0;
  for (int i = 1; i < 6; ++i) {
    if (sel.fine.forward(sel.encode(f, cands[i]))[0] >
        sel.fine.forward(sel.encode(f, cands[fine_best]))[0]) {
      fine_best = i;
    }
  }
  CHECK(res.best == fine_best);

  const auto single = select(sel, f, {cands[2]}, 1);
  CHECK(single.best == 0);

  CHECK_THROWS_AS(select(sel, f, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(select(sel, f, cands, 7), std::invalid_argument);
}

TEST_CASE("select: permutation of candidates maps the selection") {
  const Selector sel = random_selector(7);
  Rng rng(11);
  Eigen::VectorXd f(4);
  for (int i = 0; i < 4; ++i) f[i] = rng.normal();
  const auto cands = random_candidates(7, 3, 13);
  const SelectResult base = select(sel, f, cands, 4);

  std::vector<int> perm = {4, 2, 6, 0, 3, 5, 1};
  std::vector<Trajectory> shuffled;
  for (int idx : perm) shuffled.push_back(cands[idx]);
  const SelectResult after = select(sel, f, shuffled, 4);
  CHECK(perm[after.best] == base.best);
}

TEST_CASE("rank_candidates: shortlist ordered by fine, remainder by coarse") {
  const Selector sel = random_selector(15);
  Rng rng(17);
  Eigen::VectorXd f(4);
  for (int i = 0; i < 4; ++i) f[i] = rng.normal();
  const auto cands = random_candidates(8, 3, 19);
  const auto order = rank_candidates(sel, f, cands);
  REQUIRE(order.size() == cands.size());

  const int k = (8 + 1) / 2;
  const SelectResult res = select(sel, f, cands, k);
  CHECK(order.front() == res.best);
  // The first k ranked entries are exactly the fine-evaluated shortlist.
  for (int i = 0; i < k; ++i) CHECK(std::isfinite(res.fine_scores[order[i]]));
  for (size_t i = k; i < order.size(); ++i) CHECK(!std::isfinite(res.fine_scores[order[i]]));
}

TEST_CASE("train_selector: candidate pool has 2 augmented copies per candidate") {
  std::vector<Scene> scenes;
  for (uint64_t s = 0; s < 6; ++s) scenes.push_back(generate_scene(SceneTag::straight, s));
  ILConfig ilc;
  ilc.epochs = 2;
  ilc.n_anchor = 4;
  const ILResult il = train_il(ilc, scenes, 3);

  SelectorConfig cfg;
  cfg.epochs = 1;
  const auto pool = build_selector_candidates(cfg, il.policy, scenes[0], 1234);
  CHECK(static_cast<int>(pool.size()) ==
        il.policy.anchors.size() * (1 + cfg.n_aug));
}

TEST_CASE("train_selector: seeded rerun produces identical checkpoints") {
  std::vector<Scene> scenes;
  for (uint64_t s = 0; s < 8; ++s) scenes.push_back(generate_scene(SceneTag::straight, s + 5));
  ILConfig ilc;
  ilc.epochs = 3;
  ilc.n_anchor = 4;
  const ILResult il = train_il(ilc, scenes, 3);
  SelectorConfig cfg;
  cfg.epochs = 2;
  const SelectorResult a = train_selector(cfg, il.policy, scenes, 7);
  const SelectorResult b = train_selector(cfg, il.policy, scenes, 7);
  const std::string pa = "/tmp/planlab_sel_a.txt", pb = "/tmp/planlab_sel_b.txt";
  save_selector_file(a.selector, pa);
  save_selector_file(b.selector, pb);
  std::ifstream fa(pa), fb(pb);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("train_selector: overfitting one scene selects the argmax-PDMS candidate") {
  const Scene scene = generate_scene(SceneTag::straight, 101);
  std::vector<Scene> il_scenes = {scene, generate_scene(SceneTag::turn, 102),
                                  generate_scene(SceneTag::multi_modal, 103),
                                  generate_scene(SceneTag::straight, 104)};
  ILConfig ilc;
  ilc.epochs = 30;
  ilc.lr = 2e-3;
  ilc.n_anchor = 4;
  const ILResult il = train_il(ilc, il_scenes, 3);

  SelectorConfig cfg;
  cfg.epochs = 250;
  cfg.lr = 2e-3;
  cfg.batch_size = 1;
  const SelectorResult sr = train_selector(cfg, il.policy, {scene}, 9);

  const auto pool = build_selector_candidates(cfg, il.policy, scene, 9);
  std::vector<double> pdms;
  for (const auto& cand : pool) pdms.push_back(score_submetrics(scene, cand).pdms);
  const int oracle =
      static_cast<int>(std::max_element(pdms.begin(), pdms.end()) - pdms.begin());

  const Eigen::VectorXd f = scene_features(scene);
  const int k = (static_cast<int>(pool.size()) + 1) / 2;
  const SelectResult res = select(sr.selector, f, pool, k);
  // Ties within 1e-6 of the max count as correct.
  CHECK(pdms[res.best] >= pdms[oracle] - 1e-6);
}

TEST_CASE("selector checkpoint: header carries margin and k; round trip exact") {
  Selector sel = random_selector(21);
  sel.margin = 0.07;
  sel.top_k = 5;
  sel.two_stage = false;
  const std::string path = "/tmp/planlab_sel_rt.txt";
  save_selector_file(sel, path);
  const Selector back = load_selector_file(path);
  CHECK(back.margin == 0.07);
  CHECK(back.top_k == 5);
  CHECK(back.two_stage == false);
  CHECK(back.scale_x == sel.scale_x);
  Rng rng(3);
  Eigen::VectorXd f(4);
  for (int i = 0; i < 4; ++i) f[i] = rng.normal();
  const auto cands = random_candidates(3, 3, 33);
  CHECK(back.coarse.forward(back.encode(f, cands[0]))[0] ==
        sel.coarse.forward(sel.encode(f, cands[0]))[0]);
}
