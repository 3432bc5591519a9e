#pragma once

#include <map>
#include <string>
#include <vector>

#include "planlab/grpo.hpp"
#include "planlab/scene_gen.hpp"
#include "planlab/selector.hpp"

namespace planlab {

enum class RankMode { generator_score, selector, oracle_pdms };

std::string rank_mode_name(RankMode mode);

struct EvalMetrics {
  double mean_selected_pdms = 0.0;
  double pdms_at1 = 0.0;
  double pdms_at5 = 0.0;
  double pdms_at10 = 0.0;
  double diversity = 0.0;
  double collision_rate = 0.0;
  int n_scenes = 0;
};

struct EvalReport {
  std::string label;
  RankMode rank_mode = RankMode::generator_score;
  bool diversity_defined = true;   // false when scenes had a single candidate
  bool topk_monotone = true;       // PDMS@1 >= @5 >= @10 for this run
  EvalMetrics overall;
  std::map<std::string, EvalMetrics> per_tag;
};

// Deterministic candidate generation (eta = 0, seeded initial draws; anchors
// cycled with extra seeded replicates until n_candidates), ranking by the
// requested mode, rule-based scoring, aggregation over scenes.
EvalReport evaluate(const DiffusionPolicy& policy, const Selector* selector,
                    const std::vector<Scene>& scenes, int n_candidates, int n_steps, uint64_t seed,
                    RankMode mode, const std::string& label = "model");

// Candidates for one scene, in generation order, paired with score logits.
std::vector<std::pair<Trajectory, double>> generate_candidates(const DiffusionPolicy& policy,
                                                               const Eigen::VectorXd& features,
                                                               int n_candidates, int n_steps,
                                                               uint64_t seed);

struct AblationContext {
  ILConfig il;
  RLConfig rl;
  SelectorConfig selector;
  int n_train_scenes = 96;
  int n_eval_scenes = 36;
  DatasetMix train_mix;
  DatasetMix eval_mix;
  GenOptions gen_train;
  GenOptions gen_eval;
  int n_candidates = 20;
  int n_steps = 2;
};

struct AblationRow {
  std::string variant;
  EvalReport report;   // field-wise median over seeds
};

struct AblationTable {
  std::string name;
  std::vector<AblationRow> rows;
};

// Trains paired variants under identical seeds differing only in the ablated
// switch. Valid names: noise_type, intra_anchor, inter_trunc, selector_design.
AblationTable run_ablation(const std::string& name, const AblationContext& ctx,
                           const std::vector<uint64_t>& seeds);

// Drivable area, agents with velocity arrows, expert (distinct stroke),
// candidates with opacity by rank order, collision markers. Byte-stable for
// identical inputs.
std::string render_scene_svg(const Scene& scene, const std::vector<Trajectory>& candidates,
                             const std::vector<int>& highlights);

void write_curve_csv(const std::vector<CurveRow>& rows, const std::string& path);
void write_rl_metrics_csv(const std::vector<RLMetricsRow>& rows, const std::string& path);
void write_eval_reports_csv(const std::vector<EvalReport>& reports, const std::string& path);
void write_ablation_csv(const AblationTable& table, const std::string& path);

}  // namespace planlab
