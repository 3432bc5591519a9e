// Experiment driver: dataset generation, the three training stages,
// evaluation, ablations and scene rendering. Every subcommand is seeded and
// writes its outputs into a run directory together with a config snapshot.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "planlab/config.hpp"
#include "planlab/eval.hpp"
#include "planlab/features.hpp"
#include "planlab/metrics.hpp"

namespace fs = std::filesystem;
using namespace planlab;

namespace {

LabConfig resolve_config(const std::string& config_path) {
  if (config_path.empty()) return LabConfig{};
  return load_config_file(config_path);
}

void prepare_run_dir(const fs::path& dir, const LabConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream os(dir / "config.json");
  os << config_to_json(cfg).dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planlab: anchored diffusion planning laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  std::string out_dir = "runs/default";
  app.add_option("--config", config_path, "JSON config file")->capture_default_str();
  app.add_option("--seed", seed, "global seed")->capture_default_str();
  app.add_option("--out", out_dir, "run directory")->capture_default_str();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a scene dataset (JSON lines)");
  std::string gen_out = "scenes.jsonl";
  int gen_count = -1;
  gen->add_option("--out-path", gen_out, "output JSONL path")->capture_default_str();
  gen->add_option("--count", gen_count, "scene count (overrides config)");

  // train-il
  auto* til = app.add_subcommand("train-il", "imitation pre-training (cold start)");
  std::string til_data;
  bool til_vanilla = false;
  til->add_option("--data", til_data, "training scenes JSONL")->required();
  til->add_flag("--vanilla", til_vanilla,
                "single zero anchor, untruncated 50-step schedule (baseline)");

  // train-rl
  auto* trl = app.add_subcommand("train-rl", "group-relative RL fine-tuning");
  std::string trl_data, trl_init;
  trl->add_option("--data", trl_data, "training scenes JSONL")->required();
  trl->add_option("--init", trl_init, "IL checkpoint to start from")->required();

  // train-selector
  auto* tsel = app.add_subcommand("train-selector", "train the coarse-to-fine mode selector");
  std::string tsel_data, tsel_gen;
  tsel->add_option("--data", tsel_data, "training scenes JSONL")->required();
  tsel->add_option("--generator", tsel_gen, "generator checkpoint")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a scene set");
  std::string ev_data, ev_ckpt, ev_selector, ev_label = "model";
  ev->add_option("--data", ev_data, "evaluation scenes JSONL")->required();
  ev->add_option("--checkpoint", ev_ckpt, "generator checkpoint")->required();
  ev->add_option("--selector", ev_selector, "selector checkpoint (optional)");
  ev->add_option("--label", ev_label, "report label")->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare paired ablation variants");
  std::string ab_name;
  int ab_n_seeds = 3;
  ab->add_option("--name", ab_name, "noise_type | intra_anchor | inter_trunc | selector_design")
      ->required();
  ab->add_option("--n-seeds", ab_n_seeds, "number of seeds (medians)")->capture_default_str();

  // render
  auto* rd = app.add_subcommand("render", "render a scene (plus optional candidates) to SVG");
  std::string rd_data, rd_ckpt, rd_out = "scene.svg";
  int rd_index = 0;
  rd->add_option("--data", rd_data, "scenes JSONL")->required();
  rd->add_option("--index", rd_index, "scene index")->capture_default_str();
  rd->add_option("--checkpoint", rd_ckpt, "generator checkpoint for candidates (optional)");
  rd->add_option("--svg-out", rd_out, "output SVG filename")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
  CLI11_PARSE(app, argc, argv);

  try {
    LabConfig cfg = resolve_config(config_path);
    const fs::path run(out_dir);
    prepare_run_dir(run, cfg);

    if (*gen) {
      const int count = gen_count > 0 ? gen_count : cfg.data.n_scenes;
      const auto scenes = generate_dataset(count, cfg.data.mix, seed, cfg.data.gen);
      save_scenes_jsonl(scenes, (run / gen_out).string());
      std::cout << "wrote " << scenes.size() << " scenes to " << (run / gen_out).string() << '\n';
    } else if (*til) {
      const auto scenes = load_scenes_jsonl(til_data);
      ILConfig ilc = cfg.il;
      std::optional<AnchorSet> override_anchors;
      if (til_vanilla) {
        Trajectory zero;
        zero.dt = cfg.data.gen.dt;
        zero.wp.assign(cfg.data.gen.n_f, Vec2(0.0, 0.0));
        override_anchors = AnchorSet{{zero}, {1}};
        ilc.t_trunc = 50;
        ilc.beta_lo = 0.004;
        ilc.beta_hi = 0.20;
      }
      const ILResult res = train_il(ilc, scenes, seed, override_anchors);
      save_policy_file(res.policy, (run / "il_checkpoint.txt").string());
      write_curve_csv(res.curve, (run / "il_curve.csv").string());
      std::cout << "il checkpoint: " << (run / "il_checkpoint.txt").string() << '\n';
    } else if (*trl) {
      const auto scenes = load_scenes_jsonl(trl_data);
      const DiffusionPolicy init = load_policy_file(trl_init);
      const RLResult res = train_rl(cfg.rl, scenes, init, seed);
      save_policy_file(res.policy, (run / "rl_checkpoint.txt").string());
      write_rl_metrics_csv(res.metrics, (run / "rl_metrics.csv").string());
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "rl checkpoint: " << (run / "rl_checkpoint.txt").string() << '\n';
    } else if (*tsel) {
      const auto scenes = load_scenes_jsonl(tsel_data);
      const DiffusionPolicy generator = load_policy_file(tsel_gen);
      const SelectorResult res = train_selector(cfg.selector, generator, scenes, seed);
      save_selector_file(res.selector, (run / "selector_checkpoint.txt").string());
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "selector checkpoint: " << (run / "selector_checkpoint.txt").string() << '\n';
    } else if (*ev) {
      const auto scenes = load_scenes_jsonl(ev_data);
      const DiffusionPolicy policy = load_policy_file(ev_ckpt);
      std::vector<EvalReport> reports;
      reports.push_back(evaluate(policy, nullptr, scenes, cfg.eval.n_candidates, cfg.eval.n_steps,
                                 seed, RankMode::generator_score, ev_label + "[gen-ranked]"));
      if (!ev_selector.empty()) {
        const Selector sel = load_selector_file(ev_selector);
        reports.push_back(evaluate(policy, &sel, scenes, cfg.eval.n_candidates, cfg.eval.n_steps,
                                   seed, RankMode::selector, ev_label + "[selector-ranked]"));
      }
      write_eval_reports_csv(reports, (run / "eval.csv").string());
      for (const auto& rep : reports) {
        std::cout << rep.label << ": selected_pdms=" << rep.overall.mean_selected_pdms
                  << " pdms@10=" << rep.overall.pdms_at10 << " div=" << rep.overall.diversity
                  << " collision_rate=" << rep.overall.collision_rate << '\n';
      }
    } else if (*ab) {
      AblationContext ctx;
      ctx.il = cfg.il;
      ctx.rl = cfg.rl;
      ctx.selector = cfg.selector;
      ctx.n_train_scenes = cfg.data.n_scenes;
      ctx.n_eval_scenes = std::max(12, cfg.data.n_scenes / 4);
      ctx.train_mix = cfg.data.mix;
      ctx.eval_mix = cfg.data.mix;
      ctx.gen_train = cfg.data.gen;
      ctx.gen_eval = cfg.data.gen;
      ctx.gen_eval.adversarial = true;
      ctx.n_candidates = cfg.eval.n_candidates;
      ctx.n_steps = cfg.eval.n_steps;
      std::vector<uint64_t> seeds;
      for (int s = 0; s < ab_n_seeds; ++s) seeds.push_back(seed + s);
      const AblationTable table = run_ablation(ab_name, ctx, seeds);
      write_ablation_csv(table, (run / ("ablation_" + ab_name + ".csv")).string());
      for (const auto& row : table.rows) {
        std::cout << table.name << '/' << row.variant
                  << ": selected_pdms=" << row.report.overall.mean_selected_pdms
                  << " div=" << row.report.overall.diversity
                  << " collision_rate=" << row.report.overall.collision_rate << '\n';
      }
    } else if (*rd) {
      const auto scenes = load_scenes_jsonl(rd_data);
      if (rd_index < 0 || rd_index >= static_cast<int>(scenes.size())) {
        throw std::invalid_argument("render: scene index out of range");
      }
      const Scene& scene = scenes[rd_index];
      std::vector<Trajectory> candidates;
      if (!rd_ckpt.empty()) {
        const DiffusionPolicy policy = load_policy_file(rd_ckpt);
        const auto cands = generate_candidates(policy, scene_features(scene),
                                               cfg.eval.n_candidates, cfg.eval.n_steps, seed);
        for (const auto& [traj, logit] : cands) candidates.push_back(traj);
      }
      write_text(run / rd_out, render_scene_svg(scene, candidates, {}));
      std::cout << "wrote " << (run / rd_out).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
