#include "planlab/config.hpp"

#include <fstream>
#include <stdexcept>

namespace planlab {

namespace {

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& section) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) ok = true;
    }
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in " + section);
  }
}

ExploreNoise noise_from_name(const std::string& name) {
  if (name == "multiplicative") return ExploreNoise::multiplicative;
  if (name == "additive") return ExploreNoise::additive;
  throw std::invalid_argument("config: unknown noise_type '" + name + "'");
}

}  // namespace

LabConfig config_from_json(const nlohmann::json& j) {
  LabConfig cfg;
  check_keys(j, {"data", "il", "rl", "selector", "eval"}, "root");

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"n_scenes", "mix", "agent_prob", "adversarial", "n_f", "dt"}, "data");
    get_if(d, "n_scenes", &cfg.data.n_scenes);
    if (d.contains("mix")) {
      const auto& m = d.at("mix");
      check_keys(m, {"straight", "turn", "multi_modal"}, "data.mix");
      get_if(m, "straight", &cfg.data.mix.straight);
      get_if(m, "turn", &cfg.data.mix.turn);
      get_if(m, "multi_modal", &cfg.data.mix.multi_modal);
    }
    get_if(d, "agent_prob", &cfg.data.gen.agent_prob);
    get_if(d, "adversarial", &cfg.data.gen.adversarial);
    get_if(d, "n_f", &cfg.data.gen.n_f);
    get_if(d, "dt", &cfg.data.gen.dt);
  }

  if (j.contains("il")) {
    const auto& i = j.at("il");
    check_keys(i,
               {"epochs", "batch_size", "lr", "weight_decay", "warmup_ratio", "hidden_dims",
                "n_anchor", "t_trunc", "beta_lo", "beta_hi"},
               "il");
    get_if(i, "epochs", &cfg.il.epochs);
    get_if(i, "batch_size", &cfg.il.batch_size);
    get_if(i, "lr", &cfg.il.lr);
    get_if(i, "weight_decay", &cfg.il.weight_decay);
    get_if(i, "warmup_ratio", &cfg.il.warmup_ratio);
    get_if(i, "hidden_dims", &cfg.il.hidden_dims);
    get_if(i, "n_anchor", &cfg.il.n_anchor);
    get_if(i, "t_trunc", &cfg.il.t_trunc);
    get_if(i, "beta_lo", &cfg.il.beta_lo);
    get_if(i, "beta_hi", &cfg.il.beta_hi);
  }

  if (j.contains("rl")) {
    const auto& r = j.at("rl");
    check_keys(r,
               {"group_size", "gamma", "lambda_il", "eps_stab", "epochs", "batch_size", "lr",
                "weight_decay", "warmup_ratio", "explore_floor", "loglik_floor", "mul_noise_std",
                "intra_anchor", "inter_trunc", "noise_type"},
               "rl");
    get_if(r, "group_size", &cfg.rl.group_size);
    get_if(r, "gamma", &cfg.rl.gamma);
    get_if(r, "lambda_il", &cfg.rl.lambda_il);
    get_if(r, "eps_stab", &cfg.rl.eps_stab);
    get_if(r, "epochs", &cfg.rl.epochs);
    get_if(r, "batch_size", &cfg.rl.batch_size);
    get_if(r, "lr", &cfg.rl.lr);
    get_if(r, "weight_decay", &cfg.rl.weight_decay);
    get_if(r, "warmup_ratio", &cfg.rl.warmup_ratio);
    get_if(r, "explore_floor", &cfg.rl.explore_floor);
    get_if(r, "loglik_floor", &cfg.rl.loglik_floor);
    get_if(r, "mul_noise_std", &cfg.rl.mul_noise_std);
    get_if(r, "intra_anchor", &cfg.rl.intra_anchor);
    get_if(r, "inter_trunc", &cfg.rl.inter_trunc);
    if (r.contains("noise_type")) {
      cfg.rl.noise_type = noise_from_name(r.at("noise_type").get<std::string>());
    }
  }

  if (j.contains("selector")) {
    const auto& s = j.at("selector");
    check_keys(s,
               {"epochs", "batch_size", "lr", "weight_decay", "warmup_ratio", "hidden_dims",
                "margin", "top_k", "n_aug", "aug_std_lo", "aug_std_hi", "infer_steps", "two_stage",
                "use_rank"},
               "selector");
    get_if(s, "epochs", &cfg.selector.epochs);
    get_if(s, "batch_size", &cfg.selector.batch_size);
    get_if(s, "lr", &cfg.selector.lr);
    get_if(s, "weight_decay", &cfg.selector.weight_decay);
    get_if(s, "warmup_ratio", &cfg.selector.warmup_ratio);
    get_if(s, "hidden_dims", &cfg.selector.hidden_dims);
    get_if(s, "margin", &cfg.selector.margin);
    get_if(s, "top_k", &cfg.selector.top_k);
    get_if(s, "n_aug", &cfg.selector.n_aug);
    get_if(s, "aug_std_lo", &cfg.selector.aug_std_lo);
    get_if(s, "aug_std_hi", &cfg.selector.aug_std_hi);
    get_if(s, "infer_steps", &cfg.selector.infer_steps);
    get_if(s, "two_stage", &cfg.selector.two_stage);
    get_if(s, "use_rank", &cfg.selector.use_rank);
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, {"n_candidates", "n_steps"}, "eval");
    get_if(e, "n_candidates", &cfg.eval.n_candidates);
    get_if(e, "n_steps", &cfg.eval.n_steps);
  }

  // Keep the generator's sampling geometry in sync with the data settings.
  cfg.il.policy.n_f = cfg.data.gen.n_f;
  cfg.il.policy.dt = cfg.data.gen.dt;
  cfg.il.policy.explore_floor = cfg.rl.explore_floor;
  cfg.il.policy.loglik_floor = cfg.rl.loglik_floor;
  cfg.il.policy.mul_noise_std = cfg.rl.mul_noise_std;
  return cfg;
}

LabConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  is >> j;
  return config_from_json(j);
}

nlohmann::json config_to_json(const LabConfig& cfg) {
  nlohmann::json j;
  j["data"] = {{"n_scenes", cfg.data.n_scenes},
               {"mix",
                {{"straight", cfg.data.mix.straight},
                 {"turn", cfg.data.mix.turn},
                 {"multi_modal", cfg.data.mix.multi_modal}}},
               {"agent_prob", cfg.data.gen.agent_prob},
               {"adversarial", cfg.data.gen.adversarial},
               {"n_f", cfg.data.gen.n_f},
               {"dt", cfg.data.gen.dt}};
  j["il"] = {{"epochs", cfg.il.epochs},
             {"batch_size", cfg.il.batch_size},
             {"lr", cfg.il.lr},
             {"weight_decay", cfg.il.weight_decay},
             {"warmup_ratio", cfg.il.warmup_ratio},
             {"hidden_dims", cfg.il.hidden_dims},
             {"n_anchor", cfg.il.n_anchor},
             {"t_trunc", cfg.il.t_trunc},
             {"beta_lo", cfg.il.beta_lo},
             {"beta_hi", cfg.il.beta_hi}};
  j["rl"] = {{"group_size", cfg.rl.group_size},
             {"gamma", cfg.rl.gamma},
             {"lambda_il", cfg.rl.lambda_il},
             {"eps_stab", cfg.rl.eps_stab},
             {"epochs", cfg.rl.epochs},
             {"batch_size", cfg.rl.batch_size},
             {"lr", cfg.rl.lr},
             {"weight_decay", cfg.rl.weight_decay},
             {"warmup_ratio", cfg.rl.warmup_ratio},
             {"explore_floor", cfg.rl.explore_floor},
             {"loglik_floor", cfg.rl.loglik_floor},
             {"mul_noise_std", cfg.rl.mul_noise_std},
             {"intra_anchor", cfg.rl.intra_anchor},
             {"inter_trunc", cfg.rl.inter_trunc},
             {"noise_type",
              cfg.rl.noise_type == ExploreNoise::multiplicative ? "multiplicative" : "additive"}};
  j["selector"] = {{"epochs", cfg.selector.epochs},
                   {"batch_size", cfg.selector.batch_size},
                   {"lr", cfg.selector.lr},
                   {"weight_decay", cfg.selector.weight_decay},
                   {"warmup_ratio", cfg.selector.warmup_ratio},
                   {"hidden_dims", cfg.selector.hidden_dims},
                   {"margin", cfg.selector.margin},
                   {"top_k", cfg.selector.top_k},
                   {"n_aug", cfg.selector.n_aug},
                   {"aug_std_lo", cfg.selector.aug_std_lo},
                   {"aug_std_hi", cfg.selector.aug_std_hi},
                   {"infer_steps", cfg.selector.infer_steps},
                   {"two_stage", cfg.selector.two_stage},
                   {"use_rank", cfg.selector.use_rank}};
  j["eval"] = {{"n_candidates", cfg.eval.n_candidates}, {"n_steps", cfg.eval.n_steps}};
  return j;
}

}  // namespace planlab
