#pragma once

#include <string>

#include "planlab/eval.hpp"
#include "planlab/scene_gen.hpp"

namespace planlab {

// Whole-pipeline configuration, loadable from a JSON file. Every field has a
// default; unknown keys are rejected to catch typos.
struct LabConfig {
  struct Data {
    int n_scenes = 240;
    DatasetMix mix;
    GenOptions gen;
  } data;

  ILConfig il;
  RLConfig rl;
  SelectorConfig selector;

  struct Eval {
    int n_candidates = 20;
    int n_steps = 2;
  } eval;
};

LabConfig load_config_file(const std::string& path);
LabConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const LabConfig& cfg);

}  // namespace planlab
