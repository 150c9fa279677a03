// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fob/config.hpp"
#include "fob/engine/engine.hpp"
#include "fob/hpo/run_hpo.hpp"

namespace fob {

/// Contents of an `hpo.yaml` file:
///
///   experiment: base.yaml        # path relative to this file, or a mapping
///   space: adamw_baseline        # preset name, or path -> distribution map
///   n_trials: 10
///   init_fraction: 0.1
///   R: 27                        # optional, defaults to task.max_epochs
///   eta: 3
///   seed: 0
///   retrain_seeds: [1, 2, 3]     # optional
///   workdir: outputs/my_hpo      # optional
struct HpoFile {
  ResolvedRunConfig base;
  HpoSettings settings;
  std::vector<std::int64_t> retrain_seeds;
  std::filesystem::path workdir;
};

inline HpoFile load_hpo_file(const std::filesystem::path& path,
                             const Defaults& defaults = shipped_defaults()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read hpo file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  const Node root = parse_yaml(text.str());
  if (!root.is_map()) throw SchemaError("hpo file must be a mapping");

  HpoFile f;
  const Node* experiment = root.find("experiment");
  if (!experiment) throw SchemaError("hpo file needs an 'experiment' entry");
  ExperimentSpec spec;
  if (experiment->kind() == Node::Kind::String) {
    spec = load_experiment_file(path.parent_path() / experiment->as_string(), defaults);
  } else {
    spec = merge_defaults(parse_experiment(*experiment), defaults);
    const Node* name = spec.root.at_path("engine.experiment_name");
    if (!name || name->as_string().empty())
      spec.root.set_path("engine.experiment_name", Node(path.stem().string()));
  }
  auto runs = expand_grid(spec);
  if (runs.size() != 1)
    throw BadParameter("the hpo base experiment must describe a single run, got " +
                       std::to_string(runs.size()));
  f.base = runs[0];
  validate_run(f.base);

  for (const auto& [k, v] : root.entries()) {
    if (k == "experiment") continue;
    if (k == "space") {
      f.settings.space = v.kind() == Node::Kind::String ? preset_space(v.as_string())
                                                        : parse_search_space(v);
    } else if (k == "n_trials") {
      f.settings.n_trials = v.as_int("n_trials");
    } else if (k == "init_fraction") {
      f.settings.init_fraction = v.as_double("init_fraction");
    } else if (k == "R") {
      f.settings.R = v.as_int("R");
      if (f.settings.R < 1) throw BadParameter("R must be >= 1");
    } else if (k == "eta") {
      f.settings.eta = v.as_int("eta");
    } else if (k == "seed") {
      f.settings.seed = static_cast<std::uint64_t>(v.as_int("seed"));
    } else if (k == "retrain_seeds") {
      if (!v.is_list()) throw SchemaError("retrain_seeds must be a list");
      for (const auto& s : v.items()) f.retrain_seeds.push_back(s.as_int("retrain_seeds"));
    } else if (k == "workdir") {
      f.workdir = v.as_string("workdir");
    } else {
      throw SchemaError("unknown hpo key '" + k + "'");
    }
  }
  if (!root.contains("space")) throw SchemaError("hpo file needs a 'space' entry");
  if (f.workdir.empty())
    f.workdir = run_directory(f.base).parent_path().parent_path() / "hpo";
  return f;
}

}  // namespace fob
