// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fob/error.hpp"
#include "fob/node.hpp"
#include "fob/sha256.hpp"
#include "fob/yaml_io.hpp"

#ifndef FOB_DEFAULTS_DIR
#define FOB_DEFAULTS_DIR "defaults"
#endif

namespace fob {

inline constexpr const char* kTopLevelKeys[] = {"task", "optimizer", "engine", "evaluation"};

/// Parsed experiment file. Leaf lists are grid axes; `optimizer` may also be a
/// list of optimizer subtrees.
struct ExperimentSpec {
  Node root = Node::map();

  const Node& task() const { return *root.find("task"); }
  const Node& optimizer() const { return *root.find("optimizer"); }
  const Node& engine() const { return *root.find("engine"); }
  const Node& evaluation() const { return *root.find("evaluation"); }
};

/// One grid point: every leaf is a scalar (except inside `evaluation`).
struct ResolvedRunConfig {
  Node root = Node::map();

  const Node& task() const { return *root.find("task"); }
  const Node& optimizer() const { return *root.find("optimizer"); }
  const Node& engine() const { return *root.find("engine"); }
  const Node& evaluation() const { return *root.find("evaluation"); }

  const Node& at(std::string_view path) const {
    const Node* n = root.at_path(path);
    if (!n) throw SchemaError("missing config key '" + std::string(path) + "'");
    return *n;
  }

  friend bool operator==(const ResolvedRunConfig& a, const ResolvedRunConfig& b) {
    return a.root == b.root;
  }
};

/// Per-name default subtrees for tasks and optimizers, plus engine and
/// evaluation defaults.
struct Defaults {
  std::map<std::string, Node> tasks;
  std::map<std::string, Node> optimizers;
  std::map<std::string, std::string> optimizer_aliases{{"adamcpr_fast", "adamcpr"}};
  Node engine = Node::map();
  Node evaluation = Node::map();
  std::string default_task = "quadratic";
  std::string default_optimizer = "adamw_baseline";

  const Node& task(const std::string& name) const {
    auto it = tasks.find(name);
    if (it == tasks.end()) throw UnknownName("unknown task '" + name + "'");
    return it->second;
  }

  /// Aliases resolve to the target's defaults with `name` kept as written.
  Node optimizer(const std::string& name) const {
    std::string target = name;
    if (auto a = optimizer_aliases.find(name); a != optimizer_aliases.end()) target = a->second;
    auto it = optimizers.find(target);
    if (it == optimizers.end()) throw UnknownName("unknown optimizer '" + name + "'");
    Node out = it->second;
    out.set("name", Node(name));
    return out;
  }

  /// Reads `<root>/tasks/<name>/default.yaml`, `<root>/optimizers/<name>/default.yaml`,
  /// `<root>/engine/default.yaml` and `<root>/evaluation/default.yaml`.
  static Defaults load(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError("defaults directory not found: " + root.string());
    Defaults d;
    auto read_dir = [&](const char* sub, std::map<std::string, Node>& into) {
      for (const auto& entry : fs::directory_iterator(root / sub)) {
        auto file = entry.path() / "default.yaml";
        if (!entry.is_directory() || !fs::exists(file)) continue;
        Node n = load_yaml_file(file.string());
        if (!n.is_map()) throw SchemaError(file.string() + ": expected a mapping");
        std::string name = entry.path().filename().string();
        if (const Node* declared = n.find("name"); declared && declared->as_string() != name)
          throw SchemaError(file.string() + ": name does not match its directory");
        if (!n.contains("name")) {
          Node::Map m{{"name", Node(name)}};
          for (auto& e : n.entries()) m.push_back(std::move(e));
          n = Node(std::move(m));
        }
        into[name] = std::move(n);
      }
    };
    read_dir("tasks", d.tasks);
    read_dir("optimizers", d.optimizers);
    if (fs::exists(root / "engine" / "default.yaml"))
      d.engine = load_yaml_file((root / "engine" / "default.yaml").string());
    if (fs::exists(root / "evaluation" / "default.yaml"))
      d.evaluation = load_yaml_file((root / "evaluation" / "default.yaml").string());
    if (d.engine.is_null()) d.engine = Node::map();
    if (d.evaluation.is_null()) d.evaluation = Node::map();
    return d;
  }
};

/// `$FOB_DEFAULTS_DIR` if set, else the directory baked in at build time.
inline std::filesystem::path defaults_dir() {
  if (const char* env = std::getenv("FOB_DEFAULTS_DIR"); env && *env) return env;
  return FOB_DEFAULTS_DIR;
}

inline const Defaults& shipped_defaults() {
  static const Defaults d = Defaults::load(defaults_dir());
  return d;
}

namespace detail {

inline void check_axis(const Node& n, const std::string& path) {
  if (n.is_list()) {
    for (const auto& item : n.items())
      if (!item.is_scalar())
        throw SchemaError("'" + path + "': grid values must be scalars");
  } else if (n.is_map()) {
    for (const auto& [k, v] : n.entries()) check_axis(v, path + "." + k);
  }
}

inline void check_name(const Node& subtree, const std::string& path) {
  const Node* name = subtree.find("name");
  if (!name) return;
  if (name->is_list()) {
    for (const auto& item : name->items())
      if (item.kind() != Node::Kind::String)
        throw SchemaError("'" + path + ".name' must be a string or list of strings");
  } else if (name->kind() != Node::Kind::String) {
    throw SchemaError("'" + path + ".name' must be a string");
  }
}

inline Node normalize_subtree(const Node* n, const std::string& key) {
  if (!n || n->is_null()) return Node::map();
  if (!n->is_map()) throw SchemaError("'" + key + "' must be a mapping");
  return *n;
}

}  // namespace detail

/// Validates the top-level structure of an experiment tree. Accepts the
/// programmatic form (an already-built tree) as well as parsed text.
inline ExperimentSpec parse_experiment(const Node& root) {
  ExperimentSpec spec;
  if (root.is_null()) {
    for (const char* key : kTopLevelKeys) spec.root.set(key, Node::map());
    return spec;
  }
  if (!root.is_map()) throw SchemaError("experiment must be a mapping");
  for (const auto& [k, v] : root.entries()) {
    bool known = false;
    for (const char* key : kTopLevelKeys) known = known || k == key;
    if (!known) throw SchemaError("unknown top-level key '" + k + "'");
  }

  Node task = detail::normalize_subtree(root.find("task"), "task");
  detail::check_name(task, "task");
  detail::check_axis(task, "task");
  spec.root.set("task", std::move(task));

  const Node* opt = root.find("optimizer");
  if (opt && opt->is_list()) {
    if (opt->items().empty()) throw EmptyList("'optimizer' list is empty");
    bool all_maps = true, any_map = false;
    for (const auto& item : opt->items()) {
      all_maps = all_maps && item.is_map();
      any_map = any_map || item.is_map();
    }
    if (!all_maps)
      throw SchemaError(any_map ? "'optimizer' list mixes subtrees and scalars"
                                : "'optimizer' list entries must be mappings");
    for (const auto& item : opt->items()) {
      detail::check_name(item, "optimizer");
      detail::check_axis(item, "optimizer");
    }
    spec.root.set("optimizer", *opt);
  } else {
    Node o = detail::normalize_subtree(opt, "optimizer");
    detail::check_name(o, "optimizer");
    detail::check_axis(o, "optimizer");
    spec.root.set("optimizer", std::move(o));
  }

  Node engine = detail::normalize_subtree(root.find("engine"), "engine");
  detail::check_axis(engine, "engine");
  spec.root.set("engine", std::move(engine));
  spec.root.set("evaluation", detail::normalize_subtree(root.find("evaluation"), "evaluation"));
  return spec;
}

inline ExperimentSpec parse_experiment(const std::string& yaml_text) {
  return parse_experiment(parse_yaml(yaml_text));
}

namespace detail {

// Experiment values win; keys only present in defaults are kept in the
// default file's order. Keys the defaults do not know are rejected.
inline Node merge_into(const Node& base, const Node& over, const std::string& path) {
  if (!over.is_map()) return over;
  Node out = base.is_map() ? base : Node::map();
  for (const auto& [k, v] : over.entries()) {
    std::string sub = path.empty() ? k : path + "." + k;
    Node* existing = out.find(k);
    if (!existing) throw SchemaError("unknown key '" + sub + "'");
    if (existing->is_map()) {
      if (!v.is_map()) throw SchemaError("'" + sub + "' must be a mapping");
      *existing = merge_into(*existing, v, sub);
    } else {
      if (v.is_map()) throw SchemaError("'" + sub + "' must be a scalar or a list of scalars");
      *existing = v;
    }
  }
  return out;
}

template <class Lookup>
void merge_named(const Node& subtree, const std::string& key, const std::string& fallback,
                 Lookup&& lookup, Node::List& out) {
  std::vector<std::string> names;
  if (const Node* name = subtree.find("name")) {
    if (name->is_list()) {
      if (name->items().empty()) throw EmptyList("'" + key + ".name' list is empty");
      for (const auto& n : name->items()) names.push_back(n.as_string(key + ".name"));
    } else {
      names.push_back(name->as_string(key + ".name"));
    }
  } else {
    names.push_back(fallback);
  }
  for (const auto& name : names) {
    Node over = subtree;
    over.set("name", Node(name));
    out.push_back(merge_into(lookup(name), over, key));
  }
}

inline Node collapse(Node::List branches) {
  if (branches.size() == 1) return std::move(branches.front());
  return Node(std::move(branches));
}

}  // namespace detail

/// Fills defaults into every task/optimizer subtree. A list-valued `name`
/// splits its subtree into one branch per name, each merged against its own
/// default file; several branches are stored as a list of subtrees.
inline ExperimentSpec merge_defaults(const ExperimentSpec& spec, const Defaults& defaults) {
  ExperimentSpec out;
  Node::List tasks;
  auto task_lookup = [&](const std::string& n) -> Node { return defaults.task(n); };
  if (spec.task().is_list()) {
    for (const auto& t : spec.task().items())
      detail::merge_named(t, "task", defaults.default_task, task_lookup, tasks);
  } else {
    detail::merge_named(spec.task(), "task", defaults.default_task, task_lookup, tasks);
  }
  out.root.set("task", detail::collapse(std::move(tasks)));

  Node::List opts;
  auto opt_lookup = [&](const std::string& n) -> Node { return defaults.optimizer(n); };
  if (spec.optimizer().is_list()) {
    for (const auto& o : spec.optimizer().items())
      detail::merge_named(o, "optimizer", defaults.default_optimizer, opt_lookup, opts);
  } else {
    detail::merge_named(spec.optimizer(), "optimizer", defaults.default_optimizer, opt_lookup,
                        opts);
  }
  out.root.set("optimizer", detail::collapse(std::move(opts)));

  out.root.set("engine", detail::merge_into(defaults.engine, spec.engine(), "engine"));
  out.root.set("evaluation",
               detail::merge_into(defaults.evaluation, spec.evaluation(), "evaluation"));
  return out;
}

namespace detail {

// All scalar resolutions of a subtree, leftmost axis slowest.
inline Node::List expand_node(const Node& n, const std::string& path) {
  if (n.is_list()) {
    if (n.items().empty()) throw EmptyList("grid axis '" + path + "' is empty");
    Node::List out;
    for (const auto& item : n.items()) {
      if (item.is_map()) {
        auto sub = expand_node(item, path);
        out.insert(out.end(), sub.begin(), sub.end());
      } else {
        out.push_back(item);
      }
    }
    return out;
  }
  if (!n.is_map()) return {n};

  std::vector<std::pair<std::string, Node::List>> axes;
  for (const auto& [k, v] : n.entries())
    axes.emplace_back(k, expand_node(v, path.empty() ? k : path + "." + k));

  Node::List out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    Node::Map m;
    m.reserve(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) m.emplace_back(axes[i].first, axes[i].second[idx[i]]);
    out.emplace_back(std::move(m));
    std::size_t i = axes.size();
    while (i > 0) {
      --i;
      if (++idx[i] < axes[i].second.size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (axes.empty()) return out;
  }
}

}  // namespace detail

/// Cartesian product of all grid axes in `task`, `optimizer` and `engine`.
/// `evaluation` is carried through unexpanded (its lists are plot settings).
inline std::vector<ResolvedRunConfig> expand_grid(const ExperimentSpec& spec) {
  Node body = Node::map();
  body.set("task", spec.task());
  body.set("optimizer", spec.optimizer());
  body.set("engine", spec.engine());
  std::vector<ResolvedRunConfig> out;
  for (auto& point : detail::expand_node(body, "")) {
    ResolvedRunConfig rc;
    rc.root = std::move(point);
    rc.root.set("evaluation", spec.evaluation());
    out.push_back(std::move(rc));
  }
  return out;
}

/// The part of a config that determines results: everything except
/// `evaluation` and output location keys.
inline Node identity_tree(const ResolvedRunConfig& config) {
  Node id = config.root;
  id.erase("evaluation");
  if (Node* engine = id.find("engine")) {
    engine->erase("output_dir");
    engine->erase("experiment_name");
    engine->erase("workers");
  }
  return id;
}

/// 16 hex characters of SHA-256 over the canonical identity serialization.
inline std::string run_id(const ResolvedRunConfig& config) {
  return sha256_hex(canonical_json(identity_tree(config))).substr(0, 16);
}

/// Identity with `task.max_epochs` removed: configs that differ only in
/// their epoch budget share this id.
inline std::string budget_free_id(const ResolvedRunConfig& config) {
  Node id = identity_tree(config);
  id.erase_path("task.max_epochs");
  return sha256_hex(canonical_json(id)).substr(0, 16);
}

inline ExperimentSpec load_experiment(const std::string& yaml_text, const Defaults& defaults) {
  return merge_defaults(parse_experiment(yaml_text), defaults);
}

/// Reads an experiment file. An empty or missing `engine.experiment_name`
/// becomes the file stem.
inline ExperimentSpec load_experiment_file(const std::filesystem::path& path,
                                           const Defaults& defaults = shipped_defaults()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read experiment file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentSpec spec = load_experiment(text.str(), defaults);
  const Node* name = spec.root.at_path("engine.experiment_name");
  if (!name || name->is_null() || (name->kind() == Node::Kind::String && name->as_string().empty()))
    spec.root.set_path("engine.experiment_name", Node(path.stem().string()));
  return spec;
}

inline ResolvedRunConfig parse_resolved(const std::string& yaml_text) {
  ResolvedRunConfig rc;
  rc.root = parse_yaml(yaml_text);
  if (!rc.root.is_map() || !rc.root.contains("task") || !rc.root.contains("optimizer") ||
      !rc.root.contains("engine"))
    throw SchemaError("not a resolved run configuration");
  if (!rc.root.contains("evaluation")) rc.root.set("evaluation", Node::map());
  return rc;
}

}  // namespace fob
