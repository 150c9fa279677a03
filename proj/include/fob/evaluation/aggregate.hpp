// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fob/config.hpp"
#include "fob/engine/engine.hpp"
#include "fob/error.hpp"

namespace fob {

/// One finished run together with the config that produced it.
struct ResultEntry {
  ResolvedRunConfig config;
  RunResult result;
};

/// Ordered (dotted path, scalar) pairs; sorted by path.
using GroupKey = std::vector<std::pair<std::string, Node>>;

struct AggregateCell {
  GroupKey group_key;
  std::int64_t n = 0;
  double mean_best = 0, std_best = 0;
  double mean_last = 0, std_last = 0;
  MetricSpec metric;

  const Node* key(std::string_view path) const {
    for (const auto& [k, v] : group_key)
      if (k == path) return &v;
    return nullptr;
  }

  friend bool operator==(const AggregateCell&, const AggregateCell&) = default;
};

/// Total order on scalars: numbers by value, then other kinds by text.
inline std::strong_ordering compare_scalar(const Node& a, const Node& b) {
  if (a.is_number() && b.is_number()) {
    const double x = a.as_double(), y = b.as_double();
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  if (a.is_number() != b.is_number())
    return a.is_number() ? std::strong_ordering::less : std::strong_ordering::greater;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  return scalar_text(a) <=> scalar_text(b);
}

inline bool group_key_less(const GroupKey& a, const GroupKey& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].first != b[i].first) return a[i].first < b[i].first;
    if (auto c = compare_scalar(a[i].second, b[i].second); c != 0) return c < 0;
  }
  return a.size() < b.size();
}

inline GroupKey group_key_of(const ResolvedRunConfig& config) {
  Node id = identity_tree(config);
  id.erase_path("engine.seed");
  GroupKey key;
  flatten(id, key);
  std::sort(key.begin(), key.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return key;
}

/// Sample standard deviation; 0 for a single value.
inline double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Groups completed runs by identity minus `engine.seed`. Runs that are not
/// completed are skipped. Cells come back sorted by group key.
inline std::vector<AggregateCell> aggregate(const std::vector<ResultEntry>& entries) {
  struct Acc {
    GroupKey key;
    MetricSpec metric;
    std::vector<double> best, last;
  };
  std::map<std::string, Acc> groups;
  for (const auto& e : entries) {
    if (e.result.status != RunStatus::completed || !e.result.test_best || !e.result.test_last)
      continue;
    GroupKey key = group_key_of(e.config);
    Node tree = Node::map();
    for (const auto& [k, v] : key) tree.set(k, v);
    auto [it, fresh] = groups.try_emplace(canonical_json(tree));
    Acc& acc = it->second;
    if (fresh) {
      acc.key = std::move(key);
      acc.metric = e.result.metric;
    } else if (acc.metric.direction != e.result.metric.direction ||
               acc.metric.kind != e.result.metric.kind) {
      throw MixedTasks("runs in one group report different metrics");
    }
    acc.best.push_back(*e.result.test_best);
    acc.last.push_back(*e.result.test_last);
  }
  std::vector<AggregateCell> cells;
  for (auto& [_, acc] : groups) {
    AggregateCell c;
    c.group_key = std::move(acc.key);
    c.n = static_cast<std::int64_t>(acc.best.size());
    c.mean_best = mean_of(acc.best);
    c.std_best = sample_std(acc.best, c.mean_best);
    c.mean_last = mean_of(acc.last);
    c.std_last = sample_std(acc.last, c.mean_last);
    c.metric = acc.metric;
    cells.push_back(std::move(c));
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return group_key_less(a.group_key, b.group_key); });
  return cells;
}

/// The metric shared by all cells; MixedTasks when directions disagree.
inline MetricSpec common_metric(const std::vector<AggregateCell>& cells) {
  if (cells.empty()) throw EmptyGrid("no cells");
  for (const auto& c : cells)
    if (c.metric.direction != cells.front().metric.direction)
      throw MixedTasks("cells mix maximized and minimized metrics");
  return cells.front().metric;
}

// ---- export ---------------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string cells_to_csv(const std::vector<AggregateCell>& cells) {
  std::set<std::string> paths;
  for (const auto& c : cells)
    for (const auto& [k, _] : c.group_key) paths.insert(k);
  std::string out;
  for (const auto& p : paths) out += csv_field(p) + ",";
  out += "n,mean_best,std_best,mean_last,std_last\n";
  for (const auto& c : cells) {
    for (const auto& p : paths) {
      if (const Node* v = c.key(p)) out += csv_field(scalar_text(*v));
      out += ",";
    }
    out += std::to_string(c.n) + "," + format_double(c.mean_best) + "," +
           format_double(c.std_best) + "," + format_double(c.mean_last) + "," +
           format_double(c.std_last) + "\n";
  }
  return out;
}

namespace detail {

inline nlohmann::json node_to_json(const Node& n) {
  switch (n.kind()) {
    case Node::Kind::Null: return nullptr;
    case Node::Kind::Bool: return n.as_bool();
    case Node::Kind::Int: return n.as_int();
    case Node::Kind::Float: return n.as_double();
    case Node::Kind::String: return n.as_string();
    default: throw SchemaError("group key values must be scalars");
  }
}

inline Node node_from_json(const nlohmann::json& j) {
  if (j.is_null()) return Node();
  if (j.is_boolean()) return Node(j.get<bool>());
  if (j.is_number_integer()) return Node(j.get<std::int64_t>());
  if (j.is_number_float()) return Node(j.get<double>());
  if (j.is_string()) return Node(j.get<std::string>());
  throw SchemaError("group key values must be scalars");
}

}  // namespace detail

inline nlohmann::json cells_to_json(const std::vector<AggregateCell>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json key = nlohmann::json::object();
    for (const auto& [k, v] : c.group_key) key[k] = detail::node_to_json(v);
    arr.push_back({{"group_key", key},
                   {"n", c.n},
                   {"mean_best", c.mean_best},
                   {"std_best", c.std_best},
                   {"mean_last", c.mean_last},
                   {"std_last", c.std_last},
                   {"metric", {{"kind", to_string(c.metric.kind)},
                               {"direction", to_string(c.metric.direction)}}}});
  }
  return arr;
}

inline std::vector<AggregateCell> cells_from_json(const nlohmann::json& j) {
  std::vector<AggregateCell> cells;
  try {
    for (const auto& item : j) {
      AggregateCell c;
      for (const auto& [k, v] : item.at("group_key").items())
        c.group_key.emplace_back(k, detail::node_from_json(v));
      c.n = item.at("n").get<std::int64_t>();
      c.mean_best = item.at("mean_best").get<double>();
      c.std_best = item.at("std_best").get<double>();
      c.mean_last = item.at("mean_last").get<double>();
      c.std_last = item.at("std_last").get<double>();
      c.metric.kind = metric_kind_from(item.at("metric").at("kind").get<std::string>());
      c.metric.direction = item.at("metric").at("direction").get<std::string>() == "maximize"
                               ? Direction::maximize
                               : Direction::minimize;
      cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed aggregate table: ") + e.what());
  }
  return cells;
}

/// Writes the table as `csv` or `json`.
inline void export_table(const std::vector<AggregateCell>& cells, const std::string& format,
                         const std::filesystem::path& path) {
  if (cells.empty()) throw EmptyGrid("nothing to export");
  std::string text;
  if (format == "csv")
    text = cells_to_csv(cells);
  else if (format == "json")
    text = cells_to_json(cells).dump(2) + "\n";
  else
    throw BadParameter("unknown table format '" + format + "'");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  write_file_atomic(path, text);
}

}  // namespace fob
