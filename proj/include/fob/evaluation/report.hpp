// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fob/evaluation/aggregate.hpp"
#include "fob/evaluation/heatmap.hpp"

namespace fob {

inline constexpr const char* kOutputTypes[] = {"svg", "csv"};

struct PlotSettings {
  std::vector<std::string> output_types{"svg", "csv"};
  std::vector<std::string> x_axis;
  std::string y_axis = "optimizer.learning_rate";
  std::vector<HeatmapValue> values{HeatmapValue::best, HeatmapValue::last};
};

namespace detail {

inline std::vector<std::string> string_or_list(const Node& n, const std::string& what) {
  std::vector<std::string> out;
  if (n.is_list()) {
    for (const auto& item : n.items()) out.push_back(item.as_string(what));
  } else if (!n.is_null()) {
    out.push_back(n.as_string(what));
  }
  return out;
}

}  // namespace detail

/// Reads and checks an `evaluation` subtree.
inline PlotSettings plot_settings(const Node& evaluation) {
  PlotSettings s;
  if (evaluation.is_null()) return s;
  if (!evaluation.is_map()) throw SchemaError("evaluation must be a mapping");
  for (const auto& [k, v] : evaluation.entries()) {
    if (k == "output_types") {
      s.output_types = detail::string_or_list(v, "evaluation.output_types");
      for (const auto& t : s.output_types)
        if (t != kOutputTypes[0] && t != kOutputTypes[1])
          throw BadParameter("unsupported output type '" + t + "' (supported: svg, csv)");
    } else if (k == "plot") {
      if (!v.is_map()) throw SchemaError("evaluation.plot must be a mapping");
      for (const auto& [pk, pv] : v.entries()) {
        if (pk == "x_axis") {
          s.x_axis = detail::string_or_list(pv, "evaluation.plot.x_axis");
        } else if (pk == "y_axis") {
          s.y_axis = pv.as_string("evaluation.plot.y_axis");
        } else if (pk == "value") {
          s.values.clear();
          for (const auto& name : detail::string_or_list(pv, "evaluation.plot.value"))
            s.values.push_back(heatmap_value_from(name));
        } else {
          throw SchemaError("unknown key evaluation.plot." + pk);
        }
      }
    } else {
      throw SchemaError("unknown key evaluation." + k);
    }
  }
  return s;
}

/// Loads every run under `<experiment_dir>/runs` that has a result file,
/// in directory-name order.
inline std::vector<ResultEntry> collect_results(const std::filesystem::path& experiment_dir) {
  std::vector<ResultEntry> out;
  const auto runs = experiment_dir / "runs";
  if (!std::filesystem::is_directory(runs)) return out;
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(runs))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    RunPaths paths{d};
    auto result = load_result(paths.result());
    if (!result || !std::filesystem::exists(paths.config())) continue;
    out.push_back({parse_resolved(read_file(paths.config())), *result});
  }
  return out;
}

/// Loads the stored results of the given runs; runs without results are skipped.
inline std::vector<ResultEntry> collect_results(const std::vector<ResolvedRunConfig>& runs) {
  std::vector<ResultEntry> out;
  for (const auto& rc : runs)
    if (auto r = load_result(RunPaths{run_directory(rc)}.result())) out.push_back({rc, *r});
  return out;
}

struct PlotReport {
  std::vector<AggregateCell> cells;
  std::vector<std::filesystem::path> written;
};

inline std::string plot_file_stem(const std::string& optimizer, const std::string& x_key,
                                  HeatmapValue value) {
  return optimizer + "__" + x_key + "__" + to_string(value);
}

/// Writes `<experiment_dir>/aggregated.csv` and, under `plots/`, one
/// heatmap per optimizer name, x-axis key and value kind.
inline PlotReport write_report(const std::vector<ResultEntry>& entries,
                               const PlotSettings& settings,
                               const std::filesystem::path& experiment_dir) {
  PlotReport report;
  report.cells = aggregate(entries);
  if (report.cells.empty()) throw EmptyGrid("no completed runs to report");
  const auto table = experiment_dir / "aggregated.csv";
  export_table(report.cells, "csv", table);
  report.written.push_back(table);

  std::set<std::string> optimizers;
  for (const auto& c : report.cells)
    if (const Node* n = c.key("optimizer.name")) optimizers.insert(n->as_string());
  const bool svg = std::find(settings.output_types.begin(), settings.output_types.end(), "svg") !=
                   settings.output_types.end();
  const bool csv = std::find(settings.output_types.begin(), settings.output_types.end(), "csv") !=
                   settings.output_types.end();
  const auto plots = experiment_dir / "plots";
  for (const auto& opt : optimizers) {
    std::vector<AggregateCell> mine;
    for (const auto& c : report.cells)
      if (const Node* n = c.key("optimizer.name"); n && n->as_string() == opt) mine.push_back(c);
    for (const auto& x_key : settings.x_axis) {
      const bool present = std::any_of(mine.begin(), mine.end(), [&](const AggregateCell& c) {
        return c.key(x_key) && c.key(settings.y_axis);
      });
      if (!present) continue;
      const Direction dir = common_metric(mine).direction;
      for (HeatmapValue value : settings.values) {
        HeatmapSpec spec{x_key, settings.y_axis, value,
                         opt + ": test " + to_string(value) + " " + to_string(mine[0].metric.kind)};
        const auto stem = plots / plot_file_stem(opt, x_key, value);
        std::filesystem::create_directories(plots);
        if (svg) {
          write_file_atomic(stem.string() + ".svg", render_heatmap(mine, spec, dir));
          report.written.push_back(stem.string() + ".svg");
        }
        if (csv) {
          write_file_atomic(stem.string() + ".csv", heatmap_csv(mine, spec, dir));
          report.written.push_back(stem.string() + ".csv");
        }
      }
    }
  }
  return report;
}

}  // namespace fob
