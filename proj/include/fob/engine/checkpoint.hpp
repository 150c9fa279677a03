// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fob/error.hpp"
#include "fob/optim/optimizer.hpp"
#include "fob/rng.hpp"
#include "fob/sha256.hpp"
#include "fob/tasks/task.hpp"

namespace fob {

inline constexpr int kCheckpointVersion = 1;

struct BestRecord {
  double value = 0;
  std::int64_t epoch = 0;

  friend bool operator==(const BestRecord& a, const BestRecord& b) {
    return std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value) &&
           a.epoch == b.epoch;
  }
};

/// One completed epoch (1-based).
struct EpochRecord {
  std::int64_t epoch = 0;
  double lr_last = 0;
  double train_loss = 0;
  double val_metric = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Everything needed to continue a run exactly where it stopped.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string run_id;
  std::string budget_free_id;
  std::int64_t epoch = 0;
  std::int64_t step_count = 0;
  ParamVector params;
  OptimizerState optimizer_state;
  std::map<std::string, Xoshiro256::State> rng_states;
  std::optional<BestRecord> best_val;
  std::vector<EpochRecord> history;
  std::vector<std::int64_t> budgets;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline std::string hex64(std::uint64_t bits) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw CorruptCheckpoint("bad hex word '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw CorruptCheckpoint("bad hex word '" + s + "'");
  }
  return v;
}

inline std::string hex_double(double v) { return hex64(std::bit_cast<std::uint64_t>(v)); }
inline double double_hex(const nlohmann::json& j) {
  return std::bit_cast<double>(parse_hex64(j.get<std::string>()));
}

inline nlohmann::json encode_vec(const std::vector<double>& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(hex_double(x));
  return arr;
}
inline std::vector<double> decode_vec(const nlohmann::json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(double_hex(x));
  return v;
}

}  // namespace detail

/// Canonical JSON with every double as its IEEE-754 bit pattern in hex.
inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  using nlohmann::json;
  json j;
  j["version"] = c.version;
  j["run_id"] = c.run_id;
  j["budget_free_id"] = c.budget_free_id;
  j["epoch"] = c.epoch;
  j["step_count"] = c.step_count;
  j["params"] = detail::encode_vec(c.params);

  json opt;
  opt["name"] = c.optimizer_state.name;
  opt["step_count"] = c.optimizer_state.step_count;
  json groups = json::array();
  for (const auto& g : c.optimizer_state.groups) {
    json gj;
    json bufs = json::object();
    for (const auto& [k, v] : g.buffers) bufs[k] = detail::encode_vec(v);
    gj["buffers"] = bufs;
    if (g.cpr) {
      json cj;
      cj["lambda"] = detail::hex_double(g.cpr->lambda);
      cj["kappa"] = g.cpr->kappa ? json(detail::hex_double(*g.cpr->kappa)) : json(nullptr);
      cj["fix_step"] = g.cpr->fix_step;
      gj["cpr"] = cj;
    } else {
      gj["cpr"] = nullptr;
    }
    groups.push_back(gj);
  }
  opt["groups"] = groups;
  j["optimizer_state"] = opt;

  json rng = json::object();
  for (const auto& [name, st] : c.rng_states) {
    json words = json::array();
    for (auto w : st) words.push_back(detail::hex64(w));
    rng[name] = words;
  }
  j["rng_states"] = rng;

  if (c.best_val) {
    j["best_val"] = {{"value", detail::hex_double(c.best_val->value)}, {"epoch", c.best_val->epoch}};
  } else {
    j["best_val"] = nullptr;
  }
  json hist = json::array();
  for (const auto& h : c.history)
    hist.push_back({{"epoch", h.epoch},
                    {"lr_last", detail::hex_double(h.lr_last)},
                    {"train_loss", detail::hex_double(h.train_loss)},
                    {"val_metric", detail::hex_double(h.val_metric)}});
  j["history"] = hist;
  j["budgets"] = c.budgets;
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  try {
    c.version = j.at("version").get<int>();
    if (c.version != kCheckpointVersion)
      throw VersionMismatch("checkpoint version " + std::to_string(c.version) + ", expected " +
                            std::to_string(kCheckpointVersion));
    c.run_id = j.at("run_id").get<std::string>();
    c.budget_free_id = j.at("budget_free_id").get<std::string>();
    c.epoch = j.at("epoch").get<std::int64_t>();
    c.step_count = j.at("step_count").get<std::int64_t>();
    c.params = detail::decode_vec(j.at("params"));
    const auto& opt = j.at("optimizer_state");
    c.optimizer_state.name = opt.at("name").get<std::string>();
    c.optimizer_state.step_count = opt.at("step_count").get<std::int64_t>();
    for (const auto& gj : opt.at("groups")) {
      GroupState g;
      for (const auto& [k, v] : gj.at("buffers").items()) g.buffers[k] = detail::decode_vec(v);
      if (!gj.at("cpr").is_null()) {
        CprState cpr;
        const auto& cj = gj.at("cpr");
        cpr.lambda = detail::double_hex(cj.at("lambda"));
        if (!cj.at("kappa").is_null()) cpr.kappa = detail::double_hex(cj.at("kappa"));
        cpr.fix_step = cj.at("fix_step").get<std::int64_t>();
        g.cpr = cpr;
      }
      c.optimizer_state.groups.push_back(std::move(g));
    }
    for (const auto& [name, words] : j.at("rng_states").items()) {
      if (words.size() != 4) throw CorruptCheckpoint("bad PRNG state for '" + name + "'");
      Xoshiro256::State st{};
      for (std::size_t i = 0; i < 4; ++i) st[i] = detail::parse_hex64(words[i].get<std::string>());
      c.rng_states[name] = st;
    }
    if (!j.at("best_val").is_null())
      c.best_val = BestRecord{detail::double_hex(j["best_val"].at("value")),
                              j["best_val"].at("epoch").get<std::int64_t>()};
    for (const auto& h : j.at("history"))
      c.history.push_back({h.at("epoch").get<std::int64_t>(), detail::double_hex(h.at("lr_last")),
                           detail::double_hex(h.at("train_loss")),
                           detail::double_hex(h.at("val_metric"))});
    c.budgets = j.at("budgets").get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

inline constexpr std::string_view kTrailerTag = "sha256 ";

/// Serialized bytes: one line of canonical JSON, then a trailer line
/// `sha256 <hex digest of the JSON line>`.
inline std::string encode_checkpoint(const Checkpoint& c) {
  std::string body = checkpoint_to_json(c).dump();
  return body + "\n" + std::string(kTrailerTag) + sha256_hex(body) + "\n";
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw CorruptCheckpoint("checkpoint has no trailer");
  std::string body = bytes.substr(0, nl);
  std::string trailer = bytes.substr(nl + 1);
  const std::string expected = std::string(kTrailerTag) + sha256_hex(body) + "\n";
  if (trailer != expected) throw CorruptCheckpoint("checkpoint trailer does not match contents");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("unparseable checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

/// Writes through a temporary file and renames, so a reader never sees a
/// half-written checkpoint.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace fob
