// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fob/error.hpp"

namespace fob {

/// A configuration tree: scalars, sequences, and insertion-ordered mappings.
///
/// Maps keep the order in which keys were written, which is what grid
/// expansion walks; identity hashing goes through canonical_json() and is
/// therefore order-free.
class Node {
 public:
  enum class Kind { Null, Bool, Int, Float, String, List, Map };
  using List = std::vector<Node>;
  using Entry = std::pair<std::string, Node>;
  using Map = std::vector<Entry>;

  Node() = default;
  Node(bool v) : value_(v) {}
  Node(int v) : value_(static_cast<std::int64_t>(v)) {}
  Node(std::int64_t v) : value_(v) {}
  Node(double v) : value_(v) {}
  Node(const char* v) : value_(std::string(v)) {}
  Node(std::string v) : value_(std::move(v)) {}
  Node(List v) : value_(std::move(v)) {}
  Node(Map v) : value_(std::move(v)) {}

  static Node map() { return Node(Map{}); }
  static Node list() { return Node(List{}); }

  Kind kind() const { return static_cast<Kind>(value_.index()); }
  bool is_null() const { return kind() == Kind::Null; }
  bool is_map() const { return kind() == Kind::Map; }
  bool is_list() const { return kind() == Kind::List; }
  bool is_number() const { return kind() == Kind::Int || kind() == Kind::Float; }
  bool is_scalar() const { return !is_map() && !is_list(); }

  bool as_bool(std::string_view what = "value") const {
    if (kind() != Kind::Bool) throw SchemaError(std::string(what) + ": expected a boolean");
    return std::get<bool>(value_);
  }
  std::int64_t as_int(std::string_view what = "value") const {
    if (kind() != Kind::Int) throw SchemaError(std::string(what) + ": expected an integer");
    return std::get<std::int64_t>(value_);
  }
  /// Integers are accepted wherever a real number is expected.
  double as_double(std::string_view what = "value") const {
    if (kind() == Kind::Int) return static_cast<double>(std::get<std::int64_t>(value_));
    if (kind() != Kind::Float) throw SchemaError(std::string(what) + ": expected a number");
    return std::get<double>(value_);
  }
  const std::string& as_string(std::string_view what = "value") const {
    if (kind() != Kind::String) throw SchemaError(std::string(what) + ": expected a string");
    return std::get<std::string>(value_);
  }

  const List& items() const { return std::get<List>(value_); }
  List& items() { return std::get<List>(value_); }
  const Map& entries() const { return std::get<Map>(value_); }
  Map& entries() { return std::get<Map>(value_); }

  const Node* find(std::string_view key) const {
    if (!is_map()) return nullptr;
    for (const auto& [k, v] : entries())
      if (k == key) return &v;
    return nullptr;
  }
  Node* find(std::string_view key) {
    return const_cast<Node*>(static_cast<const Node&>(*this).find(key));
  }
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  /// Inserts (appending) or replaces the value under `key`.
  Node& set(std::string_view key, Node value) {
    if (is_null()) value_ = Map{};
    if (Node* existing = find(key)) {
      *existing = std::move(value);
      return *existing;
    }
    entries().emplace_back(std::string(key), std::move(value));
    return entries().back().second;
  }

  bool erase(std::string_view key) {
    if (!is_map()) return false;
    auto& m = entries();
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (it->first == key) {
        m.erase(it);
        return true;
      }
    }
    return false;
  }

  /// Looks up a dot-separated path such as "optimizer.learning_rate".
  const Node* at_path(std::string_view path) const {
    const Node* cur = this;
    while (cur) {
      auto dot = path.find('.');
      cur = cur->find(path.substr(0, dot));
      if (dot == std::string_view::npos) return cur;
      path.remove_prefix(dot + 1);
    }
    return nullptr;
  }

  /// Sets a dot-separated path, creating intermediate mappings.
  void set_path(std::string_view path, Node value) {
    Node* cur = this;
    for (auto dot = path.find('.'); dot != std::string_view::npos; dot = path.find('.')) {
      auto head = path.substr(0, dot);
      Node* next = cur->find(head);
      if (!next || !next->is_map()) next = &cur->set(head, Node::map());
      cur = next;
      path.remove_prefix(dot + 1);
    }
    cur->set(path, std::move(value));
  }

  bool erase_path(std::string_view path) {
    auto dot = path.rfind('.');
    if (dot == std::string_view::npos) return erase(path);
    const Node* parent = at_path(path.substr(0, dot));
    return parent && const_cast<Node*>(parent)->erase(path.substr(dot + 1));
  }

  bool contains_list() const {
    if (is_list()) return true;
    if (is_map())
      for (const auto& [k, v] : entries())
        if (v.contains_list()) return true;
    return false;
  }

  friend bool operator==(const Node& a, const Node& b) { return a.value_ == b.value_; }

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, List, Map> value_;
};

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string json_escape(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

/// Text of a scalar as used in tables and hashing (numbers normalized).
inline std::string scalar_text(const Node& n) {
  switch (n.kind()) {
    case Node::Kind::Null: return "null";
    case Node::Kind::Bool: return n.as_bool() ? "true" : "false";
    case Node::Kind::Int: return std::to_string(n.as_int());
    case Node::Kind::Float: return format_double(n.as_double());
    case Node::Kind::String: return n.as_string();
    default: throw SchemaError("expected a scalar");
  }
}

/// Canonical serialization: sorted keys, no whitespace, integers in decimal,
/// floats as shortest round-trip decimals. Integral floats print like
/// integers, so `1` and `1.0` produce the same text.
inline std::string canonical_json(const Node& n) {
  switch (n.kind()) {
    case Node::Kind::String: return json_escape(n.as_string());
    case Node::Kind::List: {
      std::string out = "[";
      bool first = true;
      for (const auto& item : n.items()) {
        if (!first) out += ',';
        first = false;
        out += canonical_json(item);
      }
      return out + "]";
    }
    case Node::Kind::Map: {
      std::vector<const Node::Entry*> sorted;
      for (const auto& e : n.entries()) sorted.push_back(&e);
      std::sort(sorted.begin(), sorted.end(),
                [](const auto* a, const auto* b) { return a->first < b->first; });
      std::string out = "{";
      bool first = true;
      for (const auto* e : sorted) {
        if (!first) out += ',';
        first = false;
        out += json_escape(e->first) + ":" + canonical_json(e->second);
      }
      return out + "}";
    }
    default: return scalar_text(n);
  }
}

/// Flattens a tree into (dotted path, scalar) pairs in depth-first order.
inline void flatten(const Node& n, std::vector<std::pair<std::string, Node>>& out,
                    const std::string& prefix = "") {
  if (n.is_map()) {
    for (const auto& [k, v] : n.entries()) flatten(v, out, prefix.empty() ? k : prefix + "." + k);
  } else {
    out.emplace_back(prefix, n);
  }
}

}  // namespace fob
