// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "fob/error.hpp"
#include "fob/node.hpp"

namespace fob {

namespace detail {

// Plain-scalar typing follows the YAML 1.2 core schema. Quoted scalars are
// always strings.
inline Node type_plain_scalar(const std::string& s) {
  static const std::regex int_re(R"([-+]?[0-9]+)");
  static const std::regex float_re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return Node{};
  if (s == "true" || s == "True" || s == "TRUE") return Node(true);
  if (s == "false" || s == "False" || s == "FALSE") return Node(false);
  if (std::regex_match(s, int_re)) {
    try {
      return Node(static_cast<std::int64_t>(std::stoll(s)));
    } catch (const std::out_of_range&) {
      return Node(std::strtod(s.c_str(), nullptr));
    }
  }
  if (std::regex_match(s, float_re)) return Node(std::strtod(s.c_str(), nullptr));
  if (s == ".inf" || s == ".Inf" || s == ".INF" || s == "+.inf") return Node(HUGE_VAL);
  if (s == "-.inf" || s == "-.Inf" || s == "-.INF") return Node(-HUGE_VAL);
  if (s == ".nan" || s == ".NaN" || s == ".NAN") return Node(std::nan(""));
  return Node(s);
}

inline Node from_yaml(const YAML::Node& y) {
  switch (y.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null: return Node{};
    case YAML::NodeType::Scalar:
      if (y.Tag() == "!") return Node(y.Scalar());
      return type_plain_scalar(y.Scalar());
    case YAML::NodeType::Sequence: {
      Node::List items;
      for (const auto& child : y) items.push_back(from_yaml(child));
      return Node(std::move(items));
    }
    case YAML::NodeType::Map: {
      Node out = Node::map();
      for (const auto& kv : y) {
        auto key = kv.first.as<std::string>();
        if (out.contains(key)) throw SyntaxError("duplicate key '" + key + "'");
        out.set(key, from_yaml(kv.second));
      }
      return out;
    }
  }
  return Node{};
}

inline bool needs_quotes(const std::string& s) {
  Node typed = type_plain_scalar(s);
  if (typed.kind() != Node::Kind::String) return true;
  if (s.empty() || s.front() == ' ' || s.back() == ' ') return true;
  return s.find_first_of(":#{}[],&*!|>'\"%@`\n\t") != std::string::npos || s.front() == '-' ||
         s.front() == '?';
}

inline void emit(YAML::Emitter& out, const Node& n) {
  switch (n.kind()) {
    case Node::Kind::Null: out << YAML::Null; break;
    case Node::Kind::Bool: out << (n.as_bool() ? "true" : "false"); break;
    case Node::Kind::Int: out << std::to_string(n.as_int()); break;
    case Node::Kind::Float: {
      double v = n.as_double();
      std::string text;
      if (std::isnan(v)) {
        text = ".nan";
      } else if (std::isinf(v)) {
        text = v > 0 ? ".inf" : "-.inf";
      } else {
        text = format_double(v);
        // keep it a float on re-parse
        if (text.find_first_of(".e") == std::string::npos) text += ".0";
      }
      out << text;
      break;
    }
    case Node::Kind::String:
      if (needs_quotes(n.as_string()))
        out << YAML::DoubleQuoted << n.as_string();
      else
        out << n.as_string();
      break;
    case Node::Kind::List:
      out << YAML::BeginSeq;
      for (const auto& item : n.items()) emit(out, item);
      out << YAML::EndSeq;
      break;
    case Node::Kind::Map:
      out << YAML::BeginMap;
      for (const auto& [k, v] : n.entries()) {
        out << YAML::Key << k << YAML::Value;
        emit(out, v);
      }
      out << YAML::EndMap;
      break;
  }
}

}  // namespace detail

/// Parses YAML text into a Node. Throws SyntaxError on malformed input.
inline Node parse_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SyntaxError(std::string("malformed YAML: ") + e.what());
  }
  return detail::from_yaml(root);
}

inline Node load_yaml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_yaml(ss.str());
}

inline std::string to_yaml(const Node& n) {
  YAML::Emitter out;
  detail::emit(out, n);
  return std::string(out.c_str()) + "\n";
}

}  // namespace fob
