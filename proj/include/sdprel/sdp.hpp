#pragma once

// Shortest dependency paths between two tokens of a dependency tree.

#include <algorithm>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdprel/errors.hpp"
#include "sdprel/treebank.hpp"

namespace sdprel {

/// Upward steps (dependent to head) are Left, downward steps are Right.
enum class Direction { left, right };

struct SdpNode {
  std::string form;
  bool operator==(const SdpNode&) const = default;
};

struct SdpArc {
  std::string label;
  Direction direction = Direction::left;
  bool operator==(const SdpArc&) const = default;
};

using SdpElement = std::variant<SdpNode, SdpArc>;

struct Sdp {
  std::vector<SdpElement> elements;

  std::size_t arc_count() const { return elements.size() / 2; }
  std::vector<std::string> node_forms() const {
    std::vector<std::string> out;
    for (const auto& e : elements)
      if (auto* n = std::get_if<SdpNode>(&e)) out.push_back(n->form);
    return out;
  }

  bool operator==(const Sdp&) const = default;
};

/// Node/arc alternation starting and ending with a non-empty node.
inline bool is_valid(const Sdp& path) {
  if (path.elements.size() % 2 == 0) return false;
  for (std::size_t i = 0; i < path.elements.size(); ++i) {
    const auto& e = path.elements[i];
    if (i % 2 == 0) {
      auto* n = std::get_if<SdpNode>(&e);
      if (!n || n->form.empty()) return false;
    } else {
      auto* a = std::get_if<SdpArc>(&e);
      if (!a || a->label.empty()) return false;
    }
  }
  return true;
}

/// Path from `from` up to the lowest common ancestor and down to `to`.
/// Ancestors of `from` are marked, then `to` climbs until it meets one.
inline Sdp shortest_path(const DependencyGraph& graph, int from, int to) {
  const int n = static_cast<int>(graph.size());
  if (from < 1 || from > n || to < 1 || to > n)
    throw TokenOutOfRange("token ids " + std::to_string(from) + ", " + std::to_string(to) +
                          " not in 1.." + std::to_string(n));

  // position of each ancestor of `from` along its chain, -1 if not an ancestor
  std::vector<int> up_rank(static_cast<std::size_t>(n + 1), -1);
  std::vector<int> up_chain;
  for (int cur = from; cur != 0; cur = graph.at(cur).head) {
    up_rank[static_cast<std::size_t>(cur)] = static_cast<int>(up_chain.size());
    up_chain.push_back(cur);
  }
  std::vector<int> down_chain;
  int lca = to;
  while (up_rank[static_cast<std::size_t>(lca)] < 0) {
    down_chain.push_back(lca);
    lca = graph.at(lca).head;
  }

  Sdp path;
  const int top = up_rank[static_cast<std::size_t>(lca)];
  for (int i = 0; i < top; ++i) {
    const Token& t = graph.at(up_chain[static_cast<std::size_t>(i)]);
    path.elements.emplace_back(SdpNode{t.form});
    path.elements.emplace_back(SdpArc{t.deprel, Direction::left});
  }
  path.elements.emplace_back(SdpNode{graph.at(lca).form});
  for (auto it = down_chain.rbegin(); it != down_chain.rend(); ++it) {
    const Token& t = graph.at(*it);
    path.elements.emplace_back(SdpArc{t.deprel, Direction::right});
    path.elements.emplace_back(SdpNode{t.form});
  }
  return path;
}

/// The same path walked from the other end.
inline Sdp reversed(const Sdp& path) {
  Sdp out;
  for (auto it = path.elements.rbegin(); it != path.elements.rend(); ++it) {
    if (auto* a = std::get_if<SdpArc>(&*it)) {
      out.elements.emplace_back(SdpArc{
          a->label, a->direction == Direction::left ? Direction::right : Direction::left});
    } else {
      out.elements.push_back(*it);
    }
  }
  return out;
}

inline Sdp decode_entities(const Sdp& path, const CodeTable& codes) {
  Sdp out = path;
  for (auto& e : out.elements) {
    if (auto* n = std::get_if<SdpNode>(&e)) {
      auto it = codes.find(n->form);
      if (it != codes.end()) n->form = it->second;
    }
  }
  return out;
}

inline std::string underscore_spaces(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

/// Whitespace-separated tokens exactly as serialize_sdp writes them.
inline std::vector<std::string> sdp_tokens(const Sdp& path) {
  std::vector<std::string> out;
  for (const auto& e : path.elements) {
    if (auto* n = std::get_if<SdpNode>(&e)) {
      out.push_back(underscore_spaces(n->form));
    } else {
      const auto& a = std::get<SdpArc>(e);
      const char* arrow = a.direction == Direction::left ? "<-" : "->";
      out.emplace_back(arrow);
      out.push_back(a.label);
      out.emplace_back(arrow);
    }
  }
  return out;
}

/// "knowledge_sources <- SBJ <- are -> VC -> treated"
inline std::string serialize_sdp(const Sdp& path) {
  std::string out;
  for (const auto& tok : sdp_tokens(path)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

namespace detail {

inline std::optional<Direction> arrow_direction(std::string_view tok) {
  if (tok == "<-" || tok == "\xE2\x86\x90") return Direction::left;   // U+2190
  if (tok == "->" || tok == "\xE2\x86\x92") return Direction::right;  // U+2192
  return std::nullopt;
}

}  // namespace detail

/// Reads a serialized path back; node forms keep their underscores. Unicode
/// arrows are accepted alongside the ASCII ones.
inline Sdp parse_sdp(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(std::move(t));
  if (toks.empty() || toks.size() % 4 != 1)
    throw FormatError("malformed path: '" + std::string(line) + "'");
  Sdp path;
  path.elements.emplace_back(SdpNode{toks[0]});
  for (std::size_t i = 1; i < toks.size(); i += 4) {
    auto d1 = detail::arrow_direction(toks[i]);
    auto d2 = detail::arrow_direction(toks[i + 2]);
    if (!d1 || !d2 || *d1 != *d2 || detail::arrow_direction(toks[i + 1]) ||
        detail::arrow_direction(toks[i + 3]))
      throw FormatError("malformed arc in path: '" + std::string(line) + "'");
    path.elements.emplace_back(SdpArc{toks[i + 1], *d1});
    path.elements.emplace_back(SdpNode{toks[i + 3]});
  }
  return path;
}

}  // namespace sdprel
