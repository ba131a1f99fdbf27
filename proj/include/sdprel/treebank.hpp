#pragma once

// Dependency treebank and relation annotation I/O.
//
// Reads CoNLL-X and CoNLL-U dependency files into validated trees, collapses
// multi-word entity mentions into single code tokens, and reads/writes the
// relation and entity-span TSV files.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdprel/errors.hpp"

namespace sdprel {

enum class Scheme { conll08, stanford_basic, ud };

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::conll08: return "conll08";
    case Scheme::stanford_basic: return "sb";
    case Scheme::ud: return "ud";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "conll08" || name == "conll") return Scheme::conll08;
  if (name == "sb" || name == "stanford_basic") return Scheme::stanford_basic;
  if (name == "ud") return Scheme::ud;
  throw FormatError("unknown dependency scheme '" + std::string(name) + "'");
}

struct Token {
  int id = 0;  // 1-based
  std::string form;
  std::string pos;  // may be empty
  int head = 0;     // 0 = artificial root
  std::string deprel;

  bool operator==(const Token&) const = default;
};

struct DependencyGraph {
  std::string sent_id;
  std::vector<Token> tokens;
  Scheme scheme = Scheme::conll08;

  std::size_t size() const { return tokens.size(); }
  const Token& at(int id) const { return tokens.at(static_cast<std::size_t>(id - 1)); }

  int root() const {
    for (const auto& t : tokens)
      if (t.head == 0) return t.id;
    return 0;
  }

  bool operator==(const DependencyGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Helpers

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view rstrip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      if (start < text.size()) lines.push_back(rstrip_cr(text.substr(start)));
      break;
    }
    lines.push_back(rstrip_cr(text.substr(start, pos - start)));
    start = pos + 1;
  }
  return lines;
}

inline std::optional<int> to_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace detail

/// Checks the tree invariants: contiguous ids, one root, single heads in
/// range, no cycles.
inline void validate_tree(const DependencyGraph& g) {
  const int n = static_cast<int>(g.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = g.tokens[static_cast<std::size_t>(i)];
    if (t.id != i + 1)
      throw FormatError(g.sent_id + ": token ids are not contiguous at position " +
                        std::to_string(i + 1));
    if (t.head < 0 || t.head > n)
      throw FormatError(g.sent_id + ": head " + std::to_string(t.head) +
                        " out of range for token " + std::to_string(t.id));
    if (t.head == t.id)
      throw CycleError(g.sent_id + ": token " + std::to_string(t.id) + " heads itself");
    if (t.deprel.empty())
      throw FormatError(g.sent_id + ": token " + std::to_string(t.id) + " has no deprel");
    if (t.head == 0) ++roots;
  }
  if (roots != 1)
    throw MultiRootError(g.sent_id + ": expected exactly one root, found " +
                         std::to_string(roots));
  // Every head chain must reach 0 within n steps.
  for (const Token& t : g.tokens) {
    int cur = t.id;
    int steps = 0;
    while (cur != 0) {
      cur = g.tokens[static_cast<std::size_t>(cur - 1)].head;
      if (++steps > n)
        throw CycleError(g.sent_id + ": cycle through token " + std::to_string(t.id));
    }
  }
}

/// Parses blank-line separated CoNLL-X or CoNLL-U blocks. The layout is
/// CoNLL-U when the text contains '#' comment lines or any id with '-' or '.';
/// otherwise POS comes from column 5 (CoNLL-X). Sentences without a
/// "# sent_id = ..." comment are numbered S1..Sn in file order.
inline std::vector<DependencyGraph> parse_conll(std::string_view text, Scheme scheme) {
  const auto lines = detail::lines_of(text);

  bool conllu = false;
  for (auto line : lines) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      conllu = true;
      break;
    }
    auto tab = line.find('\t');
    auto id = line.substr(0, tab);
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      conllu = true;
      break;
    }
  }

  std::vector<DependencyGraph> graphs;
  DependencyGraph current;
  current.scheme = scheme;
  std::size_t block_line = 0;

  auto flush = [&] {
    if (current.tokens.empty()) {
      current = DependencyGraph{};
      current.scheme = scheme;
      return;
    }
    if (current.sent_id.empty()) current.sent_id = "S" + std::to_string(graphs.size() + 1);
    try {
      validate_tree(current);
    } catch (const Error& e) {
      // Re-raise with the line of the block start, keeping the error type.
      const std::string where = "line " + std::to_string(block_line) + ": ";
      if (dynamic_cast<const CycleError*>(&e)) throw CycleError(where + e.what());
      if (dynamic_cast<const MultiRootError*>(&e)) throw MultiRootError(where + e.what());
      throw FormatError(where + e.what());
    }
    graphs.push_back(std::move(current));
    current = DependencyGraph{};
    current.scheme = scheme;
  };

  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = lines[ln];
    if (detail::is_blank(line)) {
      flush();
      continue;
    }
    if (current.tokens.empty() && current.sent_id.empty()) block_line = ln + 1;
    if (line.front() == '#') {
      constexpr std::string_view key = "# sent_id = ";
      if (line.substr(0, key.size()) == key) current.sent_id = std::string(line.substr(key.size()));
      continue;
    }
    auto cols = detail::split(line, '\t');
    const std::string where = "line " + std::to_string(ln + 1);
    if (cols.size() < 8)
      throw FormatError(where + ": expected at least 8 tab-separated columns, got " +
                        std::to_string(cols.size()));
    if (conllu && (cols[0].find('-') != std::string::npos ||
                   cols[0].find('.') != std::string::npos))
      continue;  // multiword range or empty node
    auto id = detail::to_int(cols[0]);
    auto head = detail::to_int(cols[6]);
    if (!id) throw FormatError(where + ": non-numeric id '" + cols[0] + "'");
    if (!head) throw FormatError(where + ": non-numeric head '" + cols[6] + "'");
    if (*id != static_cast<int>(current.tokens.size()) + 1)
      throw FormatError(where + ": non-contiguous id " + cols[0]);
    Token tok;
    tok.id = *id;
    tok.form = cols[1];
    const std::string& pos = conllu ? cols[3] : cols[4];
    tok.pos = pos == "_" ? std::string() : pos;
    tok.head = *head;
    tok.deprel = cols[7] == "_" ? std::string() : cols[7];
    if (tok.head == tok.id) throw CycleError(where + ": token heads itself");
    current.tokens.push_back(std::move(tok));
  }
  flush();
  return graphs;
}

/// Writes graphs as 10-column CoNLL-X. POS goes to both tag columns so the
/// output reads back identically under either layout.
inline std::string write_conll(const std::vector<DependencyGraph>& graphs) {
  std::string out;
  for (const auto& g : graphs) {
    for (const auto& t : g.tokens) {
      const std::string pos = t.pos.empty() ? "_" : t.pos;
      out += std::to_string(t.id) + '\t' + t.form + "\t_\t" + pos + '\t' + pos + "\t_\t" +
             std::to_string(t.head) + '\t' + t.deprel + "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entity encoding

struct EntitySpan {
  std::string code;
  int start = 0;  // inclusive, 1-based
  int end = 0;    // inclusive
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

using CodeTable = std::map<std::string, std::string>;

struct EncodedGraph {
  DependencyGraph graph;
  CodeTable codes;
};

/// Collapses every span into one token whose form is the entity code. The
/// collapsed token takes the head and deprel of the span's externally governed
/// token; arcs into the span are redirected to it and ids are renumbered.
inline EncodedGraph encode_entities(const DependencyGraph& graph,
                                    const std::vector<EntitySpan>& spans) {
  const int n = static_cast<int>(graph.size());
  std::vector<int> owner(static_cast<std::size_t>(n + 1), -1);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto& sp = spans[s];
    if (sp.start < 1 || sp.start > sp.end || sp.end > n)
      throw FormatError(graph.sent_id + ": span " + sp.code + " [" + std::to_string(sp.start) +
                        "," + std::to_string(sp.end) + "] outside 1.." + std::to_string(n));
    for (int i = sp.start; i <= sp.end; ++i) {
      auto& o = owner[static_cast<std::size_t>(i)];
      if (o >= 0)
        throw OverlapError(graph.sent_id + ": spans " + spans[static_cast<std::size_t>(o)].code +
                           " and " + sp.code + " overlap at token " + std::to_string(i));
      o = static_cast<int>(s);
    }
  }

  std::vector<int> span_head(spans.size(), 0);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto& sp = spans[s];
    int found = 0;
    int count = 0;
    for (int i = sp.start; i <= sp.end; ++i) {
      const int h = graph.at(i).head;
      if (h < sp.start || h > sp.end) {
        found = i;
        ++count;
      }
    }
    if (count != 1)
      throw NoSpanHeadError(graph.sent_id + ": span " + sp.code + " has " +
                            std::to_string(count) + " externally governed tokens");
    span_head[s] = found;
  }

  // old id -> new id; every token of a span maps onto the collapsed token
  std::vector<int> new_id(static_cast<std::size_t>(n + 1), 0);
  int next = 0;
  for (int i = 1; i <= n; ++i) {
    const int o = owner[static_cast<std::size_t>(i)];
    if (o >= 0 && i != spans[static_cast<std::size_t>(o)].start) {
      new_id[static_cast<std::size_t>(i)] = new_id[static_cast<std::size_t>(i - 1)];
      continue;
    }
    new_id[static_cast<std::size_t>(i)] = ++next;
  }

  EncodedGraph result;
  result.graph.sent_id = graph.sent_id;
  result.graph.scheme = graph.scheme;
  for (int i = 1; i <= n; ++i) {
    const int o = owner[static_cast<std::size_t>(i)];
    if (o >= 0 && i != spans[static_cast<std::size_t>(o)].start) continue;
    Token tok;
    if (o >= 0) {
      const auto& sp = spans[static_cast<std::size_t>(o)];
      const Token& h = graph.at(span_head[static_cast<std::size_t>(o)]);
      tok = h;
      tok.form = sp.code;
      std::string surface = sp.surface;
      if (surface.empty()) {
        for (int j = sp.start; j <= sp.end; ++j) {
          if (!surface.empty()) surface += ' ';
          surface += graph.at(j).form;
        }
      }
      result.codes[sp.code] = surface;
    } else {
      tok = graph.at(i);
    }
    tok.id = new_id[static_cast<std::size_t>(i)];
    tok.head = tok.head == 0 ? 0 : new_id[static_cast<std::size_t>(tok.head)];
    result.graph.tokens.push_back(std::move(tok));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Relations

inline constexpr std::size_t kNumLabels = 6;

enum class Relation { usage, result, model_feature, part_whole, topic, compare };

inline constexpr std::array<std::string_view, kNumLabels> kRelationNames = {
    "USAGE", "RESULT", "MODEL-FEATURE", "PART_WHOLE", "TOPIC", "COMPARE"};

inline std::string_view relation_name(Relation r) {
  return kRelationNames[static_cast<std::size_t>(r)];
}

inline Relation parse_relation(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i)
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  throw UnknownLabelError("unknown relation label '" + std::string(name) + "'");
}

struct RelationInstance {
  std::string first_entity;
  std::string second_entity;
  Relation label = Relation::usage;
  bool reversed = false;
  std::string sentence_ref;

  bool operator==(const RelationInstance&) const = default;
};

/// One instance per line: LABEL, ENT1, ENT2, FLAGS (empty or REVERSE), SENT_ID.
inline std::vector<RelationInstance> load_relations(std::string_view text) {
  std::vector<RelationInstance> out;
  const auto lines = detail::lines_of(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (detail::is_blank(lines[ln])) continue;
    const std::string where = "relations line " + std::to_string(ln + 1);
    auto cols = detail::split(lines[ln], '\t');
    if (cols.size() != 5)
      throw FormatError(where + ": expected 5 tab-separated columns, got " +
                        std::to_string(cols.size()));
    RelationInstance r;
    try {
      r.label = parse_relation(cols[0]);
    } catch (const UnknownLabelError& e) {
      throw UnknownLabelError(where + ": " + e.what());
    }
    r.first_entity = cols[1];
    r.second_entity = cols[2];
    if (cols[3] == "REVERSE")
      r.reversed = true;
    else if (!cols[3].empty())
      throw FormatError(where + ": unknown flag '" + cols[3] + "'");
    r.sentence_ref = cols[4];
    if (r.first_entity.empty() || r.second_entity.empty() || r.sentence_ref.empty())
      throw FormatError(where + ": empty entity code or sentence id");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string write_relations(const std::vector<RelationInstance>& relations) {
  std::string out;
  for (const auto& r : relations) {
    out += std::string(relation_name(r.label)) + '\t' + r.first_entity + '\t' +
           r.second_entity + '\t' + (r.reversed ? "REVERSE" : "") + '\t' + r.sentence_ref + '\n';
  }
  return out;
}

/// Entity spans keyed by sentence id, in file order within each sentence.
using SpanTable = std::map<std::string, std::vector<EntitySpan>>;

/// Columns: SENT_ID, CODE, START, END, SURFACE.
inline SpanTable load_entity_spans(std::string_view text) {
  SpanTable out;
  const auto lines = detail::lines_of(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (detail::is_blank(lines[ln])) continue;
    const std::string where = "entities line " + std::to_string(ln + 1);
    auto cols = detail::split(lines[ln], '\t');
    if (cols.size() != 5)
      throw FormatError(where + ": expected 5 tab-separated columns, got " +
                        std::to_string(cols.size()));
    auto start = detail::to_int(cols[2]);
    auto end = detail::to_int(cols[3]);
    if (!start || !end) throw FormatError(where + ": non-numeric span offsets");
    out[cols[0]].push_back(EntitySpan{cols[1], *start, *end, cols[4]});
  }
  return out;
}

/// Token id of an entity code inside an encoded sentence.
inline int find_entity(const DependencyGraph& encoded, std::string_view code) {
  for (const auto& t : encoded.tokens)
    if (t.form == code) return t.id;
  return 0;
}

/// Resolves both entity codes of a relation against its encoded sentence.
inline std::pair<int, int> link_relation(const RelationInstance& r,
                                         const std::map<std::string, EncodedGraph>& sentences) {
  auto it = sentences.find(r.sentence_ref);
  if (it == sentences.end())
    throw DanglingEntityError("relation " + r.first_entity + "/" + r.second_entity +
                              " refers to unknown sentence " + r.sentence_ref);
  const int a = find_entity(it->second.graph, r.first_entity);
  const int b = find_entity(it->second.graph, r.second_entity);
  if (a == 0 || b == 0)
    throw DanglingEntityError("entity " + (a == 0 ? r.first_entity : r.second_entity) +
                              " not found in sentence " + r.sentence_ref);
  return {a, b};
}

}  // namespace sdprel
