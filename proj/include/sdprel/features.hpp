#pragma once

// Vocabularies, embedding matrices and index encoding of paths and sentences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdprel/errors.hpp"
#include "sdprel/random.hpp"
#include "sdprel/sdp.hpp"
#include "sdprel/treebank.hpp"

namespace sdprel {

enum class ItemKind { reserved, word, label, arrow };

struct Item {
  std::string text;
  ItemKind kind = ItemKind::word;
  bool operator==(const Item&) const = default;
};

/// Path tokens in serialized order: node, arrow, label, arrow, node, ...
inline std::vector<Item> path_items(const std::vector<std::string>& sdp_tokens) {
  std::vector<Item> out;
  out.reserve(sdp_tokens.size());
  for (std::size_t i = 0; i < sdp_tokens.size(); ++i) {
    ItemKind kind = ItemKind::word;
    if (i % 4 == 1 || i % 4 == 3) kind = ItemKind::arrow;
    if (i % 4 == 2) kind = ItemKind::label;
    out.push_back(Item{sdp_tokens[i], kind});
  }
  return out;
}

inline std::vector<Item> path_items(const Sdp& path) { return path_items(sdp_tokens(path)); }

/// Plain word sequence; "<-" and "->" still count as arrow symbols.
inline std::vector<Item> word_items(const std::vector<std::string>& words) {
  std::vector<Item> out;
  out.reserve(words.size());
  for (const auto& w : words)
    out.push_back(Item{w, (w == "<-" || w == "->") ? ItemKind::arrow : ItemKind::word});
  return out;
}

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab() {
    items_.push_back(Item{"<pad>", ItemKind::reserved});
    items_.push_back(Item{"<unk>", ItemKind::reserved});
  }

  /// Returns the index of `text`, adding it with `kind` on first sight.
  int add(const std::string& text, ItemKind kind) {
    auto [it, inserted] = index_.try_emplace(text, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(Item{text, kind});
    return it->second;
  }

  int lookup(const std::string& text) const {
    auto it = index_.find(text);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& text) const { return index_.count(text) > 0; }
  std::size_t size() const { return items_.size(); }
  const Item& item(int index) const { return items_.at(static_cast<std::size_t>(index)); }
  const std::vector<Item>& items() const { return items_; }

  /// Order-sensitive fingerprint of the item list.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& it : items_) {
      h = fnv1a64(it.text, h);
      h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return h;
  }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, int> index_;
};

/// First-seen indexing over all sequences.
inline Vocab build_vocab(const std::vector<std::vector<Item>>& sequences) {
  Vocab v;
  for (const auto& seq : sequences)
    for (const auto& item : seq) v.add(item.text, item.kind);
  return v;
}

inline Vocab build_vocab(const std::vector<std::vector<std::string>>& sequences) {
  std::vector<std::vector<Item>> items;
  items.reserve(sequences.size());
  for (const auto& s : sequences) items.push_back(word_items(s));
  return build_vocab(items);
}

/// V x d row-major matrix; row 0 (PAD) is zero.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t r, std::size_t d) : rows(r), dim(d), data(r * d, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

  bool operator==(const EmbeddingMatrix&) const = default;
};

/// Uniform [-0.25, 0.25] rows for every non-PAD item.
inline EmbeddingMatrix random_embeddings(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  EmbeddingMatrix m(rows, dim);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  for (std::size_t r = 1; r < rows; ++r)
    for (auto& x : m.row(r)) x = u(rng);
  return m;
}

/// Reads "word v1 ... vd" lines (optional "V d" header) and copies vectors for
/// vocabulary words. Labels, arrows and words missing from the file keep their
/// seeded random initialization.
inline EmbeddingMatrix load_pretrained(std::istream& in, const Vocab& vocab, std::size_t dim,
                                       std::uint64_t seed) {
  EmbeddingMatrix m = random_embeddings(vocab.size(), dim, seed);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string c; fields >> c;) cols.push_back(std::move(c));
    if (cols.empty()) continue;
    if (ln == 1 && cols.size() == 2 && detail::to_int(cols[0]) && detail::to_int(cols[1])) {
      if (static_cast<std::size_t>(*detail::to_int(cols[1])) != dim)
        throw DimensionMismatch("embedding header declares d=" + cols[1] + ", expected " +
                                std::to_string(dim));
      continue;
    }
    if (cols.size() - 1 != dim)
      throw DimensionMismatch("embedding line " + std::to_string(ln) + " has " +
                              std::to_string(cols.size() - 1) + " values, expected " +
                              std::to_string(dim));
    std::vector<double> values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string& s = cols[k + 1];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v))
        throw MalformedLine("embedding line " + std::to_string(ln) + ": bad value '" + s + "'");
      values[k] = v;
    }
    const int idx = vocab.lookup(cols[0]);
    if (idx == Vocab::kUnk || vocab.item(idx).kind != ItemKind::word) continue;
    std::copy(values.begin(), values.end(), m.row(static_cast<std::size_t>(idx)).begin());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Encoding

enum class InputMode { sdp, sentence };

inline std::string_view mode_name(InputMode m) { return m == InputMode::sdp ? "sdp" : "sentence"; }

inline InputMode parse_mode(std::string_view s) {
  if (s == "sdp") return InputMode::sdp;
  if (s == "sentence") return InputMode::sentence;
  throw FormatError("unknown input mode '" + std::string(s) + "'");
}

/// A relation instance with the token sequences it can be fed as.
struct Example {
  std::string key;  // sentence id + entity codes; joins parallel corpora
  Relation label = Relation::usage;
  bool reversed = false;
  std::optional<std::vector<Item>> path;
  std::vector<Item> sentence;

  const std::vector<Item>& tokens(InputMode mode) const {
    if (mode == InputMode::sdp) {
      if (!path) throw MissingPath("instance " + key + " has no dependency path");
      return *path;
    }
    return sentence;
  }
};

struct EncodedInstance {
  std::vector<int> indices;  // length max_len
  std::size_t true_len = 0;
  int label_index = 0;
  bool reversed = false;

  bool operator==(const EncodedInstance&) const = default;
};

inline EncodedInstance encode_items(const std::vector<Item>& items, const Vocab& vocab,
                                    std::size_t max_len) {
  EncodedInstance out;
  out.indices.assign(max_len, Vocab::kPad);
  const std::size_t n = std::min(items.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) out.indices[i] = vocab.lookup(items[i].text);
  out.true_len = n;
  return out;
}

inline EncodedInstance encode(const Example& ex, InputMode mode, const Vocab& vocab,
                              std::size_t max_len) {
  const auto& items = ex.tokens(mode);
  if (items.size() > max_len)
    std::clog << "[warn] " << ex.key << ": " << mode_name(mode) << " sequence of length "
              << items.size() << " truncated to " << max_len << '\n';
  EncodedInstance out = encode_items(items, vocab, max_len);
  out.label_index = static_cast<int>(ex.label);
  out.reversed = ex.reversed;
  return out;
}

/// 99th percentile of the lengths, capped at 50 (sdp) or 100 (sentence) and
/// never below `min_len` (the widest filter).
inline std::size_t default_max_len(std::vector<std::size_t> lengths, InputMode mode,
                                   std::size_t min_len) {
  const std::size_t cap = mode == InputMode::sdp ? 50 : 100;
  std::size_t p99 = 0;
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(lengths.size())));
    p99 = lengths[std::max<std::size_t>(rank, 1) - 1];
  }
  return std::max(std::min(p99, cap), min_len);
}

}  // namespace sdprel
