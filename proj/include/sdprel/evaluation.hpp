#pragma once

// Stratified k-fold cross-validation, macro-F1 and the per-relation comparison
// tables.

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprel/cnn.hpp"
#include "sdprel/errors.hpp"
#include "sdprel/features.hpp"
#include "sdprel/random.hpp"
#include "sdprel/treebank.hpp"

namespace sdprel {

struct ConfusionMatrix {
  std::array<std::array<long, kNumLabels>, kNumLabels> counts{};  // [gold][predicted]

  void add(int gold, int predicted) {
    ++counts.at(static_cast<std::size_t>(gold)).at(static_cast<std::size_t>(predicted));
  }
  long total() const {
    long n = 0;
    for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), 0L);
    return n;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (std::size_t g = 0; g < kNumLabels; ++g)
      for (std::size_t p = 0; p < kNumLabels; ++p) counts[g][p] += o.counts[g][p];
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  std::array<double, kNumLabels> precision{};
  std::array<double, kNumLabels> recall{};
  std::array<double, kNumLabels> f1{};
  double macro_f1 = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Per-class P/R/F1 (0 on empty denominators) and their unweighted mean.
inline Metrics macro_f1(const ConfusionMatrix& cm) {
  Metrics m;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    long tp = cm.counts[c][c];
    long predicted = 0;
    long gold = 0;
    for (std::size_t o = 0; o < kNumLabels; ++o) {
      predicted += cm.counts[o][c];
      gold += cm.counts[c][o];
    }
    const double p = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double r = gold > 0 ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    m.precision[c] = p;
    m.recall[c] = r;
    m.f1[c] = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  m.macro_f1 = std::accumulate(m.f1.begin(), m.f1.end(), 0.0) / static_cast<double>(kNumLabels);
  return m;
}

/// Per class: shuffle by seed, then deal round-robin. The dealer carries on
/// from where the previous class stopped so fold sizes stay balanced too.
inline std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k,
                                                              std::uint64_t seed) {
  if (k < 2) throw TooFewInstances("cross-validation needs k >= 2");
  std::array<std::vector<std::size_t>, kNumLabels> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
  for (std::size_t c = 0; c < kNumLabels; ++c)
    if (by_class[c].empty())
      throw TooFewInstances("class " + std::string(kRelationNames[c]) + " has no instances");

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % folds.size();
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// ---------------------------------------------------------------------------
// Data preparation

struct ExperimentSetup {
  std::size_t dim = 50;                   // per embedding channel
  std::optional<std::string> embeddings;  // text of a pretrained embedding file
  std::optional<std::size_t> max_len;     // default: 99th percentile, capped
  int folds = 5;
  int jobs = 1;
};

struct PreparedData {
  InputMode mode = InputMode::sdp;
  Vocab vocab;
  EmbeddingMatrix static_channel;
  std::vector<EncodedInstance> encoded;
  std::size_t max_len = 0;
};

inline int widest_filter(const HyperParams& hp) {
  return hp.filter_widths.empty() ? 1 : *std::max_element(hp.filter_widths.begin(), hp.filter_widths.end());
}

/// Vocabulary over every example of the mode, static channel (pretrained or
/// seeded random) and fixed-length encodings.
inline PreparedData prepare(const std::vector<Example>& examples, InputMode mode,
                            const ExperimentSetup& setup, std::size_t min_len, std::uint64_t seed) {
  PreparedData out;
  out.mode = mode;
  std::vector<std::size_t> lengths;
  for (const auto& ex : examples) {
    const auto& items = ex.tokens(mode);
    for (const auto& it : items) out.vocab.add(it.text, it.kind);
    lengths.push_back(items.size());
  }
  out.max_len = setup.max_len ? std::max(*setup.max_len, min_len)
                              : default_max_len(lengths, mode, min_len);
  const auto init_seed = sub_seed(seed, "vocab-init");
  if (setup.embeddings) {
    std::istringstream in(*setup.embeddings);
    out.static_channel = load_pretrained(in, out.vocab, setup.dim, init_seed);
  } else {
    out.static_channel = random_embeddings(out.vocab.size(), setup.dim, init_seed);
  }
  for (const auto& ex : examples) out.encoded.push_back(encode(ex, mode, out.vocab, out.max_len));
  return out;
}

inline std::vector<int> labels_of(const std::vector<EncodedInstance>& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back(e.label_index);
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldResult {
  ConfusionMatrix confusion;
  Metrics metrics;
  ClassWeights weights{};
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<double> epoch_loss;
};

struct CvResult {
  InputMode mode = InputMode::sdp;
  std::uint64_t seed = 0;
  HyperParams hp;
  std::size_t max_len = 0;
  std::size_t vocab_size = 0;
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  Metrics pooled_metrics;
  double mean_macro_f1 = 0.0;
  double best_fold_macro_f1 = 0.0;
  std::size_t best_fold = 0;
};

/// Trains on k-1 folds (class weights from those folds only) and predicts the
/// held-out fold, for every fold. Fold f trains with seed sub_seed(seed,
/// "train", f); with jobs > 1 folds run on separate threads.
inline CvResult cross_validate(const PreparedData& data, const HyperParams& hp,
                               std::uint64_t seed, int k = 5, int jobs = 1) {
  if (data.encoded.empty()) throw EmptyDataset("no instances to cross-validate");
  const auto labels = labels_of(data.encoded);
  const auto folds = stratified_folds(labels, k, sub_seed(seed, "folds"));

  CvResult res;
  res.mode = data.mode;
  res.seed = seed;
  res.hp = hp;
  res.max_len = data.max_len;
  res.vocab_size = data.vocab.size();
  res.folds.resize(folds.size());

  auto run_fold = [&](std::size_t f) {
    std::vector<bool> held(data.encoded.size(), false);
    for (auto i : folds[f]) held[i] = true;
    std::vector<EncodedInstance> train_set;
    std::vector<int> train_labels;
    for (std::size_t i = 0; i < data.encoded.size(); ++i)
      if (!held[i]) {
        train_set.push_back(data.encoded[i]);
        train_labels.push_back(labels[i]);
      }
    FoldResult& fr = res.folds[f];
    fr.weights = class_weights(train_labels);
    HyperParams fold_hp = hp;
    fold_hp.seed = sub_seed(seed, "train", f);
    CnnModel model = init_model(data.static_channel, fold_hp, data.vocab.hash());
    fr.epoch_loss = train(model, train_set, fold_hp, fr.weights).epoch_loss;
    for (auto i : folds[f]) fr.confusion.add(labels[i], predict(model, data.encoded[i], fold_hp));
    fr.metrics = macro_f1(fr.confusion);
    fr.train_size = train_set.size();
    fr.test_size = folds[f].size();
  };

  const std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
  } else {
    for (std::size_t start = 0; start < folds.size(); start += workers) {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(folds.size());
      for (std::size_t f = start; f < std::min(folds.size(), start + workers); ++f)
        threads.emplace_back([&, f] {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        });
      for (auto& t : threads) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
  }

  double sum = 0.0;
  res.best_fold_macro_f1 = -1.0;
  for (std::size_t f = 0; f < res.folds.size(); ++f) {
    res.pooled += res.folds[f].confusion;
    sum += res.folds[f].metrics.macro_f1;
    if (res.folds[f].metrics.macro_f1 > res.best_fold_macro_f1) {
      res.best_fold_macro_f1 = res.folds[f].metrics.macro_f1;
      res.best_fold = f;
    }
  }
  res.pooled_metrics = macro_f1(res.pooled);
  res.mean_macro_f1 = sum / static_cast<double>(res.folds.size());
  return res;
}

inline CvResult cross_validate(const std::vector<Example>& examples, InputMode mode,
                               const HyperParams& hp, const ExperimentSetup& setup,
                               std::uint64_t seed) {
  const auto data = prepare(examples, mode, setup, static_cast<std::size_t>(widest_filter(hp)), seed);
  return cross_validate(data, hp, seed, setup.folds, setup.jobs);
}

// ---------------------------------------------------------------------------
// Reporting

enum class Aggregate { pooled, mean, best_fold };

inline std::string_view aggregate_name(Aggregate a) {
  switch (a) {
    case Aggregate::pooled: return "pooled";
    case Aggregate::mean: return "mean";
    case Aggregate::best_fold: return "best";
  }
  return "?";
}

inline Aggregate parse_aggregate(std::string_view s) {
  if (s == "pooled") return Aggregate::pooled;
  if (s == "mean") return Aggregate::mean;
  if (s == "best") return Aggregate::best_fold;
  throw FormatError("unknown aggregate '" + std::string(s) + "'");
}

/// Six per-relation F1 values followed by the macro value.
inline std::array<double, kNumLabels + 1> relation_column(const CvResult& r, Aggregate agg) {
  std::array<double, kNumLabels + 1> col{};
  switch (agg) {
    case Aggregate::pooled:
      for (std::size_t c = 0; c < kNumLabels; ++c) col[c] = r.pooled_metrics.f1[c];
      col[kNumLabels] = r.pooled_metrics.macro_f1;
      break;
    case Aggregate::mean:
      for (const auto& f : r.folds)
        for (std::size_t c = 0; c < kNumLabels; ++c)
          col[c] += f.metrics.f1[c] / static_cast<double>(r.folds.size());
      col[kNumLabels] = r.mean_macro_f1;
      break;
    case Aggregate::best_fold:
      for (std::size_t c = 0; c < kNumLabels; ++c) col[c] = r.folds[r.best_fold].metrics.f1[c];
      col[kNumLabels] = r.best_fold_macro_f1;
      break;
  }
  return col;
}

/// Rows are the six relations plus "macro-averaged".
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> values;  // [row][column], F1 x 100
  std::vector<long> frequency;              // gold count per row (empty for macro)

  std::string to_tsv() const {
    std::string out = "relation\tfrequency";
    for (const auto& c : columns) out += '\t' + c;
    out += '\n';
    char buf[64];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out += rows[r] + '\t' + (r < frequency.size() ? std::to_string(frequency[r]) : "");
      for (double v : values[r]) {
        std::snprintf(buf, sizeof(buf), "\t%.2f", v);
        out += buf;
      }
      out += '\n';
    }
    return out;
  }

  std::string to_text() const {
    std::size_t first = std::string("macro-averaged").size();
    for (const auto& r : rows) first = std::max(first, r.size());
    std::vector<std::size_t> widths;
    for (const auto& c : columns) widths.push_back(std::max<std::size_t>(c.size(), 7));
    std::ostringstream out;
    char buf[64];
    auto pad = [](std::string s, std::size_t w, bool left) {
      if (s.size() >= w) return s;
      return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
    };
    out << pad("Relation", first, true) << "  " << pad("Frq.", 5, false);
    for (std::size_t c = 0; c < columns.size(); ++c) out << "  " << pad(columns[c], widths[c], false);
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out << pad(rows[r], first, true) << "  "
          << pad(r < frequency.size() ? std::to_string(frequency[r]) : "", 5, false);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%+.2f", values[r][c]);
        std::string v = columns[c] == "Diff." ? buf : std::string(buf + (values[r][c] >= 0 ? 1 : 0));
        out << "  " << pad(v, widths[c], false);
      }
      out << '\n';
    }
    return out.str();
  }
};

inline std::vector<std::string> relation_rows() {
  std::vector<std::string> rows(kRelationNames.begin(), kRelationNames.end());
  rows.emplace_back("macro-averaged");
  return rows;
}

inline std::vector<long> gold_frequencies(const CvResult& r) {
  std::vector<long> out;
  for (const auto& row : r.pooled.counts) out.push_back(std::accumulate(row.begin(), row.end(), 0L));
  return out;
}

/// Instances of parallel corpora must match one-to-one in order, key and label.
inline void check_aligned(const std::vector<Example>& a, const std::vector<Example>& b,
                          const std::string& name_a, const std::string& name_b) {
  if (a.size() != b.size())
    throw MisalignedInstances(name_a + " has " + std::to_string(a.size()) + " instances, " +
                              name_b + " has " + std::to_string(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].key != b[i].key || a[i].label != b[i].label)
      throw MisalignedInstances("instance " + std::to_string(i + 1) + " differs: " + a[i].key +
                                " in " + name_a + " vs " + b[i].key + " in " + name_b);
}

struct SchemeRun {
  std::string name;
  std::vector<Example> examples;
  HyperParams hp;
};

struct Comparison {
  std::vector<std::string> schemes;
  std::vector<CvResult> results;
  std::optional<CvResult> baseline;  // sentence mode
  ResultTable by_relation;           // relations x schemes
  std::optional<ResultTable> with_without;  // without sdp, with sdp, Diff.
};

/// Cross-validates every scheme in sdp mode and tabulates per-relation F1.
/// With `baseline_hp`, the first scheme's instances are also run in sentence
/// mode and a with/without-path table is added.
inline Comparison compare_representations(const std::vector<SchemeRun>& runs,
                                          const ExperimentSetup& setup, std::uint64_t seed,
                                          Aggregate agg = Aggregate::pooled,
                                          std::optional<HyperParams> baseline_hp = std::nullopt) {
  if (runs.empty()) throw EmptyDataset("no representations to compare");
  for (std::size_t i = 1; i < runs.size(); ++i)
    check_aligned(runs[0].examples, runs[i].examples, runs[0].name, runs[i].name);

  Comparison cmp;
  cmp.by_relation.rows = relation_rows();
  cmp.by_relation.values.assign(kNumLabels + 1, {});
  for (const auto& run : runs) {
    cmp.schemes.push_back(run.name);
    cmp.results.push_back(cross_validate(run.examples, InputMode::sdp, run.hp, setup, seed));
    cmp.by_relation.columns.push_back(run.name);
    const auto col = relation_column(cmp.results.back(), agg);
    for (std::size_t r = 0; r <= kNumLabels; ++r) cmp.by_relation.values[r].push_back(100.0 * col[r]);
  }
  cmp.by_relation.frequency = gold_frequencies(cmp.results.front());

  if (baseline_hp) {
    cmp.baseline = cross_validate(runs[0].examples, InputMode::sentence, *baseline_hp, setup, seed);
    ResultTable t;
    t.columns = {"without sdp", "with sdp", "Diff."};
    t.rows = relation_rows();
    const auto without = relation_column(*cmp.baseline, agg);
    const auto with = relation_column(cmp.results.front(), agg);
    for (std::size_t r = 0; r <= kNumLabels; ++r)
      t.values.push_back({100.0 * without[r], 100.0 * with[r], 100.0 * (with[r] - without[r])});
    t.frequency = cmp.by_relation.frequency;
    cmp.with_without = std::move(t);
  }
  return cmp;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const HyperParams& hp) {
  return {{"filter_widths", filter_widths_name(hp.filter_widths)},
          {"feature_maps", hp.feature_maps},
          {"activation", activation_name(hp.activation)},
          {"pooling", pooling_name(hp.pooling)},
          {"l2", hp.l2},
          {"learning_rate", hp.learning_rate},
          {"dropout_keep", hp.dropout_keep},
          {"epochs", hp.epochs},
          {"batch_size", hp.batch_size},
          {"seed", hp.seed}};
}

inline nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c)
    per[std::string(kRelationNames[c])] = {
        {"precision", m.precision[c]}, {"recall", m.recall[c]}, {"f1", m.f1[c]}};
  return {{"per_class", per}, {"macro_f1", m.macro_f1}};
}

inline nlohmann::ordered_json to_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : cm.counts) rows.push_back(r);
  return rows;
}

inline nlohmann::ordered_json to_json(const CvResult& r) {
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds)
    folds.push_back({{"train_size", f.train_size},
                     {"test_size", f.test_size},
                     {"class_weights", f.weights},
                     {"epoch_loss", f.epoch_loss},
                     {"confusion", to_json(f.confusion)},
                     {"metrics", to_json(f.metrics)}});
  return {{"mode", mode_name(r.mode)},
          {"seed", r.seed},
          {"hyperparameters", to_json(r.hp)},
          {"max_len", r.max_len},
          {"vocab_size", r.vocab_size},
          {"labels", kRelationNames},
          {"pooled_confusion", to_json(r.pooled)},
          {"pooled", to_json(r.pooled_metrics)},
          {"mean_fold_macro_f1", r.mean_macro_f1},
          {"best_fold_macro_f1", r.best_fold_macro_f1},
          {"best_fold", r.best_fold},
          {"folds", folds}};
}

}  // namespace sdprel
