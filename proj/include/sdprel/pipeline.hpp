#pragma once

// End-to-end commands: path extraction, training, cross-validated evaluation,
// tuning and representation comparison. Every command is a pure function of
// its input files, its configuration and the seed.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprel/cnn.hpp"
#include "sdprel/errors.hpp"
#include "sdprel/evaluation.hpp"
#include "sdprel/features.hpp"
#include "sdprel/sdp.hpp"
#include "sdprel/search_space.hpp"
#include "sdprel/treebank.hpp"
#include "sdprel/tuner.hpp"

namespace sdprel {

inline constexpr std::string_view kVersion = "sdprel 0.1.0";

struct RunConfig {
  std::vector<std::string> parses;   // one CoNLL file per scheme
  std::vector<std::string> schemes;  // paired with parses
  std::string entities;
  std::string relations;
  std::optional<std::string> embeddings;
  InputMode mode = InputMode::sdp;
  int folds = 5;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int iterations = 100;
  int jobs = 1;
  std::size_t dim = 50;
  std::optional<std::size_t> max_len;
  Aggregate aggregate = Aggregate::pooled;
  bool baseline = false;  // compare: add the sentence-mode column
  HyperParams hp;
  std::map<std::string, HyperParams> scheme_hp;  // compare: per-scheme overrides

  std::uint64_t run_seed() const { return *seed; }
};

inline HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams hp) {
  if (j.contains("filter_widths")) hp.filter_widths = parse_filter_widths(j["filter_widths"].get<std::string>());
  if (j.contains("feature_maps")) hp.feature_maps = j["feature_maps"].get<int>();
  if (j.contains("activation")) hp.activation = parse_activation(j["activation"].get<std::string>());
  if (j.contains("pooling")) hp.pooling = parse_pooling(j["pooling"].get<std::string>());
  if (j.contains("l2")) hp.l2 = j["l2"].get<double>();
  if (j.contains("learning_rate")) hp.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("dropout_keep")) hp.dropout_keep = j["dropout_keep"].get<double>();
  if (j.contains("epochs")) hp.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) hp.batch_size = j["batch_size"].get<int>();
  return hp;
}

/// Fields present in `j` override `cfg`.
inline RunConfig apply_config_json(const nlohmann::json& j, RunConfig cfg) {
  try {
    if (j.contains("parses")) cfg.parses = j["parses"].get<std::vector<std::string>>();
    if (j.contains("schemes")) cfg.schemes = j["schemes"].get<std::vector<std::string>>();
    if (j.contains("entities")) cfg.entities = j["entities"].get<std::string>();
    if (j.contains("relations")) cfg.relations = j["relations"].get<std::string>();
    if (j.contains("embeddings")) cfg.embeddings = j["embeddings"].get<std::string>();
    if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("folds")) cfg.folds = j["folds"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("iterations")) cfg.iterations = j["iterations"].get<int>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
    if (j.contains("dim")) cfg.dim = j["dim"].get<std::size_t>();
    if (j.contains("max_len")) cfg.max_len = j["max_len"].get<std::size_t>();
    if (j.contains("aggregate")) cfg.aggregate = parse_aggregate(j["aggregate"].get<std::string>());
    if (j.contains("baseline")) cfg.baseline = j["baseline"].get<bool>();
    if (j.contains("hyperparameters")) cfg.hp = hyperparams_from_json(j["hyperparameters"], cfg.hp);
    if (j.contains("scheme_hyperparameters"))
      for (const auto& [name, value] : j["scheme_hyperparameters"].items())
        cfg.scheme_hp[name] = hyperparams_from_json(value, cfg.hp);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["parses"] = c.parses;
  j["schemes"] = c.schemes;
  j["entities"] = c.entities;
  j["relations"] = c.relations;
  j["embeddings"] = c.embeddings ? nlohmann::ordered_json(*c.embeddings) : nlohmann::ordered_json();
  j["mode"] = mode_name(c.mode);
  j["folds"] = c.folds;
  j["seed"] = c.seed ? nlohmann::ordered_json(*c.seed) : nlohmann::ordered_json();
  j["out"] = c.out;
  j["iterations"] = c.iterations;
  j["jobs"] = c.jobs;
  j["dim"] = c.dim;
  j["max_len"] = c.max_len ? nlohmann::ordered_json(*c.max_len) : nlohmann::ordered_json();
  j["aggregate"] = aggregate_name(c.aggregate);
  j["baseline"] = c.baseline;
  j["hyperparameters"] = to_json(c.hp);
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [name, hp] : c.scheme_hp) per[name] = to_json(hp);
  j["scheme_hyperparameters"] = per;
  return j;
}

/// Required inputs are present and readable, the seed is set, and every
/// parse file has a scheme.
inline void validate(const RunConfig& c) {
  if (!c.seed) throw FormatError("a --seed is required");
  if (c.parses.empty()) throw FormatError("at least one --parses file is required");
  if (c.parses.size() != c.schemes.size())
    throw FormatError("each --parses file needs a matching --scheme");
  for (const auto& s : c.schemes) parse_scheme(s);
  auto must_exist = [](const std::string& path, const char* what) {
    if (path.empty()) throw FormatError(std::string("missing --") + what);
    if (!std::filesystem::is_regular_file(path))
      throw FormatError(std::string(what) + " file not found: " + path);
  };
  for (const auto& p : c.parses) must_exist(p, "parses");
  must_exist(c.entities, "entities");
  must_exist(c.relations, "relations");
  if (c.embeddings) must_exist(*c.embeddings, "embeddings");
  if (c.folds < 2) throw FormatError("--folds must be at least 2");
  if (c.jobs < 1) throw FormatError("--jobs must be at least 1");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// ---------------------------------------------------------------------------
// Corpus construction

struct ExtractedInstance {
  RelationInstance relation;
  Sdp path;                            // decoded
  std::vector<std::string> sentence;   // entity-encoded sentence, codes decoded
};

/// Encodes entities in every sentence and extracts one decoded path per
/// relation, oriented from the first to the second entity of the annotation.
inline std::vector<ExtractedInstance> extract_instances(const std::vector<DependencyGraph>& graphs,
                                                        const SpanTable& spans,
                                                        const std::vector<RelationInstance>& relations) {
  std::map<std::string, EncodedGraph> encoded;
  for (const auto& g : graphs) {
    auto it = spans.find(g.sent_id);
    encoded[g.sent_id] = encode_entities(g, it == spans.end() ? std::vector<EntitySpan>{} : it->second);
  }
  std::vector<ExtractedInstance> out;
  for (const auto& r : relations) {
    const auto [a, b] = link_relation(r, encoded);
    const auto& eg = encoded.at(r.sentence_ref);
    ExtractedInstance inst;
    inst.relation = r;
    inst.path = decode_entities(shortest_path(eg.graph, a, b), eg.codes);
    for (const auto& t : eg.graph.tokens) {
      auto code = eg.codes.find(t.form);
      inst.sentence.push_back(underscore_spaces(code == eg.codes.end() ? t.form : code->second));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::vector<Example> to_examples(const std::vector<ExtractedInstance>& instances) {
  std::vector<Example> out;
  for (const auto& inst : instances) {
    Example ex;
    ex.key = inst.relation.sentence_ref + ':' + inst.relation.first_entity + ':' +
             inst.relation.second_entity;
    ex.label = inst.relation.label;
    ex.reversed = inst.relation.reversed;
    ex.path = path_items(inst.path);
    ex.sentence = word_items(inst.sentence);
    out.push_back(std::move(ex));
  }
  return out;
}

namespace detail {

template <typename Fn>
auto with_file_context(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const CycleError& e) {
    throw CycleError(path + ": " + e.what());
  } catch (const MultiRootError& e) {
    throw MultiRootError(path + ": " + e.what());
  } catch (const UnknownLabelError& e) {
    throw UnknownLabelError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Reads the scheme's parse file plus the shared entity and relation files.
inline std::vector<ExtractedInstance> load_scheme(const RunConfig& c, std::size_t scheme_index) {
  const auto& parse_path = c.parses.at(scheme_index);
  const auto scheme = parse_scheme(c.schemes.at(scheme_index));
  const auto graphs = detail::with_file_context(parse_path, [&] { return parse_conll(read_file(parse_path), scheme); });
  const auto spans = detail::with_file_context(c.entities, [&] { return load_entity_spans(read_file(c.entities)); });
  const auto relations = detail::with_file_context(c.relations, [&] { return load_relations(read_file(c.relations)); });
  return extract_instances(graphs, spans, relations);
}

inline ExperimentSetup setup_of(const RunConfig& c) {
  ExperimentSetup s;
  s.dim = c.dim;
  if (c.embeddings) s.embeddings = read_file(*c.embeddings);
  s.max_len = c.max_len;
  s.folds = c.folds;
  s.jobs = c.jobs;
  return s;
}

inline nlohmann::ordered_json report_header(const RunConfig& c, std::string_view command) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = to_json(c);
  return j;
}

// ---------------------------------------------------------------------------
// Commands

/// Writes paths.sdp, labels.tsv and sentences.txt; returns the summary line.
inline std::string cmd_extract(const RunConfig& c) {
  validate(c);
  const auto instances = load_scheme(c, 0);
  std::string paths, labels, sentences;
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& inst : instances) {
    paths += serialize_sdp(inst.path) + '\n';
    labels += std::string(relation_name(inst.relation.label)) + '\t' +
              (inst.relation.reversed ? "REVERSE" : "") + '\n';
    for (std::size_t i = 0; i < inst.sentence.size(); ++i)
      sentences += (i ? " " : "") + inst.sentence[i];
    sentences += '\n';
    ++histogram[inst.path.arc_count()];
  }
  const std::filesystem::path out(c.out);
  write_file(out / "paths.sdp", paths);
  write_file(out / "labels.tsv", labels);
  write_file(out / "sentences.txt", sentences);
  std::string summary = "instances: " + std::to_string(instances.size()) + "; path lengths (arcs):";
  for (const auto& [len, count] : histogram)
    summary += ' ' + std::to_string(len) + ':' + std::to_string(count);
  return summary;
}

/// Trains on every instance; writes model.ckpt and train_report.json.
inline std::string cmd_train(const RunConfig& c) {
  validate(c);
  const auto examples = to_examples(load_scheme(c, 0));
  const auto setup = setup_of(c);
  const auto data = prepare(examples, c.mode, setup, static_cast<std::size_t>(widest_filter(c.hp)),
                            c.run_seed());
  if (data.encoded.empty()) throw EmptyDataset("no relation instances to train on");
  HyperParams hp = c.hp;
  hp.seed = sub_seed(c.run_seed(), "train");
  const auto weights = class_weights(labels_of(data.encoded));
  CnnModel model = init_model(data.static_channel, hp, data.vocab.hash());
  const auto stats = train(model, data.encoded, hp, weights);
  ConfusionMatrix cm;
  for (const auto& e : data.encoded) cm.add(e.label_index, predict(model, e, hp));

  auto report = report_header(c, "train");
  report["hyperparameters"] = to_json(hp);
  report["instances"] = data.encoded.size();
  report["vocab_size"] = data.vocab.size();
  report["max_len"] = data.max_len;
  report["class_weights"] = weights;
  report["epoch_loss"] = stats.epoch_loss;
  report["training_confusion"] = to_json(cm);
  report["training_metrics"] = to_json(macro_f1(cm));
  const std::filesystem::path out(c.out);
  write_file(out / "model.ckpt", serialize_model(model));
  write_file(out / "train_report.json", report.dump(2) + '\n');
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", macro_f1(cm).macro_f1);
  return "trained on " + std::to_string(data.encoded.size()) + " instances; training macro-F1 " + buf;
}

/// k-fold cross-validation; writes eval_report.json, eval.tsv and eval.txt.
inline std::string cmd_eval(const RunConfig& c) {
  validate(c);
  const auto examples = to_examples(load_scheme(c, 0));
  const auto res = cross_validate(examples, c.mode, c.hp, setup_of(c), c.run_seed());

  auto report = report_header(c, "eval");
  report["result"] = to_json(res);
  ResultTable table;
  table.columns = {"pooled", "mean", "best"};
  table.rows = relation_rows();
  const auto pooled = relation_column(res, Aggregate::pooled);
  const auto mean = relation_column(res, Aggregate::mean);
  const auto best = relation_column(res, Aggregate::best_fold);
  for (std::size_t r = 0; r <= kNumLabels; ++r)
    table.values.push_back({100 * pooled[r], 100 * mean[r], 100 * best[r]});
  table.frequency = gold_frequencies(res);

  const std::filesystem::path out(c.out);
  write_file(out / "eval_report.json", report.dump(2) + '\n');
  write_file(out / "eval.tsv", table.to_tsv());
  write_file(out / "eval.txt", table.to_text());
  return table.to_text();
}

/// Sentence-mode shortcut for eval.
inline std::string cmd_baseline(RunConfig c) {
  c.mode = InputMode::sentence;
  return cmd_eval(c);
}

/// Bayesian optimization of the mean k-fold macro-F1. Writes tune_trace.tsv,
/// best_config.json and tune_summary.tsv.
inline std::string cmd_tune(const RunConfig& c, const TuneOptions& base = {}) {
  validate(c);
  if (c.iterations < base.initial_design + 1)
    throw FormatError("--iterations must be at least " + std::to_string(base.initial_design + 1));
  const auto examples = to_examples(load_scheme(c, 0));
  const auto setup = setup_of(c);
  const auto space = hyperparameter_space();

  // Encodings depend only on the widest filter, so cache them per width.
  std::map<std::size_t, PreparedData> prepared;
  auto data_for = [&](const HyperParams& hp) -> const PreparedData& {
    const auto min_len = static_cast<std::size_t>(widest_filter(hp));
    auto it = prepared.find(min_len);
    if (it == prepared.end())
      it = prepared.emplace(min_len, prepare(examples, c.mode, setup, min_len, c.run_seed())).first;
    return it->second;
  };
  auto objective = [&](const Point& p) {
    const HyperParams hp = to_hyperparams(p, c.hp);
    return cross_validate(data_for(hp), hp, c.run_seed(), c.folds, c.jobs).mean_macro_f1;
  };

  const double default_f1 = cross_validate(data_for(c.hp), c.hp, c.run_seed(), c.folds, c.jobs).mean_macro_f1;
  TuneOptions opt = base;
  opt.iterations = c.iterations;
  opt.seed = sub_seed(c.run_seed(), "tuner");
  const auto result = tune(objective, space, opt);
  const HyperParams best = to_hyperparams(result.best, c.hp);

  auto best_json = report_header(c, "tune");
  best_json["best"] = to_json(best);
  best_json["best_mean_macro_f1"] = result.best_value;
  best_json["default_mean_macro_f1"] = default_f1;
  best_json["evaluations"] = result.trace.size();

  char buf[256];
  std::string summary =
      "representation\tfilter_size\tfeature_maps\tactivation\tl2\tlearning_rate\tdropout_keep\t"
      "f1_default\tf1_optimal\n";
  std::snprintf(buf, sizeof(buf), "%s\t%s\t%d\t%s\t%.2e\t%.2e\t%.2f\t%.2f\t%.2f\n",
                c.schemes.front().c_str(), filter_widths_name(best.filter_widths).c_str(),
                best.feature_maps, std::string(activation_name(best.activation)).c_str(), best.l2,
                best.learning_rate, best.dropout_keep, 100 * default_f1, 100 * result.best_value);
  summary += buf;

  const std::filesystem::path out(c.out);
  write_file(out / "tune_trace.tsv", format_trace(space, result));
  write_file(out / "best_config.json", best_json.dump(2) + '\n');
  write_file(out / "tune_summary.tsv", summary);
  return summary;
}

/// Per-relation table over every --parses/--scheme pair, plus the
/// with/without-path table when c.baseline is set.
inline std::string cmd_compare(const RunConfig& c) {
  validate(c);
  std::vector<SchemeRun> runs;
  for (std::size_t i = 0; i < c.parses.size(); ++i) {
    SchemeRun run;
    run.name = c.schemes[i];
    run.examples = to_examples(load_scheme(c, i));
    auto it = c.scheme_hp.find(run.name);
    run.hp = it == c.scheme_hp.end() ? c.hp : it->second;
    runs.push_back(std::move(run));
  }
  std::optional<HyperParams> baseline;
  if (c.baseline) baseline = c.hp;
  const auto cmp = compare_representations(runs, setup_of(c), c.run_seed(), c.aggregate, baseline);

  auto report = report_header(c, "compare");
  report["aggregate"] = aggregate_name(c.aggregate);
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < cmp.schemes.size(); ++i) results[cmp.schemes[i]] = to_json(cmp.results[i]);
  report["results"] = results;
  if (cmp.baseline) report["baseline"] = to_json(*cmp.baseline);

  const std::filesystem::path out(c.out);
  write_file(out / "compare_by_relation.tsv", cmp.by_relation.to_tsv());
  write_file(out / "compare_by_relation.txt", cmp.by_relation.to_text());
  std::string text = cmp.by_relation.to_text();
  if (cmp.with_without) {
    write_file(out / "compare_with_without.tsv", cmp.with_without->to_tsv());
    write_file(out / "compare_with_without.txt", cmp.with_without->to_text());
    text += '\n' + cmp.with_without->to_text();
  }
  write_file(out / "compare_report.json", report.dump(2) + '\n');
  return text;
}

}  // namespace sdprel
