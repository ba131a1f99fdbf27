// Command-line driver: sdprel {extract,train,eval,baseline,tune,compare}.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdprel/pipeline.hpp"

namespace {

struct Flags {
  std::vector<std::string> parses;
  std::vector<std::string> schemes;
  std::string entities, relations, embeddings, mode, out, config, aggregate;
  std::string filters, activation, pooling;
  int folds = 5, iterations = 100, jobs = 1, maps = 0, epochs = 0, batch_size = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0, max_len = 0;
  double l2 = 0, lr = 0, keep = 0;
  bool baseline = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--parses", f.parses, "CoNLL-X/CoNLL-U parse file (repeat per scheme)");
  cmd->add_option("--scheme", f.schemes, "dependency scheme of each --parses file")
      ->check(CLI::IsMember({"conll08", "sb", "ud"}));
  cmd->add_option("--entities", f.entities, "entity span TSV");
  cmd->add_option("--relations", f.relations, "relation TSV");
  cmd->add_option("--embeddings", f.embeddings, "pretrained embedding text file");
  cmd->add_option("--mode", f.mode, "classifier input")->check(CLI::IsMember({"sdp", "sentence"}));
  cmd->add_option("--folds", f.folds, "cross-validation folds");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--config", f.config, "JSON config file; flags override it");
  cmd->add_option("--iterations", f.iterations, "tuning budget (objective evaluations)");
  cmd->add_option("--jobs", f.jobs, "folds trained in parallel");
  cmd->add_option("--dim", f.dim, "embedding dimension per channel");
  cmd->add_option("--max-len", f.max_len, "sequence length after padding");
  cmd->add_option("--aggregate", f.aggregate, "table aggregate")
      ->check(CLI::IsMember({"pooled", "mean", "best"}));
  cmd->add_option("--filters", f.filters, "filter widths, e.g. 3-4-5");
  cmd->add_option("--maps", f.maps, "feature maps per filter width");
  cmd->add_option("--activation", f.activation, "sigmoid|relu|tanh|softplus|identity");
  cmd->add_option("--pooling", f.pooling, "max|avg");
  cmd->add_option("--l2", f.l2, "L2 penalty on output weights");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--keep", f.keep, "dropout keep probability");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_flag("--baseline", f.baseline, "compare: add the sentence-mode baseline");
}

sdprel::RunConfig resolve(const CLI::App& cmd, const Flags& f) {
  sdprel::RunConfig c;
  if (cmd.count("--config")) {
    std::ifstream in(f.config);
    if (!in) throw sdprel::FormatError("cannot read config " + f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw sdprel::FormatError(f.config + ": " + e.what());
    }
    c = sdprel::apply_config_json(j, c);
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--parses")) c.parses = f.parses;
  if (given("--scheme")) c.schemes = f.schemes;
  if (given("--entities")) c.entities = f.entities;
  if (given("--relations")) c.relations = f.relations;
  if (given("--embeddings")) c.embeddings = f.embeddings;
  if (given("--mode")) c.mode = sdprel::parse_mode(f.mode);
  if (given("--folds")) c.folds = f.folds;
  if (given("--seed")) c.seed = f.seed;
  if (given("--out")) c.out = f.out;
  if (given("--iterations")) c.iterations = f.iterations;
  if (given("--jobs")) c.jobs = f.jobs;
  if (given("--dim")) c.dim = f.dim;
  if (given("--max-len")) c.max_len = f.max_len;
  if (given("--aggregate")) c.aggregate = sdprel::parse_aggregate(f.aggregate);
  if (given("--filters")) c.hp.filter_widths = sdprel::parse_filter_widths(f.filters);
  if (given("--maps")) c.hp.feature_maps = f.maps;
  if (given("--activation")) c.hp.activation = sdprel::parse_activation(f.activation);
  if (given("--pooling")) c.hp.pooling = sdprel::parse_pooling(f.pooling);
  if (given("--l2")) c.hp.l2 = f.l2;
  if (given("--lr")) c.hp.learning_rate = f.lr;
  if (given("--keep")) c.hp.dropout_keep = f.keep;
  if (given("--epochs")) c.hp.epochs = f.epochs;
  if (given("--batch-size")) c.hp.batch_size = f.batch_size;
  if (given("--baseline")) c.baseline = f.baseline;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortest-dependency-path relation classification toolkit"};
  app.set_version_flag("--version", std::string(sdprel::kVersion));
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"extract", "write one shortest dependency path per relation instance"},
      {"train", "train a classifier on all instances and save a checkpoint"},
      {"eval", "k-fold cross-validated macro-F1"},
      {"baseline", "eval with whole sentences instead of paths"},
      {"tune", "Bayesian hyperparameter optimization"},
      {"compare", "per-relation F1 across dependency schemes"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto* sub : subs) {
      if (!sub->parsed()) continue;
      const auto cfg = resolve(*sub, flags);
      const std::string name = sub->get_name();
      std::string output;
      if (name == "extract") output = sdprel::cmd_extract(cfg);
      if (name == "train") output = sdprel::cmd_train(cfg);
      if (name == "eval") output = sdprel::cmd_eval(cfg);
      if (name == "baseline") output = sdprel::cmd_baseline(cfg);
      if (name == "tune") output = sdprel::cmd_tune(cfg);
      if (name == "compare") output = sdprel::cmd_compare(cfg);
      std::cout << output;
      if (!output.empty() && output.back() != '\n') std::cout << '\n';
    }
  } catch (const sdprel::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
