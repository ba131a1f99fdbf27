#pragma once

// Generated relation corpora whose label is carried by the preposition on the
// path between the two entities.
//
//   <adj> <noun>  <verb> <adverb>  (<prep> <det> <noun>) x 3  .
//
// The first two tokens are entity 1. One of the three prepositional phrases
// holds entity 2 and the class marker; the other two carry markers of other
// classes as distractors, so the sentence alone does not reveal the label.
// Under the "sb" style the preposition heads its object and lies on the path;
// under the "ud" style it is a case dependent of the noun and does not.

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

namespace sdprel::oracle {

struct SyntheticCorpus {
  std::string sb_conll;
  std::string ud_conll;
  std::string entities;
  std::string relations;
};

inline constexpr std::array<const char*, 6> kMarkers = {"for", "from", "of", "in", "about", "than"};

inline SyntheticCorpus make_marker_corpus(int per_class, std::uint64_t seed) {
  static const std::vector<std::string> adjs = {"formal", "neural", "large", "robust", "novel",
                                                "simple", "lexical", "statistical", "deep", "sparse"};
  static const std::vector<std::string> nouns = {
      "model", "parser", "corpus", "grammar", "system", "method", "feature", "lexicon", "tree",
      "tagger", "network", "metric", "task", "treebank", "language", "sentence", "word",
      "algorithm", "framework", "approach", "representation", "dataset", "evaluation", "kernel"};
  static const std::vector<std::string> verbs = {"uses", "improves", "describes", "yields", "extends",
                                                 "supports", "presents", "combines", "outperforms"};
  static const std::vector<std::string> adverbs = {"also", "often", "further", "clearly", "still"};
  static const std::vector<std::string> dets = {"the", "a", "this"};

  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };

  std::vector<int> labels;
  for (int c = 0; c < 6; ++c)
    for (int k = 0; k < per_class; ++k) labels.push_back(c);
  std::shuffle(labels.begin(), labels.end(), rng);

  SyntheticCorpus out;
  int sid = 0;
  for (int label : labels) {
    ++sid;
    const std::string s = "S" + std::to_string(sid);
    std::vector<int> others;
    for (int c = 0; c < 6; ++c)
      if (c != label) others.push_back(c);
    std::shuffle(others.begin(), others.end(), rng);
    const int target_slot = static_cast<int>(rng() % 3);

    // id: 1 adj, 2 noun (entity 1), 3 verb, 4 adverb, 5..13 phrases, 14 "."
    struct Row { std::string form, pos; int sb_head; std::string sb_rel; int ud_head; std::string ud_rel; };
    std::vector<Row> rows;
    rows.push_back({pick(adjs), "JJ", 2, "amod", 2, "amod"});
    rows.push_back({pick(nouns), "NN", 3, "nsubj", 3, "nsubj"});
    rows.push_back({pick(verbs), "VBZ", 0, "root", 0, "root"});
    rows.push_back({pick(adverbs), "RB", 3, "advmod", 3, "advmod"});
    int e2 = 0;
    for (int slot = 0; slot < 3; ++slot) {
      const int prep = 5 + 3 * slot;
      const int noun = prep + 2;
      const int marker = slot == target_slot ? label : others[static_cast<std::size_t>(slot < target_slot ? slot : slot - 1)];
      // distractor phrases attach to the verb or to entity 1
      const int attach = (slot == target_slot || rng() % 2 == 0) ? 3 : 2;
      rows.push_back({kMarkers[static_cast<std::size_t>(marker)], "IN", attach, "prep", noun, "case"});
      rows.push_back({pick(dets), "DT", noun, "det", noun, "det"});
      rows.push_back({pick(nouns), "NN", prep, "pobj", attach, "nmod"});
      if (slot == target_slot) e2 = noun;
    }
    rows.push_back({".", ".", 3, "punct", 3, "punct"});

    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const std::string id = std::to_string(i + 1);
      out.sb_conll += id + '\t' + r.form + "\t_\t" + r.pos + '\t' + r.pos + "\t_\t" +
                      std::to_string(r.sb_head) + '\t' + r.sb_rel + "\t_\t_\n";
      out.ud_conll += id + '\t' + r.form + "\t_\t" + r.pos + '\t' + r.pos + "\t_\t" +
                      std::to_string(r.ud_head) + '\t' + r.ud_rel + "\t_\t_\n";
    }
    out.sb_conll += '\n';
    out.ud_conll += '\n';

    const std::string c1 = "E" + std::to_string(sid) + "_1";
    const std::string c2 = "E" + std::to_string(sid) + "_2";
    out.entities += s + '\t' + c1 + "\t1\t2\t" + rows[0].form + ' ' + rows[1].form + '\n';
    out.entities += s + '\t' + c2 + '\t' + std::to_string(e2) + '\t' + std::to_string(e2) + '\t' +
                    rows[static_cast<std::size_t>(e2 - 1)].form + '\n';
    static const std::array<const char*, 6> names = {"USAGE", "RESULT", "MODEL-FEATURE",
                                                     "PART_WHOLE", "TOPIC", "COMPARE"};
    out.relations += std::string(names[static_cast<std::size_t>(label)]) + '\t' + c1 + '\t' + c2 +
                     "\t\t" + s + '\n';
  }
  return out;
}

}  // namespace sdprel::oracle
