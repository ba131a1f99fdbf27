#pragma once

// Test-only reference implementations. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "sdprel/treebank.hpp"

namespace sdprel::oracle {

/// Random tree: token i (in a shuffled order) attaches to a uniformly chosen
/// earlier token; the first one is the root.
inline DependencyGraph random_tree(std::mt19937_64& rng, int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  DependencyGraph g;
  g.sent_id = "T";
  g.tokens.resize(static_cast<std::size_t>(n));
  static const char* labels[] = {"nsubj", "dobj", "prep", "pobj", "amod", "det", "nmod", "case"};
  static const char* tags[] = {"NN", "VB", "IN", "JJ", "DT", ""};
  for (int k = 0; k < n; ++k) {
    const int id = order[static_cast<std::size_t>(k)];
    Token& t = g.tokens[static_cast<std::size_t>(id - 1)];
    t.id = id;
    t.form = "w" + std::to_string(id) + "_" + std::to_string(rng() % 1000);
    t.pos = tags[rng() % 6];
    if (k == 0) {
      t.head = 0;
      t.deprel = "root";
    } else {
      t.head = order[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(k))];
      t.deprel = labels[rng() % 8];
    }
  }
  return g;
}

/// Node sequence of the path between two tokens by BFS over undirected arcs.
inline std::vector<std::string> bfs_node_forms(const DependencyGraph& g, int from, int to) {
  const int n = static_cast<int>(g.tokens.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n + 1));
  for (const auto& t : g.tokens)
    if (t.head != 0) {
      adj[static_cast<std::size_t>(t.id)].push_back(t.head);
      adj[static_cast<std::size_t>(t.head)].push_back(t.id);
    }
  std::vector<int> prev(static_cast<std::size_t>(n + 1), -1);
  std::deque<int> queue{from};
  prev[static_cast<std::size_t>(from)] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (prev[static_cast<std::size_t>(v)] < 0) {
        prev[static_cast<std::size_t>(v)] = u;
        queue.push_back(v);
      }
  }
  std::vector<std::string> forms;
  for (int cur = to; cur != 0; cur = prev[static_cast<std::size_t>(cur)])
    forms.push_back(g.tokens[static_cast<std::size_t>(cur - 1)].form);
  std::reverse(forms.begin(), forms.end());
  return forms;
}

inline int depth(const DependencyGraph& g, int id) {
  int d = 0;
  for (int cur = id; g.tokens[static_cast<std::size_t>(cur - 1)].head != 0;
       cur = g.tokens[static_cast<std::size_t>(cur - 1)].head)
    ++d;
  return d;
}

/// LCA by climbing the deeper endpoint until both meet.
inline int naive_lca(const DependencyGraph& g, int a, int b) {
  int da = depth(g, a), db = depth(g, b);
  auto up = [&](int x) { return g.tokens[static_cast<std::size_t>(x - 1)].head; };
  while (da > db) { a = up(a); --da; }
  while (db > da) { b = up(b); --db; }
  while (a != b) { a = up(a); b = up(b); }
  return a;
}

/// Macro-F1 from an expanded list of (gold, predicted) pairs, one class at a
/// time.
inline double naive_macro_f1(const std::array<std::array<long, 6>, 6>& counts,
                             std::array<double, 6>* per_class = nullptr) {
  std::vector<std::pair<int, int>> pairs;
  for (int g = 0; g < 6; ++g)
    for (int p = 0; p < 6; ++p)
      for (long k = 0; k < counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)]; ++k)
        pairs.emplace_back(g, p);
  double total = 0.0;
  for (int c = 0; c < 6; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (auto [g, p] : pairs) {
      if (g == c && p == c) tp += 1;
      if (g != c && p == c) fp += 1;
      if (g == c && p != c) fn += 1;
    }
    const double prec = (tp + fp) == 0 ? 0.0 : tp / (tp + fp);
    const double rec = (tp + fn) == 0 ? 0.0 : tp / (tp + fn);
    const double f = (prec + rec) == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
    if (per_class) (*per_class)[static_cast<std::size_t>(c)] = f;
    total += f;
  }
  return total / 6.0;
}

/// 3x3 determinant and Cramer's-rule solve.
inline double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline std::array<double, 3> cramer_solve(const std::array<std::array<double, 3>, 3>& m,
                                          const std::array<double, 3>& b) {
  const double d = det3(m);
  std::array<double, 3> x{};
  for (int col = 0; col < 3; ++col) {
    auto mc = m;
    for (int r = 0; r < 3; ++r) mc[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = b[static_cast<std::size_t>(r)];
    x[static_cast<std::size_t>(col)] = det3(mc) / d;
  }
  return x;
}

inline double matern52_reference(double dist, double lengthscale, double signal_var) {
  const double r = std::abs(dist) / lengthscale;
  return signal_var * (1 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

/// Monte-Carlo estimate of E[max(N(mu, sigma^2) - best - xi, 0)].
inline double monte_carlo_ei(double mu, double sigma, double best, double xi, int samples,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> n(mu, sigma);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) acc += std::max(n(rng) - best - xi, 0.0);
  return acc / samples;
}

}  // namespace sdprel::oracle
