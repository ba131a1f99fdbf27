#pragma once

// Two-channel convolutional relation classifier.
//
//   lookup:   each position becomes [static(w) ; nonstatic(w)], 2d values
//   conv:     per filter width, `feature_maps` kernels + bias + activation
//   pool:     max or mean over the positions covered by real tokens
//   dropout:  inverted Bernoulli mask on the pooled vector (training only)
//   output:   affine layer + softmax over the six relation labels
//
// Gradients are analytic. The static channel is never written after
// construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sdprel/errors.hpp"
#include "sdprel/features.hpp"
#include "sdprel/random.hpp"
#include "sdprel/treebank.hpp"

namespace sdprel {

enum class Activation { sigmoid, relu, tanh, softplus, identity };
enum class Pooling { max, avg };

inline constexpr std::array<Activation, 5> kActivations = {
    Activation::sigmoid, Activation::relu, Activation::tanh, Activation::softplus,
    Activation::identity};

inline std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : kActivations)
    if (activation_name(a) == s) return a;
  if (s == "iden") return Activation::identity;
  throw FormatError("unknown activation '" + std::string(s) + "'");
}

inline std::string_view pooling_name(Pooling p) { return p == Pooling::max ? "max" : "avg"; }

inline Pooling parse_pooling(std::string_view s) {
  if (s == "max") return Pooling::max;
  if (s == "avg") return Pooling::avg;
  throw FormatError("unknown pooling '" + std::string(s) + "'");
}

/// Tunable model settings plus fixed training settings. Defaults are the
/// untuned configuration {3-4-5, 128, ReLU, max, 3, 1e-3, 0.5}.
struct HyperParams {
  std::vector<int> filter_widths{3, 4, 5};
  int feature_maps = 128;  // per width
  Activation activation = Activation::relu;
  Pooling pooling = Pooling::max;
  double l2 = 3.0;
  double learning_rate = 1e-3;
  double dropout_keep = 0.5;  // probability that a pooled feature is kept

  int epochs = 30;
  int batch_size = 50;
  std::uint64_t seed = 1;

  bool operator==(const HyperParams&) const = default;
};

inline std::string filter_widths_name(const std::vector<int>& widths) {
  std::string s;
  for (int w : widths) {
    if (!s.empty()) s += '-';
    s += std::to_string(w);
  }
  return s;
}

inline std::vector<int> parse_filter_widths(std::string_view s) {
  std::vector<int> out;
  for (const auto& part : detail::split(s, '-')) {
    auto w = detail::to_int(part);
    if (!w || *w < 1) throw FormatError("bad filter widths '" + std::string(s) + "'");
    out.push_back(*w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

struct FilterBank {
  int width = 0;
  std::vector<double> weights;  // feature_maps x (width * 2d), row-major
  std::vector<double> bias;     // feature_maps

  bool operator==(const FilterBank&) const = default;
};

/// Every trainable tensor. Gradients and optimizer moments use the same shape.
struct CnnParams {
  EmbeddingMatrix nonstatic;
  std::vector<FilterBank> filters;
  std::vector<double> fc_weights;  // features x kNumLabels, row-major
  std::vector<double> fc_bias;     // kNumLabels

  bool operator==(const CnnParams&) const = default;

  CnnParams zeros_like() const {
    CnnParams z;
    z.nonstatic = EmbeddingMatrix(nonstatic.rows, nonstatic.dim);
    for (const auto& f : filters)
      z.filters.push_back({f.width, std::vector<double>(f.weights.size()),
                           std::vector<double>(f.bias.size())});
    z.fc_weights.assign(fc_weights.size(), 0.0);
    z.fc_bias.assign(fc_bias.size(), 0.0);
    return z;
  }

  void set_zero() {
    std::fill(nonstatic.data.begin(), nonstatic.data.end(), 0.0);
    for (auto& f : filters) {
      std::fill(f.weights.begin(), f.weights.end(), 0.0);
      std::fill(f.bias.begin(), f.bias.end(), 0.0);
    }
    std::fill(fc_weights.begin(), fc_weights.end(), 0.0);
    std::fill(fc_bias.begin(), fc_bias.end(), 0.0);
  }
};

/// Calls fn(name, span) for each tensor in a fixed order.
template <typename P, typename Fn>
void for_each_tensor(P& params, Fn&& fn) {
  fn(std::string("nonstatic"), std::span(params.nonstatic.data));
  for (auto& f : params.filters) {
    fn("conv" + std::to_string(f.width) + ".weights", std::span(f.weights));
    fn("conv" + std::to_string(f.width) + ".bias", std::span(f.bias));
  }
  fn(std::string("fc.weights"), std::span(params.fc_weights));
  fn(std::string("fc.bias"), std::span(params.fc_bias));
}

struct AdamState {
  CnnParams first;
  CnnParams second;
  long step = 0;

  bool operator==(const AdamState&) const = default;
};

struct CnnModel {
  std::size_t dim = 0;           // per channel
  std::vector<int> filter_widths;
  int feature_maps = 0;
  std::uint64_t vocab_hash = 0;
  EmbeddingMatrix static_channel;
  CnnParams params;
  AdamState optimizer;

  std::size_t vocab_size() const { return static_channel.rows; }
  std::size_t features() const { return filter_widths.size() * static_cast<std::size_t>(feature_maps); }

  bool operator==(const CnnModel&) const = default;
};

/// Non-static channel gets its own seeded draw, filters are Glorot-uniform,
/// and the output layer starts at zero so an untrained model predicts the
/// uniform distribution.
inline CnnModel init_model(EmbeddingMatrix static_channel, const HyperParams& hp,
                           std::uint64_t vocab_hash = 0) {
  if (hp.filter_widths.empty() || hp.feature_maps < 1)
    throw ShapeMismatch("model needs at least one filter width and one feature map");
  CnnModel m;
  m.dim = static_channel.dim;
  m.filter_widths = hp.filter_widths;
  m.feature_maps = hp.feature_maps;
  m.vocab_hash = vocab_hash;
  m.params.nonstatic =
      random_embeddings(static_channel.rows, static_channel.dim, sub_seed(hp.seed, "nonstatic-init"));
  m.static_channel = std::move(static_channel);

  Rng rng(sub_seed(hp.seed, "filter-init"));
  for (int w : hp.filter_widths) {
    if (w < 1) throw ShapeMismatch("filter width must be positive");
    FilterBank f;
    f.width = w;
    const std::size_t fan_in = static_cast<std::size_t>(w) * 2 * m.dim;
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + static_cast<std::size_t>(hp.feature_maps)));
    std::uniform_real_distribution<double> u(-a, a);
    f.weights.resize(static_cast<std::size_t>(hp.feature_maps) * fan_in);
    for (auto& x : f.weights) x = u(rng);
    f.bias.assign(static_cast<std::size_t>(hp.feature_maps), 0.0);
    m.params.filters.push_back(std::move(f));
  }
  m.params.fc_weights.assign(m.features() * kNumLabels, 0.0);
  m.params.fc_bias.assign(kNumLabels, 0.0);
  m.optimizer.first = m.params.zeros_like();
  m.optimizer.second = m.params.zeros_like();
  return m;
}

// ---------------------------------------------------------------------------
// Forward / loss / backward

namespace detail {

inline double sigmoid(double c) {
  if (c >= 0) return 1.0 / (1.0 + std::exp(-c));
  const double e = std::exp(c);
  return e / (1.0 + e);
}

inline double activate(Activation a, double c) {
  switch (a) {
    case Activation::sigmoid: return sigmoid(c);
    case Activation::relu: return c > 0 ? c : 0.0;
    case Activation::tanh: return std::tanh(c);
    case Activation::softplus: return c > 0 ? c + std::log1p(std::exp(-c)) : std::log1p(std::exp(c));
    case Activation::identity: return c;
  }
  return c;
}

inline double activate_grad(Activation a, double c) {
  switch (a) {
    case Activation::sigmoid: {
      const double s = sigmoid(c);
      return s * (1.0 - s);
    }
    case Activation::relu: return c > 0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(c);
      return 1.0 - t * t;
    }
    case Activation::softplus: return sigmoid(c);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

}  // namespace detail

using Probabilities = std::array<double, kNumLabels>;

struct ForwardCache {
  std::size_t true_len = 0;
  std::vector<int> indices;     // first true_len input indices
  std::vector<double> input;    // positions x 2d; zero beyond true_len
  std::vector<std::vector<double>> pre;  // per width: maps x pooled positions
  std::vector<std::size_t> pooled_positions;  // per width
  std::vector<std::size_t> argmax;            // per feature (max pooling)
  std::vector<double> pooled;                 // per feature, before dropout
  std::vector<double> dropout_scale;          // per feature: mask / keep
  std::vector<double> hidden;                 // pooled * dropout_scale
  std::array<double, kNumLabels> logits{};
  Probabilities probs{};
};

inline void check_consistent(const CnnModel& model, const HyperParams& hp) {
  if (hp.filter_widths != model.filter_widths || hp.feature_maps != model.feature_maps)
    throw ShapeMismatch("hyperparameters do not match the model architecture");
  if (model.params.nonstatic.rows != model.static_channel.rows ||
      model.params.nonstatic.dim != model.static_channel.dim)
    throw ShapeMismatch("embedding channels disagree in shape");
}

/// `rng` is only consulted when train_mode is set and dropout_keep < 1.
inline ForwardCache forward(const CnnModel& model, const EncodedInstance& enc,
                            const HyperParams& hp, bool train_mode, Rng* rng = nullptr) {
  check_consistent(model, hp);
  const std::size_t d = model.dim;
  const std::size_t d2 = 2 * d;
  const std::size_t len = enc.indices.size();
  const int widest = *std::max_element(model.filter_widths.begin(), model.filter_widths.end());
  if (len < static_cast<std::size_t>(widest))
    throw ShapeMismatch("sequence length " + std::to_string(len) +
                        " shorter than widest filter " + std::to_string(widest));
  if (enc.true_len > len) throw ShapeMismatch("true_len exceeds sequence length");

  ForwardCache c;
  c.true_len = enc.true_len;
  c.indices.assign(enc.indices.begin(), enc.indices.begin() + static_cast<std::ptrdiff_t>(enc.true_len));
  c.input.assign(len * d2, 0.0);
  for (std::size_t t = 0; t < enc.true_len; ++t) {
    const int idx = enc.indices[t];
    if (idx < 0 || static_cast<std::size_t>(idx) >= model.vocab_size())
      throw ShapeMismatch("index " + std::to_string(idx) + " outside vocabulary");
    auto s = model.static_channel.row(static_cast<std::size_t>(idx));
    auto n = model.params.nonstatic.row(static_cast<std::size_t>(idx));
    std::copy(s.begin(), s.end(), c.input.begin() + static_cast<std::ptrdiff_t>(t * d2));
    std::copy(n.begin(), n.end(), c.input.begin() + static_cast<std::ptrdiff_t>(t * d2 + d));
  }

  const std::size_t maps = static_cast<std::size_t>(model.feature_maps);
  const std::size_t nf = model.features();
  c.pooled.assign(nf, 0.0);
  c.argmax.assign(nf, 0);
  for (std::size_t wi = 0; wi < model.params.filters.size(); ++wi) {
    const FilterBank& f = model.params.filters[wi];
    const std::size_t w = static_cast<std::size_t>(f.width);
    const std::size_t span = w * d2;
    const std::size_t positions =
        enc.true_len >= w ? enc.true_len - w + 1 : std::size_t{1};
    c.pooled_positions.push_back(positions);
    std::vector<double> pre(maps * positions);
    for (std::size_t k = 0; k < maps; ++k) {
      const double* kernel = f.weights.data() + k * span;
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_p = 0;
      double sum = 0.0;
      for (std::size_t p = 0; p < positions; ++p) {
        const double* window = c.input.data() + p * d2;
        double z = f.bias[k];
        for (std::size_t j = 0; j < span; ++j) z += kernel[j] * window[j];
        pre[k * positions + p] = z;
        const double a = detail::activate(hp.activation, z);
        if (a > best) {
          best = a;
          best_p = p;
        }
        sum += a;
      }
      const std::size_t fi = wi * maps + k;
      if (hp.pooling == Pooling::max) {
        c.pooled[fi] = best;
        c.argmax[fi] = best_p;
      } else {
        c.pooled[fi] = sum / static_cast<double>(positions);
      }
    }
    c.pre.push_back(std::move(pre));
  }

  c.dropout_scale.assign(nf, 1.0);
  if (train_mode && hp.dropout_keep < 1.0) {
    if (!rng) throw ShapeMismatch("dropout needs a random generator in training mode");
    std::bernoulli_distribution keep(hp.dropout_keep);
    for (auto& s : c.dropout_scale) s = keep(*rng) ? 1.0 / hp.dropout_keep : 0.0;
  }
  c.hidden.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) c.hidden[i] = c.pooled[i] * c.dropout_scale[i];

  for (std::size_t l = 0; l < kNumLabels; ++l) c.logits[l] = model.params.fc_bias[l];
  for (std::size_t i = 0; i < nf; ++i) {
    const double h = c.hidden[i];
    if (h == 0.0) continue;
    const double* row = model.params.fc_weights.data() + i * kNumLabels;
    for (std::size_t l = 0; l < kNumLabels; ++l) c.logits[l] += h * row[l];
  }
  const double top = *std::max_element(c.logits.begin(), c.logits.end());
  double z = 0.0;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    c.probs[l] = std::exp(c.logits[l] - top);
    z += c.probs[l];
  }
  for (auto& p : c.probs) p /= z;
  return c;
}

using ClassWeights = std::array<double, kNumLabels>;

inline ClassWeights uniform_class_weights() {
  ClassWeights w;
  w.fill(1.0);
  return w;
}

/// w(c) = N / (6 N_c). Every class must be present.
inline ClassWeights class_weights(std::span<const int> labels) {
  std::array<std::size_t, kNumLabels> counts{};
  for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
  ClassWeights w{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (counts[c] == 0)
      throw TooFewInstances("class " + std::string(kRelationNames[c]) +
                            " has no training instances");
    w[c] = static_cast<double>(labels.size()) /
           (static_cast<double>(kNumLabels) * static_cast<double>(counts[c]));
  }
  return w;
}

inline double l2_penalty(const CnnModel& model, const HyperParams& hp) {
  double s = 0.0;
  for (double x : model.params.fc_weights) s += x * x;
  return 0.5 * hp.l2 * s;
}

/// Weighted cross-entropy on a probability vector plus the L2 penalty on the
/// output weights. probs[gold] is clamped at 1e-30.
inline double loss(const Probabilities& probs, int gold, const ClassWeights& weights,
                   const CnnModel& model, const HyperParams& hp) {
  const auto g = static_cast<std::size_t>(gold);
  return weights[g] * -std::log(std::max(probs[g], 1e-30)) + l2_penalty(model, hp);
}

/// Same objective evaluated through log-sum-exp of the cached logits.
inline double loss(const ForwardCache& cache, int gold, const ClassWeights& weights,
                   const CnnModel& model, const HyperParams& hp) {
  const auto g = static_cast<std::size_t>(gold);
  const double top = *std::max_element(cache.logits.begin(), cache.logits.end());
  double z = 0.0;
  for (double l : cache.logits) z += std::exp(l - top);
  const double nll = top + std::log(z) - cache.logits[g];
  return weights[g] * nll + l2_penalty(model, hp);
}

/// Adds `scale` times the data-term gradient of one instance into `grad`.
/// The L2 term is not included.
inline void accumulate_gradients(const CnnModel& model, const ForwardCache& c, int gold,
                                 const ClassWeights& weights, const HyperParams& hp,
                                 CnnParams& grad, double scale = 1.0) {
  const std::size_t d = model.dim;
  const std::size_t d2 = 2 * d;
  const std::size_t maps = static_cast<std::size_t>(model.feature_maps);
  const std::size_t nf = model.features();
  const auto g = static_cast<std::size_t>(gold);

  std::array<double, kNumLabels> dz{};
  for (std::size_t l = 0; l < kNumLabels; ++l)
    dz[l] = scale * weights[g] * (c.probs[l] - (l == g ? 1.0 : 0.0));
  if (weights[g] == 0.0) return;

  std::vector<double> dpooled(nf, 0.0);
  for (std::size_t i = 0; i < nf; ++i) {
    const double* row = model.params.fc_weights.data() + i * kNumLabels;
    double* grow = grad.fc_weights.data() + i * kNumLabels;
    double acc = 0.0;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      grow[l] += c.hidden[i] * dz[l];
      acc += row[l] * dz[l];
    }
    dpooled[i] = acc * c.dropout_scale[i];
  }
  for (std::size_t l = 0; l < kNumLabels; ++l) grad.fc_bias[l] += dz[l];

  std::vector<double> dinput(c.input.size(), 0.0);
  for (std::size_t wi = 0; wi < model.params.filters.size(); ++wi) {
    const FilterBank& f = model.params.filters[wi];
    FilterBank& gf = grad.filters[wi];
    const std::size_t span = static_cast<std::size_t>(f.width) * d2;
    const std::size_t positions = c.pooled_positions[wi];
    const auto& pre = c.pre[wi];
    for (std::size_t k = 0; k < maps; ++k) {
      const std::size_t fi = wi * maps + k;
      if (dpooled[fi] == 0.0) continue;
      std::size_t p_begin = 0;
      std::size_t p_end = positions;
      double dpool = dpooled[fi];
      if (hp.pooling == Pooling::max) {
        p_begin = c.argmax[fi];
        p_end = p_begin + 1;
      } else {
        dpool /= static_cast<double>(positions);
      }
      const double* kernel = f.weights.data() + k * span;
      double* gkernel = gf.weights.data() + k * span;
      for (std::size_t p = p_begin; p < p_end; ++p) {
        const double dpre = dpool * detail::activate_grad(hp.activation, pre[k * positions + p]);
        if (dpre == 0.0) continue;
        gf.bias[k] += dpre;
        const double* window = c.input.data() + p * d2;
        double* dwindow = dinput.data() + p * d2;
        for (std::size_t j = 0; j < span; ++j) {
          gkernel[j] += dpre * window[j];
          dwindow[j] += dpre * kernel[j];
        }
      }
    }
  }

  // Only the non-static half of each real position is trainable.
  for (std::size_t t = 0; t < c.true_len; ++t) {
    const int idx = c.indices[t];
    if (idx == Vocab::kPad) continue;
    auto row = grad.nonstatic.row(static_cast<std::size_t>(idx));
    const double* src = dinput.data() + t * d2 + d;
    for (std::size_t e = 0; e < d; ++e) row[e] += src[e];
  }
}

inline void add_l2_gradient(const CnnModel& model, const HyperParams& hp, CnnParams& grad) {
  for (std::size_t i = 0; i < grad.fc_weights.size(); ++i)
    grad.fc_weights[i] += hp.l2 * model.params.fc_weights[i];
}

/// Full gradient of loss() for one instance.
inline CnnParams backward(const CnnModel& model, const ForwardCache& cache, int gold,
                          const ClassWeights& weights, const HyperParams& hp) {
  CnnParams grad = model.params.zeros_like();
  accumulate_gradients(model, cache, gold, weights, hp, grad);
  add_l2_gradient(model, hp, grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Training

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline void adam_step(CnnModel& model, const CnnParams& grad, double learning_rate) {
  auto& opt = model.optimizer;
  ++opt.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.step));

  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  for_each_tensor(model.params, [&](const std::string&, std::span<double> s) { p.push_back(s); });
  for_each_tensor(opt.first, [&](const std::string&, std::span<double> s) { m.push_back(s); });
  for_each_tensor(opt.second, [&](const std::string&, std::span<double> s) { v.push_back(s); });
  for_each_tensor(grad, [&](const std::string&, std::span<const double> s) { g.push_back(s); });

  for (std::size_t t = 0; t < p.size(); ++t) {
    // PAD row of the non-static channel stays zero.
    const std::size_t first = t == 0 ? model.dim : 0;
    for (std::size_t i = first; i < p[t].size(); ++i) {
      m[t][i] = kAdamBeta1 * m[t][i] + (1.0 - kAdamBeta1) * g[t][i];
      v[t][i] = kAdamBeta2 * v[t][i] + (1.0 - kAdamBeta2) * g[t][i] * g[t][i];
      p[t][i] -= learning_rate * (m[t][i] / c1) / (std::sqrt(v[t][i] / c2) + kAdamEps);
    }
  }
}

struct TrainStats {
  std::vector<double> epoch_loss;  // mean mini-batch objective per epoch
};

/// Mini-batch Adam for hp.epochs epochs. Shuffling and dropout draw from
/// sub-seeds of hp.seed.
inline TrainStats train(CnnModel& model, std::span<const EncodedInstance> data,
                        const HyperParams& hp, const ClassWeights& weights) {
  if (data.empty()) throw EmptyDataset("cannot train on an empty dataset");
  check_consistent(model, hp);
  if (hp.batch_size < 1) throw ShapeMismatch("batch size must be positive");

  Rng shuffle_rng(sub_seed(hp.seed, "shuffle"));
  Rng dropout_rng(sub_seed(hp.seed, "dropout"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CnnParams grad = model.params.zeros_like();
  TrainStats stats;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      grad.set_zero();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const EncodedInstance& ex = data[order[b]];
        const ForwardCache cache = forward(model, ex, hp, true, &dropout_rng);
        const auto g = static_cast<std::size_t>(ex.label_index);
        batch_loss += scale * weights[g] * -std::log(std::max(cache.probs[g], 1e-30));
        accumulate_gradients(model, cache, ex.label_index, weights, hp, grad, scale);
      }
      batch_loss += l2_penalty(model, hp);
      add_l2_gradient(model, hp, grad);
      adam_step(model, grad, hp.learning_rate);
      epoch_total += batch_loss;
      ++batches;
    }
    stats.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
  }
  return stats;
}

/// Argmax of the evaluation-mode distribution; ties go to the lowest label.
inline int predict(const CnnModel& model, const EncodedInstance& enc, const HyperParams& hp) {
  const auto probs = forward(model, enc, hp, false).probs;
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian): 8-byte magic "SDPRCNN\0", u32 version, u64 vocab
// size, u64 dim, u64 vocab hash, u64 width count, i32 widths..., i32 maps,
// then static channel, non-static channel, each filter's weights and bias,
// fc weights and fc bias as raw f64 arrays.

inline constexpr char kCheckpointMagic[8] = {'S', 'D', 'P', 'R', 'C', 'N', 'N', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

inline void put_doubles(std::string& out, const std::vector<double>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > data.size()) throw FormatError("truncated checkpoint");
    T value;
    std::memcpy(&value, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }

  void get_doubles(std::vector<double>& v) {
    const std::size_t bytes = v.size() * sizeof(double);
    if (pos + bytes > data.size()) throw FormatError("truncated checkpoint");
    std::memcpy(v.data(), data.data() + pos, bytes);
    pos += bytes;
  }
};

}  // namespace detail

inline std::string serialize_model(const CnnModel& m) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint64_t>(out, m.vocab_size());
  detail::put<std::uint64_t>(out, m.dim);
  detail::put<std::uint64_t>(out, m.vocab_hash);
  detail::put<std::uint64_t>(out, m.filter_widths.size());
  for (int w : m.filter_widths) detail::put<std::int32_t>(out, w);
  detail::put<std::int32_t>(out, m.feature_maps);
  detail::put_doubles(out, m.static_channel.data);
  detail::put_doubles(out, m.params.nonstatic.data);
  for (const auto& f : m.params.filters) {
    detail::put_doubles(out, f.weights);
    detail::put_doubles(out, f.bias);
  }
  detail::put_doubles(out, m.params.fc_weights);
  detail::put_doubles(out, m.params.fc_bias);
  return out;
}

/// Restores parameters; optimizer moments start fresh.
inline CnnModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw FormatError("not a model checkpoint");
  detail::Reader r{bytes, sizeof(kCheckpointMagic)};
  if (r.get<std::uint32_t>() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  const auto vocab = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  HyperParams hp;
  const auto vocab_hash = r.get<std::uint64_t>();
  const auto nwidths = r.get<std::uint64_t>();
  if (nwidths > 64) throw FormatError("corrupt checkpoint header");
  hp.filter_widths.clear();
  for (std::uint64_t i = 0; i < nwidths; ++i) hp.filter_widths.push_back(r.get<std::int32_t>());
  hp.feature_maps = r.get<std::int32_t>();
  CnnModel m = init_model(EmbeddingMatrix(vocab, dim), hp, vocab_hash);
  r.get_doubles(m.static_channel.data);
  r.get_doubles(m.params.nonstatic.data);
  for (auto& f : m.params.filters) {
    r.get_doubles(f.weights);
    r.get_doubles(f.bias);
  }
  r.get_doubles(m.params.fc_weights);
  r.get_doubles(m.params.fc_bias);
  if (r.pos != bytes.size()) throw FormatError("trailing bytes in checkpoint");
  return m;
}

}  // namespace sdprel
