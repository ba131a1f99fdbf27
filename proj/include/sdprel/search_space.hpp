#pragma once

// Mixed categorical / integer / continuous search spaces and their encoding
// into the unit cube used by the GP surrogate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprel/cnn.hpp"
#include "sdprel/errors.hpp"
#include "sdprel/random.hpp"

namespace sdprel {

struct Dimension {
  enum class Kind { categorical, integer, real, log_real };

  std::string name;
  Kind kind = Kind::real;
  std::vector<std::string> options;  // categorical only
  double lo = 0.0;
  double hi = 1.0;

  static Dimension categorical(std::string name, std::vector<std::string> options) {
    return {std::move(name), Kind::categorical, std::move(options), 0.0, 0.0};
  }
  static Dimension integer(std::string name, int lo, int hi) {
    return {std::move(name), Kind::integer, {}, static_cast<double>(lo), static_cast<double>(hi)};
  }
  static Dimension real(std::string name, double lo, double hi) {
    return {std::move(name), Kind::real, {}, lo, hi};
  }
  static Dimension log_real(std::string name, double lo, double hi) {
    return {std::move(name), Kind::log_real, {}, lo, hi};
  }

  std::size_t encoded_width() const { return kind == Kind::categorical ? options.size() : 1; }
  bool fixed() const { return kind == Kind::categorical ? options.size() == 1 : lo == hi; }
};

/// One value per dimension: the option index for categorical dimensions,
/// otherwise the raw value.
using Point = std::vector<double>;

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    for (const auto& d : dims_) {
      if (d.kind == Dimension::Kind::categorical && d.options.empty())
        throw OutOfSpace("categorical dimension " + d.name + " has no options");
      if (d.kind != Dimension::Kind::categorical && !(d.lo <= d.hi))
        throw OutOfSpace("dimension " + d.name + " has lo > hi");
      if (d.kind == Dimension::Kind::log_real && d.lo <= 0.0)
        throw OutOfSpace("log-scaled dimension " + d.name + " needs a positive lower bound");
    }
  }

  const std::vector<Dimension>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }

  std::size_t encoded_size() const {
    std::size_t n = 0;
    for (const auto& d : dims_) n += d.encoded_width();
    return n;
  }

  bool singleton() const {
    return std::all_of(dims_.begin(), dims_.end(), [](const Dimension& d) { return d.fixed(); });
  }

  void check(const Point& p) const {
    if (p.size() != dims_.size())
      throw OutOfSpace("point has " + std::to_string(p.size()) + " coordinates, space has " +
                       std::to_string(dims_.size()));
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const auto& d = dims_[i];
      const double v = p[i];
      bool ok = std::isfinite(v);
      if (d.kind == Dimension::Kind::categorical)
        ok = ok && v == std::floor(v) && v >= 0 && v < static_cast<double>(d.options.size());
      else
        ok = ok && v >= d.lo && v <= d.hi;
      if (d.kind == Dimension::Kind::integer) ok = ok && v == std::floor(v);
      if (!ok) throw OutOfSpace("value " + std::to_string(v) + " outside dimension " + d.name);
    }
  }

  /// One-hot for categorical dimensions, min-max scaling to [0,1] otherwise
  /// (in log10 for log-scaled ones).
  std::vector<double> encode(const Point& p) const {
    check(p);
    std::vector<double> out;
    out.reserve(encoded_size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const auto& d = dims_[i];
      if (d.kind == Dimension::Kind::categorical) {
        for (std::size_t o = 0; o < d.options.size(); ++o)
          out.push_back(static_cast<double>(o) == p[i] ? 1.0 : 0.0);
        continue;
      }
      out.push_back(scale(d, p[i]));
    }
    return out;
  }

  /// Inverse of encode: argmax over one-hot blocks, unscaling elsewhere.
  /// Coordinates are clamped to [0,1] first.
  Point decode(const std::vector<double>& x) const {
    if (x.size() != encoded_size()) throw OutOfSpace("encoded vector has the wrong length");
    Point p;
    std::size_t k = 0;
    for (const auto& d : dims_) {
      if (d.kind == Dimension::Kind::categorical) {
        const auto begin = x.begin() + static_cast<std::ptrdiff_t>(k);
        const auto end = begin + static_cast<std::ptrdiff_t>(d.options.size());
        p.push_back(static_cast<double>(std::max_element(begin, end) - begin));
        k += d.options.size();
        continue;
      }
      p.push_back(from_unit(d, std::clamp(x[k++], 0.0, 1.0)));
    }
    return p;
  }

  /// Maps a point of the unit cube (one coordinate per dimension) into the
  /// space; categorical and integer dimensions are split into equal cells.
  Point from_unit_cube(const std::vector<double>& u) const {
    Point p;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const auto& d = dims_[i];
      const double v = std::clamp(u[i], 0.0, 1.0);
      if (d.kind == Dimension::Kind::categorical) {
        const double n = static_cast<double>(d.options.size());
        p.push_back(std::min(std::floor(v * n), n - 1));
      } else if (d.kind == Dimension::Kind::integer) {
        const double n = d.hi - d.lo + 1;
        p.push_back(d.lo + std::min(std::floor(v * n), n - 1));
      } else {
        p.push_back(from_unit(d, v));
      }
    }
    return p;
  }

  /// Uniform over options / integers / value range (log-uniform for
  /// log-scaled dimensions).
  Point sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> cube(dims_.size());
    for (auto& c : cube) c = u(rng);
    return from_unit_cube(cube);
  }

  nlohmann::ordered_json to_json(const Point& p) const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const auto& d = dims_[i];
      if (d.kind == Dimension::Kind::categorical)
        j[d.name] = d.options[static_cast<std::size_t>(p[i])];
      else if (d.kind == Dimension::Kind::integer)
        j[d.name] = static_cast<long long>(p[i]);
      else
        j[d.name] = p[i];
    }
    return j;
  }

 private:
  static double scale(const Dimension& d, double v) {
    if (d.lo == d.hi) return 0.0;
    double s = 0.0;
    if (d.kind == Dimension::Kind::log_real)
      s = (std::log10(v) - std::log10(d.lo)) / (std::log10(d.hi) - std::log10(d.lo));
    else
      s = (v - d.lo) / (d.hi - d.lo);
    return std::clamp(s, 0.0, 1.0);
  }

  static double from_unit(const Dimension& d, double u) {
    switch (d.kind) {
      case Dimension::Kind::integer: return std::round(d.lo + u * (d.hi - d.lo));
      case Dimension::Kind::log_real: {
        const double lo = std::log10(d.lo);
        const double hi = std::log10(d.hi);
        return std::clamp(std::pow(10.0, lo + u * (hi - lo)), d.lo, d.hi);
      }
      default: return d.lo + u * (d.hi - d.lo);
    }
  }

  std::vector<Dimension> dims_;
};

// ---------------------------------------------------------------------------
// The classifier's hyperparameter space

/// 7 singletons, 6 adjacent pairs and 5 adjacent triples of widths 3..9.
inline std::vector<std::vector<int>> filter_catalogue() {
  std::vector<std::vector<int>> out;
  for (int len = 1; len <= 3; ++len)
    for (int first = 3; first + len - 1 <= 9; ++first) {
      std::vector<int> ws;
      for (int k = 0; k < len; ++k) ws.push_back(first + k);
      out.push_back(std::move(ws));
    }
  return out;
}

inline constexpr int kMinFeatureMaps = 10;
inline constexpr int kMaxFeatureMaps = 1000;
inline constexpr double kMinL2 = 1e-4;
inline constexpr double kMaxL2 = 1e2;
inline constexpr double kMinLearningRate = 1e-6;
inline constexpr double kMaxLearningRate = 1e-2;
inline constexpr double kMinDropoutKeep = 0.1;
inline constexpr double kMaxDropoutKeep = 1.0;

inline SearchSpace hyperparameter_space() {
  std::vector<std::string> filters;
  for (const auto& ws : filter_catalogue()) filters.push_back(filter_widths_name(ws));
  std::vector<std::string> acts;
  for (auto a : kActivations) acts.emplace_back(activation_name(a));
  return SearchSpace({
      Dimension::categorical("filter_widths", filters),
      Dimension::categorical("activation", acts),
      Dimension::categorical("pooling", {"max", "avg"}),
      Dimension::integer("feature_maps", kMinFeatureMaps, kMaxFeatureMaps),
      Dimension::log_real("l2", kMinL2, kMaxL2),
      Dimension::log_real("learning_rate", kMinLearningRate, kMaxLearningRate),
      Dimension::real("dropout_keep", kMinDropoutKeep, kMaxDropoutKeep),
  });
}

inline Point to_point(const HyperParams& hp) {
  const auto cat = filter_catalogue();
  auto it = std::find(cat.begin(), cat.end(), hp.filter_widths);
  if (it == cat.end())
    throw OutOfSpace("filter widths " + filter_widths_name(hp.filter_widths) +
                     " not in the catalogue");
  const auto act = std::find(kActivations.begin(), kActivations.end(), hp.activation);
  return {static_cast<double>(it - cat.begin()),
          static_cast<double>(act - kActivations.begin()),
          hp.pooling == Pooling::max ? 0.0 : 1.0,
          static_cast<double>(hp.feature_maps),
          hp.l2,
          hp.learning_rate,
          hp.dropout_keep};
}

/// Tunable fields from `p`; epochs, batch size and seed from `base`.
inline HyperParams to_hyperparams(const Point& p, const HyperParams& base = {}) {
  hyperparameter_space().check(p);
  HyperParams hp = base;
  hp.filter_widths = filter_catalogue()[static_cast<std::size_t>(p[0])];
  hp.activation = kActivations[static_cast<std::size_t>(p[1])];
  hp.pooling = p[2] == 0.0 ? Pooling::max : Pooling::avg;
  hp.feature_maps = static_cast<int>(p[3]);
  hp.l2 = p[4];
  hp.learning_rate = p[5];
  hp.dropout_keep = p[6];
  return hp;
}

/// 29-dimensional encoding: 18 filter one-hot, 5 activation one-hot,
/// 2 pooling one-hot, then maps, log l2, log learning rate, keep probability.
inline std::vector<double> encode_config(const HyperParams& hp) {
  return hyperparameter_space().encode(to_point(hp));
}

inline HyperParams decode_config(const std::vector<double>& x, const HyperParams& base = {}) {
  return to_hyperparams(hyperparameter_space().decode(x), base);
}

}  // namespace sdprel
