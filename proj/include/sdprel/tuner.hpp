#pragma once

// Bayesian optimization loop: quasi-random initial design, then GP + EI over
// uniformly sampled candidates.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprel/gp.hpp"
#include "sdprel/random.hpp"
#include "sdprel/search_space.hpp"

namespace sdprel {

struct TuneOptions {
  int iterations = 100;  // total objective evaluations, initial design included
  int initial_design = 10;
  int candidates = 5000;
  double xi = 0.01;  // in standardized objective units
  FitOptions fit;
  std::uint64_t seed = 1;
};

struct TraceEntry {
  int iteration = 0;  // 1-based
  Point point;
  double value = 0.0;  // -inf when the objective failed
  double best_so_far = 0.0;
  bool failed = false;
  std::string error;
};

struct TuneResult {
  Point best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
};

using Objective = std::function<double(const Point&)>;

namespace detail {

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

inline std::uint64_t nth_prime(std::size_t n) {
  std::uint64_t candidate = 1;
  std::size_t found = 0;
  while (found <= n) {
    ++candidate;
    bool prime = true;
    for (std::uint64_t d = 2; d * d <= candidate; ++d)
      if (candidate % d == 0) {
        prime = false;
        break;
      }
    if (prime) ++found;
  }
  return candidate;
}

}  // namespace detail

/// Randomly shifted Halton points in the unit cube of the raw dimensions.
inline std::vector<Point> initial_design(const SearchSpace& space, int count, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> shift(space.size());
  for (auto& s : shift) s = u(rng);
  std::vector<Point> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> cube(space.size());
    for (std::size_t d = 0; d < space.size(); ++d) {
      const double h = detail::radical_inverse(static_cast<std::uint64_t>(i) + 1, detail::nth_prime(d));
      cube[d] = std::fmod(h + shift[d], 1.0);
    }
    out.push_back(space.from_unit_cube(cube));
  }
  return out;
}

/// Maximizes `objective` over `space`. A throwing objective is recorded as a
/// failed evaluation with value -inf; the GP sees it at the worst finite value
/// observed so far.
inline TuneResult tune(const Objective& objective, const SearchSpace& space,
                       const TuneOptions& opt = {}) {
  TuneResult result;
  Rng rng(sub_seed(opt.seed, "tuner"));
  const int budget = space.singleton() ? std::min(opt.iterations, 1) : opt.iterations;

  GpState gp;
  gp.kernel = KernelParams::defaults(space.encoded_size());
  std::vector<bool> failed;

  auto record = [&](const Point& p) {
    TraceEntry e;
    e.iteration = static_cast<int>(result.trace.size()) + 1;
    e.point = p;
    try {
      e.value = objective(p);
      if (std::isnan(e.value)) throw std::runtime_error("objective returned NaN");
    } catch (const std::exception& ex) {
      e.value = -std::numeric_limits<double>::infinity();
      e.failed = true;
      e.error = ex.what();
    }
    if (result.trace.empty() || e.value > result.best_value) {
      result.best_value = e.value;
      result.best = p;
    }
    e.best_so_far = result.best_value;
    result.trace.push_back(e);
    gp.X.push_back(space.encode(p));
    gp.y.push_back(e.value);
    failed.push_back(e.failed);
  };

  const auto initial = initial_design(space, std::min(opt.initial_design, budget), rng);
  for (const auto& p : initial) record(p);

  while (static_cast<int>(result.trace.size()) < budget) {
    // Failed points are imputed with the worst finite observation.
    GpState fit_state = gp;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gp.y.size(); ++i)
      if (!failed[i]) worst = std::min(worst, gp.y[i]);
    if (!std::isfinite(worst)) worst = 0.0;
    for (std::size_t i = 0; i < gp.y.size(); ++i)
      if (failed[i]) fit_state.y[i] = worst;

    gp.kernel = fit_kernel(fit_state, rng, opt.fit);
    fit_state.kernel = gp.kernel;
    const GpPosterior posterior(fit_state);
    double best_std = -std::numeric_limits<double>::infinity();
    for (double y : fit_state.y) best_std = std::max(best_std, posterior.standardize(y));

    Point chosen;
    double chosen_ei = -1.0;
    for (int c = 0; c < opt.candidates; ++c) {
      Point p = space.sample(rng);
      const auto pred = posterior.predict_standardized(space.encode(p));
      const double ei = expected_improvement(pred.mean, pred.sigma, best_std, opt.xi);
      if (ei > chosen_ei) {
        chosen_ei = ei;
        chosen = std::move(p);
      }
    }
    record(chosen);
  }
  return result;
}

/// "iteration<TAB>config JSON<TAB>value<TAB>best" per evaluation.
inline std::string format_trace(const SearchSpace& space, const TuneResult& result) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& e : result.trace) {
    out << e.iteration << '\t' << space.to_json(e.point).dump() << '\t';
    if (e.failed)
      out << "-inf";
    else
      out << e.value;
    out << '\t' << e.best_so_far << '\n';
  }
  return out.str();
}

}  // namespace sdprel
