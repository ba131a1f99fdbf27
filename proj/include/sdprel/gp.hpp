#pragma once

// Gaussian-process regression with an ARD Matern-5/2 kernel, marginal
// likelihood fitting and the Expected Improvement acquisition.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sdprel/errors.hpp"
#include "sdprel/random.hpp"

namespace sdprel {

struct KernelParams {
  std::vector<double> log_lengthscales;  // one per input dimension
  double log_signal_var = 0.0;
  double log_noise_var = std::log(1e-6);

  static KernelParams defaults(std::size_t dims) {
    KernelParams k;
    k.log_lengthscales.assign(dims, std::log(0.5));
    return k;
  }
};

/// Bounds on kernel parameters while fitting (standardized targets).
inline constexpr double kMinLengthscale = 1e-2;
inline constexpr double kMaxLengthscale = 1e2;
inline constexpr double kMinSignalVar = 1e-2;
inline constexpr double kMaxSignalVar = 1e2;
inline constexpr double kNoiseFloor = 1e-6;
inline constexpr double kMaxNoiseVar = 1.0;
inline constexpr double kMaxJitter = 1e-4;

struct GpState {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  KernelParams kernel;
};

inline double matern52(double r) {
  const double s = std::sqrt(5.0) * r;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

inline double scaled_distance(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& inv_ls) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = (a[i] - b[i]) * inv_ls[i];
    r2 += t * t;
  }
  return std::sqrt(r2);
}

/// Factorized posterior. Targets are standardized internally; predictions are
/// returned on the original scale.
class GpPosterior {
 public:
  explicit GpPosterior(const GpState& state) : state_(&state) {
    const std::size_t n = state.X.size();
    if (state.y.size() != n) throw SingularKernel("GP state has |X| != |y|");
    const std::size_t dims = state.kernel.log_lengthscales.size();
    inv_ls_.resize(dims);
    for (std::size_t i = 0; i < dims; ++i) inv_ls_[i] = std::exp(-state.kernel.log_lengthscales[i]);
    signal_var_ = std::exp(state.kernel.log_signal_var);
    const double noise_var = std::exp(state.kernel.log_noise_var);

    if (n > 0) {
      double mean = 0.0;
      for (double v : state.y) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : state.y) var += (v - mean) * (v - mean);
      var /= static_cast<double>(n);
      y_mean_ = mean;
      y_std_ = (n > 1 && var > 1e-24) ? std::sqrt(var) : 1.0;
    }
    z_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      z_[static_cast<Eigen::Index>(i)] = (state.y[i] - y_mean_) / y_std_;

    Eigen::MatrixXd K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (state.X[i].size() != dims) throw SingularKernel("input dimension mismatch");
      for (std::size_t j = 0; j <= i; ++j) {
        const double k = signal_var_ * matern52(scaled_distance(state.X[i], state.X[j], inv_ls_));
        K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k;
        K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = k;
      }
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += noise_var;
    }
    kernel_ = K;
    factorize(K);
  }

  struct Prediction {
    double mean = 0.0;
    double sigma = 0.0;
  };

  Prediction predict(const std::vector<double>& x) const {
    const auto n = static_cast<Eigen::Index>(state_->X.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i)
      k[i] = signal_var_ * matern52(scaled_distance(x, state_->X[static_cast<std::size_t>(i)], inv_ls_));
    const double mu_std = n > 0 ? k.dot(alpha_) : 0.0;
    double var = signal_var_;
    if (n > 0) {
      const Eigen::VectorXd v = chol_.matrixL().solve(k);
      var -= v.squaredNorm();
    }
    return {y_mean_ + y_std_ * mu_std, y_std_ * std::sqrt(std::max(var, 0.0))};
  }

  /// Posterior in standardized target units.
  Prediction predict_standardized(const std::vector<double>& x) const {
    auto p = predict(x);
    return {(p.mean - y_mean_) / y_std_, p.sigma / y_std_};
  }

  double standardize(double y) const { return (y - y_mean_) / y_std_; }

  /// log p(z | X, theta) of the standardized targets.
  double log_marginal_likelihood() const {
    const auto n = static_cast<double>(z_.size());
    double logdet = 0.0;
    const Eigen::MatrixXd& L = chol_.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += std::log(L(i, i));
    return -0.5 * z_.dot(alpha_) - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
  }

  /// Gradient of log_marginal_likelihood with respect to
  /// (log lengthscales..., log signal var, log noise var).
  std::vector<double> lml_gradient() const {
    const auto n = static_cast<Eigen::Index>(z_.size());
    const std::size_t dims = inv_ls_.size();
    std::vector<double> grad(dims + 2, 0.0);
    if (n == 0) return grad;
    const Eigen::MatrixXd Kinv = chol_.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd W = alpha_ * alpha_.transpose() - Kinv;  // symmetric
    const double noise_var = std::exp(state_->kernel.log_noise_var);
    const double s5 = std::sqrt(5.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& xi = state_->X[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < i; ++j) {
        const auto& xj = state_->X[static_cast<std::size_t>(j)];
        const double r = scaled_distance(xi, xj, inv_ls_);
        const double e = std::exp(-s5 * r);
        const double kval = signal_var_ * (1.0 + s5 * r + 5.0 * r * r / 3.0) * e;
        const double common = signal_var_ * (5.0 / 3.0) * (1.0 + s5 * r) * e;
        const double w = W(i, j);  // counted twice for (i,j) and (j,i)
        for (std::size_t d = 0; d < dims; ++d) {
          const double t = (xi[d] - xj[d]) * inv_ls_[d];
          grad[d] += w * common * t * t;
        }
        grad[dims] += w * kval;
      }
      grad[dims] += 0.5 * W(i, i) * signal_var_;
      grad[dims + 1] += 0.5 * W(i, i) * noise_var;
    }
    return grad;
  }

  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& kernel_matrix() const { return kernel_; }

 private:
  void factorize(Eigen::MatrixXd K) {
    const auto n = K.rows();
    if (n == 0) return;
    double jitter = 0.0;
    while (true) {
      chol_.compute(K);
      if (chol_.info() == Eigen::Success) break;
      const double next = jitter == 0.0 ? 1e-10 : jitter * 10.0;
      if (next > kMaxJitter * (1 + 1e-9))
        throw SingularKernel("kernel matrix not positive definite after jitter " +
                             std::to_string(jitter));
      K.diagonal().array() += next - jitter;
      jitter = next;
    }
    jitter_ = jitter;
    alpha_ = chol_.solve(z_);
  }

  const GpState* state_;
  std::vector<double> inv_ls_;
  double signal_var_ = 1.0;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  double jitter_ = 0.0;
  Eigen::VectorXd z_;
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd kernel_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// Posterior mean and standard deviation at x.
inline GpPosterior::Prediction gp_posterior(const GpState& state, const std::vector<double>& x) {
  return GpPosterior(state).predict(x);
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// EI for maximization: (mu - best - xi) Phi(z) + sigma phi(z).
inline double expected_improvement(double mu, double sigma, double best, double xi = 0.01) {
  const double gain = mu - best - xi;
  if (sigma <= 0.0) return std::max(gain, 0.0);
  const double z = gain / sigma;
  return std::max(gain * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

// ---------------------------------------------------------------------------
// Kernel fitting

namespace detail {

inline std::vector<double> pack(const KernelParams& k) {
  std::vector<double> t = k.log_lengthscales;
  t.push_back(k.log_signal_var);
  t.push_back(k.log_noise_var);
  return t;
}

inline KernelParams unpack(const std::vector<double>& t) {
  KernelParams k;
  k.log_lengthscales.assign(t.begin(), t.end() - 2);
  k.log_signal_var = t[t.size() - 2];
  k.log_noise_var = t.back();
  return k;
}

inline void clamp_theta(std::vector<double>& t) {
  const std::size_t dims = t.size() - 2;
  for (std::size_t i = 0; i < dims; ++i)
    t[i] = std::clamp(t[i], std::log(kMinLengthscale), std::log(kMaxLengthscale));
  t[dims] = std::clamp(t[dims], std::log(kMinSignalVar), std::log(kMaxSignalVar));
  t[dims + 1] = std::clamp(t[dims + 1], std::log(kNoiseFloor), std::log(kMaxNoiseVar));
}

}  // namespace detail

struct FitOptions {
  int restarts = 3;
  int steps = 100;
  double step_size = 0.05;
};

/// Projected Adam ascent on the log marginal likelihood from the current
/// kernel plus `restarts - 1` random starting points; keeps the best.
inline KernelParams fit_kernel(const GpState& state, Rng& rng, const FitOptions& opt = {}) {
  const std::size_t dims = state.kernel.log_lengthscales.size();
  if (state.X.size() < 2) return state.kernel;

  auto evaluate = [&](const std::vector<double>& theta, std::vector<double>* grad) {
    GpState s{state.X, state.y, detail::unpack(theta)};
    try {
      GpPosterior post(s);
      if (grad) *grad = post.lml_gradient();
      return post.log_marginal_likelihood();
    } catch (const SingularKernel&) {
      if (grad) grad->assign(theta.size(), 0.0);
      return -std::numeric_limits<double>::infinity();
    }
  };

  std::vector<std::vector<double>> starts;
  starts.push_back(detail::pack(state.kernel));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 1; r < opt.restarts; ++r) {
    std::vector<double> t(dims + 2);
    for (std::size_t i = 0; i < dims; ++i)
      t[i] = std::log(0.05) + u(rng) * (std::log(5.0) - std::log(0.05));
    t[dims] = std::log(0.3) + u(rng) * (std::log(3.0) - std::log(0.3));
    t[dims + 1] = std::log(1e-5) + u(rng) * (std::log(1e-1) - std::log(1e-5));
    starts.push_back(std::move(t));
  }

  std::vector<double> best_theta = starts.front();
  detail::clamp_theta(best_theta);
  double best = evaluate(best_theta, nullptr);
  for (auto theta : starts) {
    detail::clamp_theta(theta);
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), g;
    for (int step = 1; step <= opt.steps; ++step) {
      const double value = evaluate(theta, &g);
      if (value > best) {
        best = value;
        best_theta = theta;
      }
      if (!std::isfinite(value)) break;
      const double c1 = 1.0 - std::pow(0.9, step);
      const double c2 = 1.0 - std::pow(0.999, step);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        theta[i] += opt.step_size * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
      }
      detail::clamp_theta(theta);
    }
    const double value = evaluate(theta, nullptr);
    if (value > best) {
      best = value;
      best_theta = theta;
    }
  }
  return detail::unpack(best_theta);
}

}  // namespace sdprel
