#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "spde/gmm.hpp"
#include "spde/residual.hpp"

namespace spde {

/// Target interface for samplers and optimizers: an unnormalized log density
/// with gradient.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual Vector grad_log_density(const Vector& x) const = 0;
  virtual std::pair<double, Vector> log_density_with_grad(const Vector& x) const {
    return {log_density(x), grad_log_density(x)};
  }
};

/// Optional affine standardization of the residual before the mixture:
/// z = (r - shift) / scale. The constant log-Jacobian is kept so values stay
/// comparable across configurations.
struct Standardizer {
  Vector shift;
  Vector scale;
};

/// Unnormalized log posterior over network parameters: the mixture density of
/// the residual vector plus an independent normal prior. Immutable once
/// built; safe to share across chains.
class Posterior : public LogDensity {
 public:
  Posterior(GaussianMixture mixture, ResidualModel residual,
            double prior_std = 1.0,
            std::optional<Standardizer> standardizer = std::nullopt);

  /// Prior-only diagnostic mode (no likelihood term).
  explicit Posterior(Eigen::Index dim, double prior_std = 1.0);

  Eigen::Index dim() const override { return dim_; }
  double log_density(const Vector& theta) const override;
  Vector grad_log_density(const Vector& theta) const override;
  std::pair<double, Vector> log_density_with_grad(
      const Vector& theta) const override;

  const ResidualModel* residual() const {
    return residual_ ? &*residual_ : nullptr;
  }
  const GaussianMixture* mixture() const {
    return mixture_ ? &*mixture_ : nullptr;
  }

 private:
  double log_prior(const Vector& theta) const;
  Vector standardize(const Vector& r) const;

  std::optional<GaussianMixture> mixture_;
  std::optional<ResidualModel> residual_;
  std::optional<Standardizer> standardizer_;
  double prior_std_ = 1.0;
  double log_jacobian_ = 0.0;
  Eigen::Index dim_ = 0;
};

struct AdamOptions {
  int steps = 2000;
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_tol = 1e-8;  // stop when the gradient norm drops below this
};

/// Adam ascent on a log density; used for warm-starting chains at a mode.
Vector maximize_log_density(const LogDensity& target, Vector x,
                            const AdamOptions& opts = {});

/// Central finite-difference gradient of the log density, coordinate by
/// coordinate. order 2 uses the classic two-point stencil, order 4 the
/// five-point stencil. Steps scale with max(1, |x_i|).
Vector fd_gradient(const LogDensity& target, const Vector& x,
                   double rel_step = 1e-5, int order = 2);

}  // namespace spde
