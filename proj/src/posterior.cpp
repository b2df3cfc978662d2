#include "spde/posterior.hpp"

#include <cmath>

namespace spde {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Posterior::Posterior(GaussianMixture mixture, ResidualModel residual,
                     double prior_std, std::optional<Standardizer> standardizer)
    : mixture_(std::move(mixture)),
      residual_(std::move(residual)),
      standardizer_(std::move(standardizer)),
      prior_std_(prior_std),
      dim_(residual_->model().param_count()) {
  if (prior_std_ <= 0) throw ValidationError("prior std must be > 0");
  if (mixture_->dim() != residual_->length())
    throw DimensionMismatch("mixture dimension does not match the residual");
  if (standardizer_) {
    if (standardizer_->shift.size() != residual_->length() ||
        standardizer_->scale.size() != residual_->length())
      throw DimensionMismatch("standardizer does not match the residual");
    if (standardizer_->scale.minCoeff() <= 0)
      throw ValidationError("standardizer scales must be > 0");
    log_jacobian_ = -standardizer_->scale.array().log().sum();
  }
}

Posterior::Posterior(Eigen::Index dim, double prior_std)
    : prior_std_(prior_std), dim_(dim) {
  if (dim < 1) throw ValidationError("posterior dimension must be >= 1");
  if (prior_std_ <= 0) throw ValidationError("prior std must be > 0");
}

double Posterior::log_prior(const Vector& theta) const {
  const double s = prior_std_;
  return -0.5 * theta.squaredNorm() / (s * s) -
         static_cast<double>(dim_) * std::log(s) -
         0.5 * static_cast<double>(dim_) * kLog2Pi;
}

Vector Posterior::standardize(const Vector& r) const {
  if (!standardizer_) return r;
  return (r - standardizer_->shift).cwiseQuotient(standardizer_->scale);
}

double Posterior::log_density(const Vector& theta) const {
  if (theta.size() != dim_)
    throw DimensionMismatch("theta has the wrong dimension");
  double out = log_prior(theta);
  if (mixture_) {
    const Vector r = residual_->residual(theta);
    out += log_pdf(*mixture_, standardize(r)) + log_jacobian_;
  }
  return out;
}

Vector Posterior::grad_log_density(const Vector& theta) const {
  return log_density_with_grad(theta).second;
}

std::pair<double, Vector> Posterior::log_density_with_grad(
    const Vector& theta) const {
  if (theta.size() != dim_)
    throw DimensionMismatch("theta has the wrong dimension");
  const double s2 = prior_std_ * prior_std_;
  double value = log_prior(theta);
  Vector grad = -theta / s2;
  if (mixture_) {
    const ResidualModel::Eval ev = residual_->evaluate(theta);
    const Vector z = standardize(ev.r);
    value += log_pdf(*mixture_, z) + log_jacobian_;
    Vector adj = grad_log_pdf(*mixture_, z);
    if (standardizer_) adj = adj.cwiseQuotient(standardizer_->scale);
    grad += residual_->pullback(ev, theta, adj);
  }
  return {value, std::move(grad)};
}

Vector fd_gradient(const LogDensity& target, const Vector& x, double rel_step,
                   int order) {
  if (order != 2 && order != 4)
    throw ValidationError("fd_gradient supports orders 2 and 4");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    const double xi = x(i);
    auto at = [&](double offset) {
      probe(i) = xi + offset;
      const double v = target.log_density(probe);
      return v;
    };
    if (order == 2) {
      g(i) = (at(h) - at(-h)) / (2.0 * h);
    } else {
      g(i) = (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
    }
    probe(i) = xi;
  }
  return g;
}

Vector maximize_log_density(const LogDensity& target, Vector x,
                            const AdamOptions& opts) {
  Vector m = Vector::Zero(x.size());
  Vector v = Vector::Zero(x.size());
  for (int t = 1; t <= opts.steps; ++t) {
    const Vector g = target.grad_log_density(x);
    const double gn = g.norm();
    if (!std::isfinite(gn))
      throw NonFiniteState("non-finite gradient during optimization");
    if (gn < opts.grad_tol) break;
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(opts.beta1, t);
    const double bc2 = 1.0 - std::pow(opts.beta2, t);
    // Ascent step.
    x += (opts.learning_rate / bc1) *
         m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + opts.eps).matrix());
  }
  return x;
}

}  // namespace spde
