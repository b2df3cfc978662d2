#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "spde/linalg.hpp"

namespace spde {

/// Gaussian mixture with full covariances, kept in Cholesky form.
struct GaussianMixture {
  Vector weights;                 // simplex
  Matrix means;                   // n_components x dim
  std::vector<Matrix> chol;       // lower factors of the covariances
  std::vector<double> log_det;    // log det of each covariance

  int components() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.cols(); }
  Matrix covariance(int i) const { return chol[i] * chol[i].transpose(); }
};

struct EmInit {
  Vector weights;
  Matrix means;
  std::vector<Matrix> covariances;
};

struct EmReport {
  std::vector<double> loglik_trace;  // mean log-likelihood per iteration
  int iterations = 0;
  bool converged = false;
};

/// EM fit with k-means++-style seeding from the stream. Every M-step
/// covariance gets +reg*I. Iterates until the mean log-likelihood improves by
/// less than tol, or max_iter.
GaussianMixture fit_em(const Matrix& rows, int n_components, double reg,
                       Rng& rng, int max_iter = 200, double tol = 1e-7,
                       EmReport* report = nullptr);

/// Same EM loop started from an explicit initialization.
GaussianMixture fit_em_from(const Matrix& rows, const EmInit& init, double reg,
                            int max_iter = 200, double tol = 1e-7,
                            EmReport* report = nullptr);

/// log sum_i w_i N(x; m_i, S_i), evaluated with log-sum-exp stabilization.
double log_pdf(const GaussianMixture& g, const Vector& x);

Vector grad_log_pdf(const GaussianMixture& g, const Vector& x);

/// Row-normalized responsibilities (E-step matrix), one row per data row.
Matrix responsibilities(const GaussianMixture& g, const Matrix& rows);

void save_mixture(const GaussianMixture& g, const std::filesystem::path& path);
GaussianMixture load_mixture(const std::filesystem::path& path);

}  // namespace spde
