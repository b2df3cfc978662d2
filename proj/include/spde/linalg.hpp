#pragma once

#include <Eigen/Dense>

#include "spde/errors.hpp"
#include "spde/rng.hpp"

namespace spde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct CholeskyResult {
  Matrix lower;    // L with L * L^T = m + jitter * I
  double jitter = 0.0;
};

/// Cholesky factorization with an escalating diagonal jitter. The schedule
/// starts at jitter_start and multiplies by 10 per retry (at most 8 retries),
/// capped at 1e-4 * max(diag). Throws NotFactorizable when the cap is
/// exceeded. The jitter actually used is reported in the result.
CholeskyResult cholesky_spd(const Matrix& m, double jitter_start = 0.0);

struct EighResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, matching order
};

/// Symmetric eigendecomposition, eigenvalues sorted descending.
EighResult eigh(const Matrix& m);

/// Eigenvalues only (descending); cheaper for large matrices.
Vector eigh_values(const Matrix& m);

/// n iid N(0,1) draws from the stream.
Vector standard_normal(Rng& rng, Eigen::Index n);

void require_symmetric(const Matrix& m, double rel_tol = 1e-10);

}  // namespace spde
