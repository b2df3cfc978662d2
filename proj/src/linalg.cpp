#include "spde/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spde {

void require_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("matrix is not square: " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > rel_tol * scale)
    throw ValidationError("matrix is not symmetric (asymmetry " +
                          std::to_string(asym) + ")");
}

CholeskyResult cholesky_spd(const Matrix& m, double jitter_start) {
  require_symmetric(m);
  if (jitter_start < 0) throw ValidationError("jitter_start must be >= 0");

  const Eigen::Index n = m.rows();
  if (m.isZero(0.0)) return {Matrix::Zero(n, n), 0.0};

  const double max_diag = m.diagonal().maxCoeff();
  const double cap = 1e-4 * max_diag;
  const double base = 1e-12 * std::max(max_diag, 1.0);

  double jitter = jitter_start;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Matrix shifted = m;
    if (jitter > 0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) return {Matrix(llt.matrixL()), jitter};
    jitter = (jitter == 0.0) ? base : 10.0 * jitter;
    if (jitter > cap) break;
  }
  throw NotFactorizable("cholesky failed within jitter cap " +
                        std::to_string(cap));
}

EighResult eigh(const Matrix& m) {
  require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw NoConvergence("symmetric eigendecomposition did not converge");
  const Eigen::Index n = m.rows();
  EighResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    out.eigenvectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  return out;
}

Vector eigh_values(const Matrix& m) {
  require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NoConvergence("symmetric eigendecomposition did not converge");
  return solver.eigenvalues().reverse();
}

Vector standard_normal(Rng& rng, Eigen::Index n) {
  if (n < 1) throw ValidationError("standard_normal requires n >= 1");
  Vector v(n);
  rng.fill_normal(std::span<double>(v.data(), static_cast<size_t>(n)));
  return v;
}

}  // namespace spde
