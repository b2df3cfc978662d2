#include "spde/estimator.hpp"

#include <cmath>
#include <fstream>

#include "spde/io.hpp"

namespace spde {

FieldSamples field_samples(const Matrix& thetas, const ResidualModel& rm,
                           const Matrix& grid, FieldKind kind) {
  if (thetas.rows() == 0) throw EmptyChain("field_samples: no parameter samples");
  FieldSamples fs;
  fs.grid = grid;
  fs.values.resize(thetas.rows(), grid.rows());
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
    const Vector theta = thetas.row(i).transpose();
    fs.values.row(i) = rm.field_values(theta, grid, kind).transpose();
  }
  if (!fs.values.allFinite())
    throw NumericalError("field_samples produced non-finite values");
  return fs;
}

std::pair<Vector, Vector> mean_std(const FieldSamples& fs, Normalization norm) {
  const Eigen::Index n = fs.values.rows();
  if (n < 1) throw EmptyChain("mean_std: no samples");
  const Vector mean = fs.values.colwise().mean();
  const Matrix centered = fs.values.rowwise() - mean.transpose();
  const double denom =
      norm == Normalization::Population
          ? static_cast<double>(n)
          : static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  const Vector var = centered.colwise().squaredNorm().transpose() / denom;
  return {mean, var.cwiseMax(0.0).cwiseSqrt()};
}

Matrix cov_kernel(const FieldSamples& fs) {
  const Eigen::Index n = fs.values.rows();
  if (n < 2) throw ValidationError("cov_kernel needs at least two samples");
  const Vector mean = fs.values.colwise().mean();
  const Matrix centered = fs.values.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  return 0.5 * (cov + cov.transpose());
}

double rel_error(const Vector& pred, const Vector& ref) {
  if (pred.size() != ref.size())
    throw DimensionMismatch("rel_error: shapes differ");
  const double denom = ref.norm();
  if (denom == 0.0) throw ZeroReference("rel_error: reference has zero norm");
  return (pred - ref).norm() / denom;
}

double rel_error(const Matrix& pred, const Matrix& ref) {
  if (pred.rows() != ref.rows() || pred.cols() != ref.cols())
    throw DimensionMismatch("rel_error: shapes differ");
  const double denom = ref.norm();
  if (denom == 0.0) throw ZeroReference("rel_error: reference has zero norm");
  return (pred - ref).norm() / denom;
}

void save_mean_std_csv(const std::filesystem::path& path, const Matrix& grid,
                       const Vector& mean, const Vector& std) {
  Matrix table(grid.rows(), grid.cols() + 2);
  table.leftCols(grid.cols()) = grid;
  table.col(grid.cols()) = mean;
  table.col(grid.cols() + 1) = std;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_matrix_csv(os, table);
  if (!os) throw IoError("write failed: " + path.string());
}

void save_matrix_csv_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_matrix_csv(os, m);
  if (!os) throw IoError("write failed: " + path.string());
}

void save_vector_csv_file(const std::filesystem::path& path, const Vector& v) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << format_double(v(i)) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace spde
