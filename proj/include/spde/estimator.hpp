#pragma once

#include <filesystem>
#include <utility>

#include "spde/hmc.hpp"
#include "spde/residual.hpp"

namespace spde {

/// Field evaluations across posterior samples: row i holds the field at every
/// grid point for sample theta^i.
struct FieldSamples {
  Matrix grid;    // P x dim
  Matrix values;  // N x P
};

FieldSamples field_samples(const Matrix& thetas, const ResidualModel& rm,
                           const Matrix& grid, FieldKind kind);

enum class Normalization { Population, Sample };  // 1/N vs 1/(N-1)

/// Pointwise mean and standard deviation over samples. Population (1/N)
/// normalization by default.
std::pair<Vector, Vector> mean_std(
    const FieldSamples& fs, Normalization norm = Normalization::Population);

/// Sample covariance across grid points (1/N normalization).
Matrix cov_kernel(const FieldSamples& fs);

/// ||pred - ref|| / ||ref|| in the L2 / Frobenius norm.
double rel_error(const Vector& pred, const Vector& ref);
double rel_error(const Matrix& pred, const Matrix& ref);

void save_mean_std_csv(const std::filesystem::path& path, const Matrix& grid,
                       const Vector& mean, const Vector& std);
void save_matrix_csv_file(const std::filesystem::path& path, const Matrix& m);
void save_vector_csv_file(const std::filesystem::path& path, const Vector& v);

}  // namespace spde
