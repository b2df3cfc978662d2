#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

#include "spde/grid.hpp"
#include "spde/problem.hpp"

namespace spde {

/// Second-order solve of -u'' = f on a uniform grid with Dirichlet data.
Vector solve_poisson_1d(const Vector& f, std::pair<double, double> bc,
                        const Grid1D& grid);

/// Conservative second-order solve of -(k u')' = f with arithmetic-mean
/// midpoint coefficients. Requires k > 0 everywhere.
Vector solve_divform_1d(const Vector& k, const Vector& f,
                        std::pair<double, double> bc, const Grid1D& grid);

struct NewtonOptions {
  double tol = 1e-10;    // residual infinity-norm target
  int max_iter = 50;
};

/// Damped Newton solve of -lap(u) + c u (u^2 - 1) = f on the tensor grid
/// with homogeneous Dirichlet boundary. f is flattened like Grid2D::points().
/// Returns the solution together with the Newton residual-norm trace.
struct AllenCahnSolution {
  Vector u;
  std::vector<double> residual_norms;
};
AllenCahnSolution solve_allen_cahn_2d(const Vector& f, const Grid2D& grid,
                                      double cubic_coeff = 3.0,
                                      const NewtonOptions& opts = {});

struct ReferenceStats {
  Matrix grid_points;  // P x dim
  Vector mean;
  Vector std;          // population normalization (1/N)
  std::optional<Matrix> cov;          // on cov_subgrid indices
  std::vector<int> cov_subgrid;       // indices into grid_points
  std::int64_t n_mc = 0;
  std::uint64_t seed = 0;
};

struct McOptions {
  int n_mc = 10000;
  std::uint64_t seed = 0;
  int cov_subgrid = 0;   // accumulate covariance on this many grid points
  int chunk = 256;       // accumulation chunk (fixed; keeps sums deterministic)
};

/// Monte Carlo statistics of the solution field on a solver grid: draws
/// random inputs per sample, solves the deterministic PDE, and accumulates
/// streaming moments. Boundary noise from spec.noise.g is added to boundary
/// grid entries. 1-d operators use grid1; AllenCahn2D uses grid2.
ReferenceStats mc_reference(const ProblemSpec& spec, const Grid1D& grid1,
                            const Grid2D& grid2, const McOptions& opts);

void save_reference(const ReferenceStats& s, const std::filesystem::path& path);
ReferenceStats load_reference(const std::filesystem::path& path);

}  // namespace spde
