#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "spde/gp.hpp"
#include "spde/grid.hpp"

namespace spde {

enum class OperatorKind {
  Identity,      // u = f (process sampling)
  NegLaplace1D,  // -u'' = f
  AllenCahn2D,   // -lap(u) + c u (u^2 - 1) = f
  DivForm1D,     // -(k u')' = f
};

struct OperatorId {
  OperatorKind kind = OperatorKind::Identity;
  double cubic_coeff = 3.0;  // AllenCahn2D only

  bool uses_k() const { return kind == OperatorKind::DivForm1D; }
  int spatial_dim() const {
    return kind == OperatorKind::AllenCahn2D ? 2 : 1;
  }
};

/// Square spatial domain; dim 1 gives the interval [lo, hi].
struct Box {
  int dim = 1;
  double lo = -1.0;
  double hi = 1.0;
};

struct SensorLayout {
  Matrix f_sensors;  // interior source sensors
  Matrix g_sensors;  // boundary trace sensors
  Matrix k_sensors;  // parameter sensors (forward problems with k)
  Matrix u_sensors;  // solution sensors (inverse problems)
};

enum class DatasetMode { Forward, Inverse };

struct BlockNoise {
  double f = 0.0;
  double g = 0.0;
  double k = 0.0;
  double u = 0.0;
};

struct ProblemSpec {
  OperatorId op;
  Box domain;
  GpSpec f_spec;
  std::optional<GpSpec> k_spec;
  double dirichlet_value = 0.0;  // boundary trace datum
  BlockNoise noise;
};

/// Snapshot rows are the concatenation [f | g | tail] where the tail block
/// holds k measurements (forward) or u measurements (inverse). Row order
/// carries no meaning.
struct SnapshotDataset {
  DatasetMode mode = DatasetMode::Forward;
  SensorLayout layout;
  BlockNoise noise;
  std::uint64_t seed = 0;
  Matrix rows;

  Eigen::Index n_f() const { return layout.f_sensors.rows(); }
  Eigen::Index n_g() const { return layout.g_sensors.rows(); }
  Eigen::Index n_tail() const {
    return mode == DatasetMode::Forward ? layout.k_sensors.rows()
                                        : layout.u_sensors.rows();
  }
  Eigen::Index row_length() const { return n_f() + n_g() + n_tail(); }
};

/// Equidistant 1-d sensors including both endpoints.
Matrix equidistant_sensors_1d(double lo, double hi, int count);

/// Uniform interior tensor grid of sensors (n_per_axis^2 points).
Matrix tensor_sensors_2d(double lo, double hi, int n_per_axis);

/// Sensors equidistant along the perimeter of the square, corners included
/// once (count must be divisible by 4).
Matrix boundary_sensors_square(double lo, double hi, int count);

void validate_layout(const ProblemSpec& spec, const SensorLayout& layout,
                     DatasetMode mode);

/// Forward snapshots: f (and k) drawn from their processes on the sensors,
/// g = boundary datum plus measurement noise.
SnapshotDataset synthesize_forward(const ProblemSpec& spec,
                                   const SensorLayout& layout, int n_snapshots,
                                   const Rng& rng);

/// Inverse snapshots: per snapshot, k and f are drawn on the solver grid,
/// the PDE is solved, and [f | g | u] is recorded on the sensors. The solver
/// grid must contain every sensor location.
SnapshotDataset synthesize_inverse(const ProblemSpec& spec,
                                   const SensorLayout& layout, int n_snapshots,
                                   const Rng& rng, const Grid1D& solver_grid);

void save_dataset(const SnapshotDataset& ds, const std::filesystem::path& path);
SnapshotDataset load_dataset(const std::filesystem::path& path);

std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

}  // namespace spde
