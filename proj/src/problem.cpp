#include "spde/problem.hpp"

#include <cmath>
#include <fstream>

#include "spde/io.hpp"
#include "spde/reference.hpp"

namespace spde {

Matrix equidistant_sensors_1d(double lo, double hi, int count) {
  if (count < 1) throw ValidationError("sensor count must be >= 1");
  Matrix s(count, 1);
  if (count == 1) {
    s(0, 0) = 0.5 * (lo + hi);
    return s;
  }
  for (int i = 0; i < count; ++i)
    s(i, 0) = lo + (hi - lo) * i / (count - 1.0);
  return s;
}

Matrix tensor_sensors_2d(double lo, double hi, int n_per_axis) {
  Grid2D g{lo, hi, n_per_axis, n_per_axis};
  return g.points();
}

Matrix boundary_sensors_square(double lo, double hi, int count) {
  if (count < 4 || count % 4 != 0)
    throw ValidationError("boundary sensor count must be a positive multiple of 4");
  const double side = hi - lo;
  const double perimeter = 4.0 * side;
  Matrix s(count, 2);
  for (int i = 0; i < count; ++i) {
    double t = perimeter * i / count;  // arc length from (lo, lo), ccw
    double x, y;
    if (t < side) {
      x = lo + t;
      y = lo;
    } else if (t < 2 * side) {
      x = hi;
      y = lo + (t - side);
    } else if (t < 3 * side) {
      x = hi - (t - 2 * side);
      y = hi;
    } else {
      x = lo;
      y = hi - (t - 3 * side);
    }
    s(i, 0) = x;
    s(i, 1) = y;
  }
  return s;
}

namespace {

bool on_boundary(const Box& domain, const Eigen::RowVectorXd& x,
                 double tol = 1e-9) {
  for (int d = 0; d < domain.dim; ++d)
    if (std::abs(x(d) - domain.lo) <= tol || std::abs(x(d) - domain.hi) <= tol)
      return true;
  return false;
}

bool inside_closure(const Box& domain, const Eigen::RowVectorXd& x,
                    double tol = 1e-9) {
  for (int d = 0; d < domain.dim; ++d)
    if (x(d) < domain.lo - tol || x(d) > domain.hi + tol) return false;
  return true;
}

void add_noise(Matrix& block, double std, const Rng& stream) {
  if (std <= 0 || block.size() == 0) return;
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    Rng row = stream.split(static_cast<std::uint64_t>(i));
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      block(i, j) += std * row.normal();
  }
}

}  // namespace

void validate_layout(const ProblemSpec& spec, const SensorLayout& layout,
                     DatasetMode mode) {
  const int dim = spec.op.spatial_dim();
  if (spec.domain.dim != dim)
    throw ValidationError("domain dimension does not match the operator");
  auto check_points = [&](const Matrix& pts, const char* name, bool boundary) {
    if (pts.rows() == 0) return;
    if (pts.cols() != dim)
      throw DimensionMismatch(std::string(name) + " sensors have wrong dimension");
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (!inside_closure(spec.domain, pts.row(i)))
        throw ValidationError(std::string(name) + " sensor outside the domain");
      if (boundary && !on_boundary(spec.domain, pts.row(i)))
        throw ValidationError(std::string(name) + " sensor not on the boundary");
    }
  };
  if (layout.f_sensors.rows() == 0)
    throw ValidationError("layout needs at least one f sensor");
  check_points(layout.f_sensors, "f", false);
  check_points(layout.g_sensors, "g", true);
  check_points(layout.k_sensors, "k", false);
  check_points(layout.u_sensors, "u", false);
  if (mode == DatasetMode::Forward && spec.op.uses_k() && !spec.k_spec)
    throw MissingParameterField("forward problem with this operator needs k_spec");
  if (mode == DatasetMode::Inverse) {
    if (!spec.k_spec)
      throw MissingParameterField("inverse problem needs k_spec");
    if (layout.u_sensors.rows() == 0)
      throw ValidationError("inverse problem needs u sensors");
  }
}

SnapshotDataset synthesize_forward(const ProblemSpec& spec,
                                   const SensorLayout& layout, int n_snapshots,
                                   const Rng& rng) {
  if (n_snapshots < 1) throw ValidationError("n_snapshots must be >= 1");
  validate_layout(spec, layout, DatasetMode::Forward);

  SnapshotDataset ds;
  ds.mode = DatasetMode::Forward;
  ds.layout = layout;
  ds.noise = spec.noise;
  ds.seed = rng.key();

  const Eigen::Index nf = layout.f_sensors.rows();
  const Eigen::Index ng = layout.g_sensors.rows();
  const Eigen::Index nk = spec.op.uses_k() ? layout.k_sensors.rows() : 0;

  ds.rows.resize(n_snapshots, nf + ng + nk);

  Matrix f_block = sample_gp(spec.f_spec, layout.f_sensors, rng.split("f"),
                             n_snapshots);
  add_noise(f_block, spec.noise.f, rng.split("f-noise"));
  ds.rows.leftCols(nf) = f_block;

  if (ng > 0) {
    Matrix g_block = Matrix::Constant(n_snapshots, ng, spec.dirichlet_value);
    add_noise(g_block, spec.noise.g, rng.split("g-noise"));
    ds.rows.middleCols(nf, ng) = g_block;
  }
  if (nk > 0) {
    Matrix k_block = sample_gp(*spec.k_spec, layout.k_sensors, rng.split("k"),
                               n_snapshots);
    add_noise(k_block, spec.noise.k, rng.split("k-noise"));
    ds.rows.rightCols(nk) = k_block;
  }
  return ds;
}

SnapshotDataset synthesize_inverse(const ProblemSpec& spec,
                                   const SensorLayout& layout, int n_snapshots,
                                   const Rng& rng, const Grid1D& solver_grid) {
  if (n_snapshots < 1) throw ValidationError("n_snapshots must be >= 1");
  validate_layout(spec, layout, DatasetMode::Inverse);
  if (spec.op.kind != OperatorKind::DivForm1D &&
      spec.op.kind != OperatorKind::NegLaplace1D)
    throw ValidationError("inverse synthesis supports 1-d operators only");

  auto grid_indices = [&](const Matrix& sensors) {
    std::vector<int> idx(sensors.rows());
    for (Eigen::Index i = 0; i < sensors.rows(); ++i) {
      const int g = solver_grid.index_of(sensors(i, 0));
      if (g < 0)
        throw ValidationError("solver grid must contain every sensor location");
      idx[static_cast<size_t>(i)] = g;
    }
    return idx;
  };
  const std::vector<int> f_idx = grid_indices(layout.f_sensors);
  const std::vector<int> u_idx = grid_indices(layout.u_sensors);

  Matrix grid_pts(solver_grid.n, 1);
  grid_pts.col(0) = solver_grid.points();

  const Vector f_mu = mean_eval(spec.f_spec.mean, grid_pts);
  const Vector k_mu = mean_eval(spec.k_spec->mean, grid_pts);
  Matrix f_chol, k_chol;
  if (spec.f_spec.kernel.sigma > 0)
    f_chol = cholesky_spd(gram(spec.f_spec.kernel, grid_pts)).lower;
  if (spec.k_spec->kernel.sigma > 0)
    k_chol = cholesky_spd(gram(spec.k_spec->kernel, grid_pts)).lower;

  SnapshotDataset ds;
  ds.mode = DatasetMode::Inverse;
  ds.layout = layout;
  ds.noise = spec.noise;
  ds.seed = rng.key();

  const Eigen::Index nf = layout.f_sensors.rows();
  const Eigen::Index ng = layout.g_sensors.rows();
  const Eigen::Index nu = layout.u_sensors.rows();
  ds.rows.resize(n_snapshots, nf + ng + nu);

  const Rng parent = rng.split("inverse");
  for (int j = 0; j < n_snapshots; ++j) {
    Rng child = parent.split(static_cast<std::uint64_t>(j));
    Vector f = f_mu;
    if (f_chol.size() > 0) f += f_chol * standard_normal(child, solver_grid.n);
    if (spec.f_spec.transform.kind != TransformKind::None)
      for (int i = 0; i < solver_grid.n; ++i)
        f(i) = apply_transform(spec.f_spec.transform, f(i));

    Vector k = k_mu;
    if (k_chol.size() > 0) k += k_chol * standard_normal(child, solver_grid.n);
    for (int i = 0; i < solver_grid.n; ++i)
      k(i) = apply_transform(spec.k_spec->transform, k(i));

    Vector u;
    try {
      u = solve_divform_1d(
          k, f, {spec.dirichlet_value, spec.dirichlet_value}, solver_grid);
    } catch (const NumericalError& e) {
      throw SolverFailed("snapshot " + std::to_string(j) +
                         " solve failed: " + e.what());
    }

    for (Eigen::Index i = 0; i < nf; ++i)
      ds.rows(j, i) = f(f_idx[static_cast<size_t>(i)]) +
                      (spec.noise.f > 0 ? spec.noise.f * child.normal() : 0.0);
    for (Eigen::Index i = 0; i < ng; ++i)
      ds.rows(j, nf + i) = spec.dirichlet_value +
                           (spec.noise.g > 0 ? spec.noise.g * child.normal() : 0.0);
    for (Eigen::Index i = 0; i < nu; ++i)
      ds.rows(j, nf + ng + i) = u(u_idx[static_cast<size_t>(i)]) +
                                (spec.noise.u > 0 ? spec.noise.u * child.normal() : 0.0);
  }
  return ds;
}

namespace {

json layout_to_json(const SensorLayout& layout) {
  json j;
  j["f_sensors"] = matrix_to_json(layout.f_sensors);
  j["g_sensors"] = matrix_to_json(layout.g_sensors);
  j["k_sensors"] = matrix_to_json(layout.k_sensors);
  j["u_sensors"] = matrix_to_json(layout.u_sensors);
  return j;
}

SensorLayout layout_from_json(const json& j) {
  SensorLayout layout;
  layout.f_sensors = matrix_from_json(j.at("f_sensors"));
  layout.g_sensors = matrix_from_json(j.at("g_sensors"));
  layout.k_sensors = matrix_from_json(j.at("k_sensors"));
  layout.u_sensors = matrix_from_json(j.at("u_sensors"));
  return layout;
}

}  // namespace

void save_dataset(const SnapshotDataset& ds, const std::filesystem::path& path) {
  json header;
  header["mode"] = ds.mode == DatasetMode::Forward ? "forward" : "inverse";
  header["n_f"] = ds.n_f();
  header["n_g"] = ds.n_g();
  header["n_tail"] = ds.n_tail();
  header["noise"] = {{"f", ds.noise.f}, {"g", ds.noise.g},
                     {"k", ds.noise.k}, {"u", ds.noise.u}};
  header["seed"] = ds.seed;
  header["layout"] = layout_to_json(ds.layout);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << header.dump() << '\n';
  write_matrix_csv(os, ds.rows);
  if (!os) throw IoError("write failed: " + path.string());
}

SnapshotDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifacts("missing dataset file: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty dataset file");
  const json header = json::parse(line);

  SnapshotDataset ds;
  ds.mode = header.at("mode").get<std::string>() == "forward"
                ? DatasetMode::Forward
                : DatasetMode::Inverse;
  ds.noise.f = header.at("noise").at("f").get<double>();
  ds.noise.g = header.at("noise").at("g").get<double>();
  ds.noise.k = header.at("noise").at("k").get<double>();
  ds.noise.u = header.at("noise").at("u").get<double>();
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.layout = layout_from_json(header.at("layout"));
  ds.rows = read_matrix_csv(is);
  if (ds.rows.cols() != ds.row_length())
    throw IoError("dataset row length does not match the header");
  return ds;
}

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::NegLaplace1D: return "neg_laplace_1d";
    case OperatorKind::AllenCahn2D: return "allen_cahn_2d";
    case OperatorKind::DivForm1D: return "div_form_1d";
  }
  return "?";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "identity") return OperatorKind::Identity;
  if (s == "neg_laplace_1d") return OperatorKind::NegLaplace1D;
  if (s == "allen_cahn_2d") return OperatorKind::AllenCahn2D;
  if (s == "div_form_1d") return OperatorKind::DivForm1D;
  throw ValidationError("unknown operator kind: " + s);
}

}  // namespace spde
