#include "spde/reference.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <fstream>
#include <string>

#include "spde/io.hpp"

namespace spde {

namespace {

// Thomas algorithm for a tridiagonal system (diagonals a=sub, b=main, c=super).
Vector solve_tridiag(Vector a, Vector b, Vector c, Vector rhs) {
  const Eigen::Index n = b.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(b(i - 1)) < 1e-300)
      throw SingularSystem("tridiagonal pivot vanished");
    const double w = a(i) / b(i - 1);
    b(i) -= w * c(i - 1);
    rhs(i) -= w * rhs(i - 1);
  }
  if (std::abs(b(n - 1)) < 1e-300)
    throw SingularSystem("tridiagonal pivot vanished");
  Vector u(n);
  u(n - 1) = rhs(n - 1) / b(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i)
    u(i) = (rhs(i) - c(i) * u(i + 1)) / b(i);
  return u;
}

}  // namespace

Vector solve_divform_1d(const Vector& k, const Vector& f,
                        std::pair<double, double> bc, const Grid1D& grid) {
  const int n = grid.n;
  if (n < 3) throw ValidationError("solver grid needs at least 3 points");
  if (k.size() != n || f.size() != n)
    throw DimensionMismatch("grid value vectors must match the grid size");
  if (k.minCoeff() <= 0.0)
    throw NonPositiveCoefficient("divergence-form coefficient must be > 0");

  const double h2 = grid.h() * grid.h();
  const int m = n - 2;  // interior unknowns
  Vector sub(m), diag(m), sup(m), rhs(m);
  for (int i = 0; i < m; ++i) {
    const int g = i + 1;  // grid index
    const double kw = 0.5 * (k(g - 1) + k(g));  // arithmetic midpoints
    const double ke = 0.5 * (k(g) + k(g + 1));
    sub(i) = -kw / h2;
    sup(i) = -ke / h2;
    diag(i) = (kw + ke) / h2;
    rhs(i) = f(g);
  }
  rhs(0) += (0.5 * (k(0) + k(1)) / h2) * bc.first;
  rhs(m - 1) += (0.5 * (k(n - 2) + k(n - 1)) / h2) * bc.second;

  const Vector interior = solve_tridiag(sub, diag, sup, rhs);
  Vector u(n);
  u(0) = bc.first;
  u(n - 1) = bc.second;
  u.segment(1, m) = interior;
  return u;
}

Vector solve_poisson_1d(const Vector& f, std::pair<double, double> bc,
                        const Grid1D& grid) {
  return solve_divform_1d(Vector::Ones(grid.n), f, bc, grid);
}

AllenCahnSolution solve_allen_cahn_2d(const Vector& f, const Grid2D& grid,
                                      double cubic_coeff,
                                      const NewtonOptions& opts) {
  const int nx = grid.nx, ny = grid.ny;
  if (f.size() != grid.count())
    throw DimensionMismatch("f must be flattened on the tensor grid");
  const int mx = nx - 2, my = ny - 2;
  const int m = mx * my;
  const double ihx2 = 1.0 / (grid.hx() * grid.hx());
  const double ihy2 = 1.0 / (grid.hy() * grid.hy());

  auto interior_index = [&](int ix, int iy) { return (iy - 1) * mx + (ix - 1); };

  // 5-point -lap on interior unknowns, homogeneous Dirichlet boundary.
  Eigen::SparseMatrix<double> lap(m, m);
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(5) * m);
    for (int iy = 1; iy < ny - 1; ++iy)
      for (int ix = 1; ix < nx - 1; ++ix) {
        const int row = interior_index(ix, iy);
        trips.emplace_back(row, row, 2.0 * ihx2 + 2.0 * ihy2);
        if (ix > 1) trips.emplace_back(row, interior_index(ix - 1, iy), -ihx2);
        if (ix < nx - 2) trips.emplace_back(row, interior_index(ix + 1, iy), -ihx2);
        if (iy > 1) trips.emplace_back(row, interior_index(ix, iy - 1), -ihy2);
        if (iy < ny - 2) trips.emplace_back(row, interior_index(ix, iy + 1), -ihy2);
      }
    lap.setFromTriplets(trips.begin(), trips.end());
  }

  Vector fi(m);
  for (int iy = 1; iy < ny - 1; ++iy)
    for (int ix = 1; ix < nx - 1; ++ix)
      fi(interior_index(ix, iy)) = f(iy * nx + ix);

  auto residual = [&](const Vector& u) -> Vector {
    return lap * u + cubic_coeff * u.array().cube().matrix() -
           cubic_coeff * u - fi;
  };

  Vector u = Vector::Zero(m);
  Vector r = residual(u);
  AllenCahnSolution out;
  out.residual_norms.push_back(r.lpNorm<Eigen::Infinity>());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  Eigen::SparseMatrix<double> jac = lap;  // reuse sparsity pattern
  solver.analyzePattern(lap);

  for (int it = 0; it < opts.max_iter; ++it) {
    if (out.residual_norms.back() < opts.tol) {
      Vector full = Vector::Zero(grid.count());
      for (int iy = 1; iy < ny - 1; ++iy)
        for (int ix = 1; ix < nx - 1; ++ix)
          full(iy * nx + ix) = u(interior_index(ix, iy));
      out.u = full;
      return out;
    }
    jac = lap;
    for (int i = 0; i < m; ++i)
      jac.coeffRef(i, i) += cubic_coeff * (3.0 * u(i) * u(i) - 1.0);
    solver.factorize(jac);
    if (solver.info() != Eigen::Success)
      throw SolverFailed("Allen-Cahn Newton Jacobian factorization failed");
    const Vector step = solver.solve(-r);

    double alpha = 1.0;
    const double r0 = out.residual_norms.back();
    Vector u_next;
    Vector r_next;
    while (true) {
      u_next = u + alpha * step;
      r_next = residual(u_next);
      if (r_next.lpNorm<Eigen::Infinity>() < r0 || alpha < 1e-4) break;
      alpha *= 0.5;
    }
    u = u_next;
    r = r_next;
    out.residual_norms.push_back(r.lpNorm<Eigen::Infinity>());
  }
  if (out.residual_norms.back() < opts.tol) {
    Vector full = Vector::Zero(grid.count());
    for (int iy = 1; iy < ny - 1; ++iy)
      for (int ix = 1; ix < nx - 1; ++ix)
        full(iy * nx + ix) = u(interior_index(ix, iy));
    out.u = full;
    return out;
  }
  throw NewtonDiverged("Allen-Cahn Newton did not reach tolerance; final residual " +
                       std::to_string(out.residual_norms.back()));
}

namespace {

struct MomentAccumulator {
  Vector sum;
  Vector sumsq;
  Matrix cov_sum;        // outer-product sums on the subgrid
  Vector cov_mean_sum;   // subgrid sums
  std::int64_t count = 0;

  explicit MomentAccumulator(Eigen::Index p, Eigen::Index psub)
      : sum(Vector::Zero(p)),
        sumsq(Vector::Zero(p)),
        cov_sum(Matrix::Zero(psub, psub)),
        cov_mean_sum(Vector::Zero(psub)) {}

  void add(const Vector& x, const std::vector<int>& sub) {
    sum += x;
    sumsq += x.cwiseProduct(x);
    if (!sub.empty()) {
      Vector xs(sub.size());
      for (size_t i = 0; i < sub.size(); ++i) xs(i) = x(sub[i]);
      cov_sum.selfadjointView<Eigen::Lower>().rankUpdate(xs);
      cov_mean_sum += xs;
    }
    ++count;
  }

  void merge(const MomentAccumulator& other) {
    sum += other.sum;
    sumsq += other.sumsq;
    cov_sum += other.cov_sum;
    cov_mean_sum += other.cov_mean_sum;
    count += other.count;
  }
};

}  // namespace

ReferenceStats mc_reference(const ProblemSpec& spec, const Grid1D& grid1,
                            const Grid2D& grid2, const McOptions& opts) {
  if (opts.n_mc < 1) throw ValidationError("n_mc must be >= 1");
  const bool is_2d = spec.op.spatial_dim() == 2;

  Matrix points;
  if (is_2d) {
    points = grid2.points();
  } else {
    const Vector x = grid1.points();
    points = Matrix(x.size(), 1);
    points.col(0) = x;
  }
  const Eigen::Index p = points.rows();

  // One Cholesky of the grid Gram, reused across samples.
  const Vector f_mu = mean_eval(spec.f_spec.mean, points);
  Matrix f_chol;
  if (spec.f_spec.kernel.sigma > 0)
    f_chol = cholesky_spd(gram(spec.f_spec.kernel, points)).lower;
  Vector k_mu;
  Matrix k_chol;
  if (spec.op.uses_k()) {
    if (!spec.k_spec)
      throw MissingParameterField("operator requires k_spec");
    k_mu = mean_eval(spec.k_spec->mean, points);
    if (spec.k_spec->kernel.sigma > 0)
      k_chol = cholesky_spd(gram(spec.k_spec->kernel, points)).lower;
  }

  std::vector<int> boundary_idx;
  if (spec.noise.g > 0) {
    if (is_2d) {
      for (int iy = 0; iy < grid2.ny; ++iy)
        for (int ix = 0; ix < grid2.nx; ++ix)
          if (ix == 0 || iy == 0 || ix == grid2.nx - 1 || iy == grid2.ny - 1)
            boundary_idx.push_back(iy * grid2.nx + ix);
    } else {
      boundary_idx = {0, static_cast<int>(p - 1)};
    }
  }

  std::vector<int> sub;
  if (opts.cov_subgrid > 1) {
    const int c = std::min<int>(opts.cov_subgrid, static_cast<int>(p));
    for (int i = 0; i < c; ++i)
      sub.push_back(static_cast<int>(std::lround(i * (p - 1.0) / (c - 1.0))));
  }

  const Rng parent(opts.seed);
  auto draw_field = [&](const Vector& mu, const Matrix& chol,
                        const Transform& tr, Rng& rng) -> Vector {
    Vector latent = mu;
    if (chol.size() > 0) latent += chol * standard_normal(rng, p);
    if (tr.kind == TransformKind::None) return latent;
    for (Eigen::Index i = 0; i < p; ++i)
      latent(i) = apply_transform(tr, latent(i));
    return latent;
  };

  auto solve_sample = [&](std::int64_t idx) -> Vector {
    Rng rng = parent.split(static_cast<std::uint64_t>(idx));
    const Vector f = draw_field(f_mu, f_chol, spec.f_spec.transform, rng);
    Vector u;
    switch (spec.op.kind) {
      case OperatorKind::Identity:
        u = f;
        break;
      case OperatorKind::NegLaplace1D:
        u = solve_poisson_1d(f, {spec.dirichlet_value, spec.dirichlet_value},
                             grid1);
        break;
      case OperatorKind::DivForm1D: {
        const Vector k =
            draw_field(k_mu, k_chol, spec.k_spec->transform, rng);
        u = solve_divform_1d(k, f,
                             {spec.dirichlet_value, spec.dirichlet_value},
                             grid1);
        break;
      }
      case OperatorKind::AllenCahn2D:
        u = solve_allen_cahn_2d(f, grid2, spec.op.cubic_coeff).u;
        break;
    }
    for (int b : boundary_idx) u(b) += spec.noise.g * rng.normal();
    return u;
  };

  // Fixed-size chunks merged in order: sums are identical no matter how the
  // chunks are scheduled.
  MomentAccumulator total(p, static_cast<Eigen::Index>(sub.size()));
  const int chunk = std::max(1, opts.chunk);
  for (std::int64_t start = 0; start < opts.n_mc; start += chunk) {
    MomentAccumulator part(p, static_cast<Eigen::Index>(sub.size()));
    const std::int64_t stop = std::min<std::int64_t>(start + chunk, opts.n_mc);
    for (std::int64_t i = start; i < stop; ++i) {
      try {
        part.add(solve_sample(i), sub);
      } catch (const NumericalError& e) {
        throw SolverFailed("MC sample " + std::to_string(i) +
                           " failed: " + e.what());
      }
    }
    total.merge(part);
  }

  ReferenceStats out;
  out.grid_points = points;
  const double n = static_cast<double>(total.count);
  out.mean = total.sum / n;
  out.std = (total.sumsq / n - out.mean.cwiseProduct(out.mean))
                .cwiseMax(0.0)
                .cwiseSqrt();
  if (!sub.empty()) {
    Matrix c = total.cov_sum.selfadjointView<Eigen::Lower>();
    c /= n;
    Vector ms = total.cov_mean_sum / n;
    c -= ms * ms.transpose();
    out.cov = 0.5 * (c + c.transpose());
    out.cov_subgrid = sub;
  }
  out.n_mc = total.count;
  out.seed = opts.seed;
  return out;
}

void save_reference(const ReferenceStats& s, const std::filesystem::path& path) {
  json header;
  header["n_mc"] = s.n_mc;
  header["seed"] = s.seed;
  header["dim"] = s.grid_points.cols();
  header["cov_subgrid"] = s.cov_subgrid;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << header.dump() << '\n';
  // Rows: grid coordinates, mean, std.
  Matrix table(s.grid_points.rows(), s.grid_points.cols() + 2);
  table.leftCols(s.grid_points.cols()) = s.grid_points;
  table.col(s.grid_points.cols()) = s.mean;
  table.col(s.grid_points.cols() + 1) = s.std;
  write_matrix_csv(os, table);
  if (s.cov) {
    os << "# cov\n";
    write_matrix_csv(os, *s.cov);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

ReferenceStats load_reference(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifacts("missing reference file: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty reference file");
  const json header = json::parse(line);
  ReferenceStats s;
  s.n_mc = header.at("n_mc").get<std::int64_t>();
  s.seed = header.at("seed").get<std::uint64_t>();
  s.cov_subgrid = header.at("cov_subgrid").get<std::vector<int>>();
  const int dim = header.at("dim").get<int>();

  std::vector<std::vector<double>> rows;
  bool in_cov = false;
  std::vector<std::vector<double>> cov_rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      in_cov = true;
      continue;
    }
    (in_cov ? cov_rows : rows).push_back(parse_csv_row(line));
  }
  const Eigen::Index p = static_cast<Eigen::Index>(rows.size());
  s.grid_points.resize(p, dim);
  s.mean.resize(p);
  s.std.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (int d = 0; d < dim; ++d) s.grid_points(i, d) = rows[i][d];
    s.mean(i) = rows[i][dim];
    s.std(i) = rows[i][dim + 1];
  }
  if (!cov_rows.empty()) {
    Matrix c(cov_rows.size(), cov_rows[0].size());
    for (size_t i = 0; i < cov_rows.size(); ++i)
      for (size_t j = 0; j < cov_rows[i].size(); ++j) c(i, j) = cov_rows[i][j];
    s.cov = c;
  }
  return s;
}

}  // namespace spde
