#include "spde/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spde {

using std::numbers::pi;

namespace {

void validate_kernel(const Kernel& k) {
  if (k.sigma < 0) throw ValidationError("kernel sigma must be >= 0");
  if (k.length <= 0) throw ValidationError("kernel length must be > 0");
}

double kernel_of_distance(const Kernel& k, double r) {
  const double s2 = k.sigma * k.sigma;
  const double q = r / k.length;
  switch (k.kind) {
    case KernelKind::SquaredExponential:
      return s2 * std::exp(-0.5 * q * q);
    case KernelKind::MaternPaperForm:
      return s2 * (1.0 + std::sqrt(5.0) * q + 5.0 / 3.0 * q * q) * std::exp(-q);
    case KernelKind::MaternStandard52:
      return s2 * (1.0 + std::sqrt(5.0) * q + 5.0 / 3.0 * q * q) *
             std::exp(-std::sqrt(5.0) * q);
  }
  throw ValidationError("unknown kernel kind");
}

}  // namespace

double kernel_eval(const Kernel& k, const Eigen::RowVectorXd& x,
                   const Eigen::RowVectorXd& y) {
  validate_kernel(k);
  if (x.size() != y.size())
    throw DimensionMismatch("kernel_eval: point dimensions differ");
  return kernel_of_distance(k, (x - y).norm());
}

double mean_eval(const MeanFn& m, const Eigen::RowVectorXd& x) {
  switch (m.kind) {
    case MeanKind::Zero:
      return 0.0;
    case MeanKind::Constant:
      return m.amplitude;
    case MeanKind::SinPi:
      return m.amplitude * std::sin(pi * x(0));
    case MeanKind::ProductSinPi2D:
      if (x.size() < 2)
        throw DimensionMismatch("ProductSinPi2D mean needs 2-d points");
      return m.amplitude * std::sin(pi * x(0)) * std::sin(pi * x(1));
  }
  throw ValidationError("unknown mean kind");
}

Vector mean_eval(const MeanFn& m, const Matrix& points) {
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out(i) = mean_eval(m, points.row(i));
  return out;
}

double apply_transform(const Transform& t, double latent) {
  switch (t.kind) {
    case TransformKind::None:
      return latent;
    case TransformKind::LogShift:
      return t.shift + std::exp(latent);
  }
  throw ValidationError("unknown transform kind");
}

Matrix gram(const Kernel& k, const Matrix& points) {
  validate_kernel(k);
  const Eigen::Index n = points.rows();
  if (n < 1) throw EmptyData("gram needs at least one point");
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = k.sigma * k.sigma;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          kernel_of_distance(k, (points.row(i) - points.row(j)).norm());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Matrix sample_gp(const GpSpec& spec, const Matrix& points, const Rng& rng,
                 int n_draws) {
  if (n_draws < 1) throw ValidationError("sample_gp requires n_draws >= 1");
  const Eigen::Index p = points.rows();
  const Vector mu = mean_eval(spec.mean, points);

  Matrix draws(n_draws, p);
  if (spec.kernel.sigma == 0.0) {
    Vector row(p);
    for (Eigen::Index j = 0; j < p; ++j)
      row(j) = apply_transform(spec.transform, mu(j));
    draws = row.transpose().replicate(n_draws, 1);
    return draws;
  }

  const Matrix L = cholesky_spd(gram(spec.kernel, points)).lower;
  for (int d = 0; d < n_draws; ++d) {
    Rng child = rng.split(static_cast<std::uint64_t>(d));
    Vector latent = mu + L * standard_normal(child, p);
    for (Eigen::Index j = 0; j < p; ++j)
      draws(d, j) = apply_transform(spec.transform, latent(j));
  }
  return draws;
}

int kl_dimension_from_eigenvalues(Vector eigenvalues, double energy) {
  if (energy <= 0.0 || energy >= 1.0)
    throw ValidationError("energy fraction must lie in (0,1)");
  std::sort(eigenvalues.data(), eigenvalues.data() + eigenvalues.size(),
            std::greater<double>());
  // Clamp small negative eigenvalues from roundoff.
  const Vector ev = eigenvalues.cwiseMax(0.0);
  const double total = ev.sum();
  if (total <= 0) throw ValidationError("eigenvalue spectrum has no energy");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    acc += ev(i);
    if (acc >= energy * total) return static_cast<int>(i + 1);
  }
  return static_cast<int>(ev.size());
}

int kl_dimension(const Kernel& k, double lo, double hi, int grid_n,
                 double energy) {
  if (grid_n < 256) throw ValidationError("kl_dimension requires grid_n >= 256");
  if (hi <= lo) throw ValidationError("kl_dimension requires hi > lo");
  Matrix points(grid_n, 1);
  for (int i = 0; i < grid_n; ++i)
    points(i, 0) = lo + (hi - lo) * i / (grid_n - 1.0);
  return kl_dimension_from_eigenvalues(eigh_values(gram(k, points)), energy);
}

AnalyticMoments lognormal_moments(const GpSpec& spec, const Matrix& points) {
  if (spec.transform.kind != TransformKind::LogShift)
    throw ValidationError("lognormal_moments needs a log-shift transform");
  const Vector m = mean_eval(spec.mean, points);
  const double v = spec.kernel.sigma * spec.kernel.sigma;
  AnalyticMoments out;
  out.mean.resize(points.rows());
  out.std.resize(points.rows());
  const double spread = std::sqrt(std::exp(v) - 1.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double scale = std::exp(m(i) + 0.5 * v);
    out.mean(i) = spec.transform.shift + scale;
    out.std(i) = scale * spread;
  }
  return out;
}

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::SquaredExponential: return "squared_exponential";
    case KernelKind::MaternPaperForm: return "matern_paper_form";
    case KernelKind::MaternStandard52: return "matern_standard52";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "squared_exponential") return KernelKind::SquaredExponential;
  if (s == "matern_paper_form") return KernelKind::MaternPaperForm;
  if (s == "matern_standard52") return KernelKind::MaternStandard52;
  throw ValidationError("unknown kernel kind: " + s);
}

std::string to_string(MeanKind m) {
  switch (m) {
    case MeanKind::Zero: return "zero";
    case MeanKind::Constant: return "constant";
    case MeanKind::SinPi: return "sin_pi";
    case MeanKind::ProductSinPi2D: return "product_sin_pi_2d";
  }
  return "?";
}

MeanKind mean_kind_from_string(const std::string& s) {
  if (s == "zero") return MeanKind::Zero;
  if (s == "constant") return MeanKind::Constant;
  if (s == "sin_pi") return MeanKind::SinPi;
  if (s == "product_sin_pi_2d") return MeanKind::ProductSinPi2D;
  throw ValidationError("unknown mean kind: " + s);
}

std::string to_string(TransformKind t) {
  switch (t) {
    case TransformKind::None: return "none";
    case TransformKind::LogShift: return "log_shift";
  }
  return "?";
}

TransformKind transform_kind_from_string(const std::string& s) {
  if (s == "none") return TransformKind::None;
  if (s == "log_shift") return TransformKind::LogShift;
  throw ValidationError("unknown transform kind: " + s);
}

}  // namespace spde
