#pragma once

#include <string>

#include "spde/linalg.hpp"

namespace spde {

// Points are stored one per row (P x dim), dim 1 or 2.

enum class KernelKind {
  SquaredExponential,   // s^2 exp(-r^2 / (2 l^2))
  MaternPaperForm,      // s^2 (1 + sqrt5 r/l + 5 r^2/(3 l^2)) exp(-r/l)
  MaternStandard52,     // s^2 (1 + sqrt5 r/l + 5 r^2/(3 l^2)) exp(-sqrt5 r/l)
};

struct Kernel {
  KernelKind kind = KernelKind::SquaredExponential;
  double sigma = 1.0;   // amplitude; k(x,x) = sigma^2
  double length = 1.0;  // correlation length
};

enum class MeanKind { Zero, Constant, SinPi, ProductSinPi2D };

struct MeanFn {
  MeanKind kind = MeanKind::Zero;
  double amplitude = 0.0;
};

enum class TransformKind { None, LogShift };

/// LogShift(s): the observed process is s + exp(latent GP).
struct Transform {
  TransformKind kind = TransformKind::None;
  double shift = 0.0;
};

struct GpSpec {
  MeanFn mean;
  Kernel kernel;
  Transform transform;
};

double kernel_eval(const Kernel& k, const Eigen::RowVectorXd& x,
                   const Eigen::RowVectorXd& y);

double mean_eval(const MeanFn& m, const Eigen::RowVectorXd& x);
Vector mean_eval(const MeanFn& m, const Matrix& points);

double apply_transform(const Transform& t, double latent);

/// Gram matrix: entries(i,j) = kernel_eval(points_i, points_j).
Matrix gram(const Kernel& k, const Matrix& points);

/// Draws of the (transformed) process on the given points, one draw per row.
/// Draw j uses the child stream rng.split(j), so results do not depend on how
/// draws are scheduled.
Matrix sample_gp(const GpSpec& spec, const Matrix& points, const Rng& rng,
                 int n_draws);

/// Smallest m such that the top-m Gram eigenvalues on a uniform grid over
/// [lo, hi] hold at least `energy` of the total spectrum.
int kl_dimension(const Kernel& k, double lo, double hi, int grid_n,
                 double energy);

/// Same reduction applied to an explicit eigenvalue list (descending or not).
int kl_dimension_from_eigenvalues(Vector eigenvalues, double energy);

/// Closed-form pointwise moments of a log-shift process s + exp(G) with
/// latent G ~ GP(mean, kernel): mean = s + exp(m + v/2),
/// std = exp(m + v/2) sqrt(exp(v) - 1) with v the kernel variance.
struct AnalyticMoments {
  Vector mean;
  Vector std;
};
AnalyticMoments lognormal_moments(const GpSpec& spec, const Matrix& points);

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);
std::string to_string(MeanKind m);
MeanKind mean_kind_from_string(const std::string& s);
std::string to_string(TransformKind t);
TransformKind transform_kind_from_string(const std::string& s);

}  // namespace spde
