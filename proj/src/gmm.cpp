#include "spde/gmm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "spde/io.hpp"

namespace spde {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kWeightFloor = 1e-12;

void finalize_component(GaussianMixture& g, int i, const Matrix& cov) {
  const CholeskyResult c = cholesky_spd(cov);
  g.chol[static_cast<size_t>(i)] = c.lower;
  g.log_det[static_cast<size_t>(i)] =
      2.0 * c.lower.diagonal().array().log().sum();
}

// Per-row log density under each component: out(r, i) = log w_i N(x_r; ...).
Matrix component_log_terms(const GaussianMixture& g, const Matrix& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = g.dim();
  Matrix out(n, g.components());
  for (int i = 0; i < g.components(); ++i) {
    Matrix centered = rows.transpose();  // d x n
    centered.colwise() -= g.means.row(i).transpose();
    g.chol[static_cast<size_t>(i)]
        .triangularView<Eigen::Lower>()
        .solveInPlace(centered);
    const double base = std::log(g.weights(i)) -
                        0.5 * (d * kLog2Pi + g.log_det[static_cast<size_t>(i)]);
    out.col(i) =
        (-0.5 * centered.colwise().squaredNorm().transpose().array() + base)
            .matrix();
  }
  return out;
}

Vector row_logsumexp(const Matrix& terms) {
  Vector out(terms.rows());
  for (Eigen::Index r = 0; r < terms.rows(); ++r) {
    const double m = terms.row(r).maxCoeff();
    out(r) = m + std::log((terms.row(r).array() - m).exp().sum());
  }
  return out;
}

GaussianMixture em_loop(const Matrix& rows, GaussianMixture g, double reg,
                        int max_iter, double tol, EmReport* report) {
  const Eigen::Index n = rows.rows();
  EmReport local;
  EmReport& rep = report ? *report : local;
  rep = EmReport{};

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    // E-step.
    const Matrix terms = component_log_terms(g, rows);
    const Vector lse = row_logsumexp(terms);
    const double mean_loglik = lse.mean();
    rep.loglik_trace.push_back(mean_loglik);
    rep.iterations = it + 1;

    Matrix resp = (terms.colwise() - lse).array().exp().matrix();

    // M-step.
    const Vector counts = resp.colwise().sum();
    for (int i = 0; i < g.components(); ++i) {
      const double wi = counts(i) / static_cast<double>(n);
      if (!(wi > kWeightFloor))
        throw DegenerateComponent("mixture weight underflow in component " +
                                  std::to_string(i));
      g.weights(i) = wi;
      const Vector m = (rows.transpose() * resp.col(i)) / counts(i);
      g.means.row(i) = m.transpose();
      Matrix centered = rows.rowwise() - m.transpose();
      Matrix weighted = (centered.array().colwise() * resp.col(i).array()).matrix();
      Matrix cov = (centered.transpose() * weighted) / counts(i);
      cov.diagonal().array() += reg;
      cov = 0.5 * (cov + cov.transpose());
      finalize_component(g, i, cov);
    }

    if (it > 0 && mean_loglik - prev < tol) {
      rep.converged = true;
      break;
    }
    prev = mean_loglik;
  }
  return g;
}

}  // namespace

GaussianMixture fit_em_from(const Matrix& rows, const EmInit& init, double reg,
                            int max_iter, double tol, EmReport* report) {
  if (rows.rows() == 0) throw EmptyData("fit_em: no data rows");
  GaussianMixture g;
  g.weights = init.weights;
  g.means = init.means;
  g.chol.resize(init.covariances.size());
  g.log_det.resize(init.covariances.size());
  for (size_t i = 0; i < init.covariances.size(); ++i)
    finalize_component(g, static_cast<int>(i), init.covariances[i]);
  return em_loop(rows, std::move(g), reg, max_iter, tol, report);
}

GaussianMixture fit_em(const Matrix& rows, int n_components, double reg,
                       Rng& rng, int max_iter, double tol, EmReport* report) {
  if (rows.rows() == 0) throw EmptyData("fit_em: no data rows");
  if (n_components < 1)
    throw ValidationError("fit_em: n_components must be >= 1");
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n <= d && reg <= 0)
    throw ValidationError(
        "fit_em: fewer rows than dimensions requires reg > 0");

  // k-means++-style seeding: first mean uniform, the rest by squared-distance
  // weighted draws.
  EmInit init;
  init.weights = Vector::Constant(n_components, 1.0 / n_components);
  init.means.resize(n_components, d);
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(rng.uniform() * n) % n);
  init.means.row(0) = rows.row(chosen[0]);
  Vector min_d2 = (rows.rowwise() - rows.row(chosen[0])).rowwise().squaredNorm();
  for (int i = 1; i < n_components; ++i) {
    const double total = min_d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double target = rng.uniform() * total;
      double acc = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        acc += min_d2(r);
        if (acc >= target) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform() * n) % n;
    }
    chosen.push_back(pick);
    init.means.row(i) = rows.row(pick);
    min_d2 =
        min_d2.cwiseMin((rows.rowwise() - rows.row(pick)).rowwise().squaredNorm());
  }

  // Shared initial covariance: global sample covariance plus reg.
  const Vector gm = (rows.transpose() * Vector::Ones(n)) / static_cast<double>(n);
  Matrix centered = rows.rowwise() - gm.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov.diagonal().array() += reg;
  cov = 0.5 * (cov + cov.transpose());
  init.covariances.assign(static_cast<size_t>(n_components), cov);

  return fit_em_from(rows, init, reg, max_iter, tol, report);
}

double log_pdf(const GaussianMixture& g, const Vector& x) {
  if (x.size() != g.dim())
    throw DimensionMismatch("log_pdf: point has wrong dimension");
  double best = -std::numeric_limits<double>::infinity();
  Vector terms(g.components());
  for (int i = 0; i < g.components(); ++i) {
    Vector z = x - g.means.row(i).transpose();
    g.chol[static_cast<size_t>(i)].triangularView<Eigen::Lower>().solveInPlace(z);
    terms(i) = std::log(g.weights(i)) -
               0.5 * (g.dim() * kLog2Pi + g.log_det[static_cast<size_t>(i)] +
                      z.squaredNorm());
    best = std::max(best, terms(i));
  }
  return best + std::log((terms.array() - best).exp().sum());
}

Vector grad_log_pdf(const GaussianMixture& g, const Vector& x) {
  if (x.size() != g.dim())
    throw DimensionMismatch("grad_log_pdf: point has wrong dimension");
  Vector terms(g.components());
  Matrix neg_prec_dev(g.dim(), g.components());  // -S_i^{-1} (x - m_i)
  for (int i = 0; i < g.components(); ++i) {
    const Matrix& L = g.chol[static_cast<size_t>(i)];
    Vector z = x - g.means.row(i).transpose();
    L.triangularView<Eigen::Lower>().solveInPlace(z);
    terms(i) = std::log(g.weights(i)) -
               0.5 * (g.dim() * kLog2Pi + g.log_det[static_cast<size_t>(i)] +
                      z.squaredNorm());
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    neg_prec_dev.col(i) = -z;
  }
  const double m = terms.maxCoeff();
  Vector resp = (terms.array() - m).exp().matrix();
  resp /= resp.sum();
  return neg_prec_dev * resp;
}

Matrix responsibilities(const GaussianMixture& g, const Matrix& rows) {
  const Matrix terms = component_log_terms(g, rows);
  const Vector lse = row_logsumexp(terms);
  return (terms.colwise() - lse).array().exp().matrix();
}

void save_mixture(const GaussianMixture& g, const std::filesystem::path& path) {
  json j;
  j["weights"] = vector_to_json(g.weights);
  j["means"] = matrix_to_json(g.means);
  json factors = json::array();
  for (const Matrix& L : g.chol) factors.push_back(matrix_to_json(L));
  j["chol"] = std::move(factors);
  write_text_file(path, j.dump());
}

GaussianMixture load_mixture(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  GaussianMixture g;
  g.weights = vector_from_json(j.at("weights"));
  g.means = matrix_from_json(j.at("means"));
  for (const auto& f : j.at("chol")) {
    g.chol.push_back(matrix_from_json(f));
    g.log_det.push_back(2.0 * g.chol.back().diagonal().array().log().sum());
  }
  return g;
}

}  // namespace spde
