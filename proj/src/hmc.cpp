#include "spde/hmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace spde {

double HmcChain::acceptance_rate() const {
  if (accept_flags.empty()) return 0.0;
  double acc = 0;
  for (std::uint8_t f : accept_flags) acc += f;
  return acc / static_cast<double>(accept_flags.size());
}

std::pair<Vector, Vector> leapfrog(
    const std::function<Vector(const Vector&)>& grad_potential, Vector z,
    Vector r, int steps, double step_size) {
  if (z.size() != r.size())
    throw DimensionMismatch("leapfrog: position and momentum sizes differ");
  if (step_size <= 0) throw ValidationError("leapfrog: step size must be > 0");
  if (steps == 0) return {std::move(z), std::move(r)};
  if (steps < 0) throw ValidationError("leapfrog: steps must be >= 0");

  // Consecutive half-kicks share one gradient evaluation; the result is
  // identical to evaluating it twice.
  Vector g = grad_potential(z);
  for (int j = 0; j < steps; ++j) {
    r -= (0.5 * step_size) * g;
    z += step_size * r;  // dK/dr = r for standard-normal momentum
    if (!z.allFinite())
      throw NonFiniteState("leapfrog position diverged at step " +
                           std::to_string(j));
    g = grad_potential(z);
    if (!g.allFinite())
      throw NonFiniteState("leapfrog gradient diverged at step " +
                           std::to_string(j));
    r -= (0.5 * step_size) * g;
  }
  return {std::move(z), std::move(r)};
}

HmcChain hmc_sample(const LogDensity& target, const HmcConfig& cfg,
                    const Vector& theta0) {
  if (cfg.burn_in < 0 || cfg.n_samples < 1 || cfg.leapfrog_steps < 0 ||
      cfg.step_size <= 0)
    throw ValidationError("invalid HMC configuration");
  if (theta0.size() != target.dim())
    throw DimensionMismatch("theta0 does not match the target dimension");
  if (!theta0.allFinite())
    throw ValidationError("theta0 must be finite");

  const Eigen::Index d = target.dim();
  const int total = cfg.burn_in + cfg.n_samples;
  auto grad_V = [&target](const Vector& z) -> Vector {
    return -target.grad_log_density(z);
  };

  HmcChain chain;
  chain.samples.resize(cfg.n_samples, d);
  chain.accept_flags.resize(static_cast<size_t>(total));
  chain.hamiltonian_errors.resize(total);

  Rng rng(cfg.seed);
  Vector z = theta0;
  double v_z = -target.log_density(z);

  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < total; ++i) {
    const Vector r = standard_normal(rng, d);
    const double h0 = v_z + 0.5 * r.squaredNorm();

    bool accept = false;
    double dh = 0.0;
    try {
      auto [z_new, r_new] =
          leapfrog(grad_V, z, r, cfg.leapfrog_steps, cfg.step_size);
      const double v_new = -target.log_density(z_new);
      const double h1 = v_new + 0.5 * r_new.squaredNorm();
      dh = h0 - h1;
      const double alpha = std::isfinite(h1) ? std::min(1.0, std::exp(dh)) : 0.0;
      if (rng.uniform() < alpha) {
        accept = true;
        z = std::move(z_new);
        v_z = v_new;
      }
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("proposal " + std::to_string(i) + ": " + e.what() +
                           " (step size too large?)");
    }

    chain.accept_flags[static_cast<size_t>(i)] = accept ? 1 : 0;
    chain.hamiltonian_errors(i) = dh;
    if (i >= cfg.burn_in) chain.samples.row(i - cfg.burn_in) = z.transpose();
  }
  const auto t1 = std::chrono::steady_clock::now();
  chain.seconds_total = std::chrono::duration<double>(t1 - t0).count();
  chain.seconds_per_proposal = chain.seconds_total / total;
  return chain;
}

double effective_sample_size(const Vector& series) {
  const Eigen::Index n = series.size();
  if (n < 2) return static_cast<double>(n);
  const double mean = series.mean();
  const Vector centered = series.array() - mean;
  const double gamma0 = centered.squaredNorm() / static_cast<double>(n);
  if (gamma0 <= 0) return 0.0;

  const Eigen::Index max_lag = std::min<Eigen::Index>(n - 1, 512);
  auto autocov = [&](Eigen::Index k) {
    return centered.head(n - k).dot(centered.tail(n - k)) /
           static_cast<double>(n);
  };

  // Initial monotone positive sequence over paired autocovariances.
  double tau = -1.0;  // accumulates 2 * sum(Gamma_m) - 1 measured in gamma0
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m < max_lag; ++m) {
    double pair = autocov(2 * m);
    if (2 * m + 1 <= max_lag) pair += autocov(2 * m + 1);
    if (pair <= 0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair / gamma0;
  }
  tau = std::max(tau, 1e-12);
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

HmcDiagnostics diagnostics(const HmcChain& chain) {
  if (chain.samples.rows() == 0) throw EmptyChain("diagnostics: empty chain");
  HmcDiagnostics d;
  d.acceptance_rate = chain.acceptance_rate();
  d.mean_abs_dh = chain.hamiltonian_errors.cwiseAbs().mean();
  d.max_abs_dh = chain.hamiltonian_errors.cwiseAbs().maxCoeff();
  d.seconds_per_proposal = chain.seconds_per_proposal;

  const Eigen::Index dim = chain.samples.cols();
  d.ess.resize(dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    d.ess(c) = effective_sample_size(chain.samples.col(c));
  Vector sorted = d.ess;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  d.ess_min = sorted(0);
  d.ess_median = sorted(sorted.size() / 2);
  d.degenerate = d.ess_min <= 1.0 + 1e-9;
  return d;
}

namespace {
constexpr char kMagic[8] = {'S', 'P', 'D', 'C', 'H', 'N', '0', '1'};
}

void save_chain(const HmcChain& chain, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  const std::uint64_t n = static_cast<std::uint64_t>(chain.samples.rows());
  const std::uint64_t dim = static_cast<std::uint64_t>(chain.samples.cols());
  const std::uint64_t props = chain.accept_flags.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  os.write(reinterpret_cast<const char*>(&props), sizeof(props));
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    const Vector row = chain.samples.row(i);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(sizeof(double) * dim));
  }
  os.write(reinterpret_cast<const char*>(chain.accept_flags.data()),
           static_cast<std::streamsize>(props));
  os.write(reinterpret_cast<const char*>(chain.hamiltonian_errors.data()),
           static_cast<std::streamsize>(sizeof(double) * props));
  os.write(reinterpret_cast<const char*>(&chain.seconds_total),
           sizeof(double));
  os.write(reinterpret_cast<const char*>(&chain.seconds_per_proposal),
           sizeof(double));
  if (!os) throw IoError("write failed: " + path.string());
}

HmcChain load_chain(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifacts("missing chain file: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a chain file: " + path.string());
  std::uint64_t n = 0, dim = 0, props = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  is.read(reinterpret_cast<char*>(&props), sizeof(props));
  HmcChain chain;
  chain.samples.resize(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(dim));
  std::vector<double> row(dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * dim));
    for (std::uint64_t j = 0; j < dim; ++j)
      chain.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          row[j];
  }
  chain.accept_flags.resize(props);
  is.read(reinterpret_cast<char*>(chain.accept_flags.data()),
          static_cast<std::streamsize>(props));
  chain.hamiltonian_errors.resize(static_cast<Eigen::Index>(props));
  is.read(reinterpret_cast<char*>(chain.hamiltonian_errors.data()),
          static_cast<std::streamsize>(sizeof(double) * props));
  is.read(reinterpret_cast<char*>(&chain.seconds_total), sizeof(double));
  is.read(reinterpret_cast<char*>(&chain.seconds_per_proposal), sizeof(double));
  if (!is) throw IoError("truncated chain file: " + path.string());
  return chain;
}

}  // namespace spde
