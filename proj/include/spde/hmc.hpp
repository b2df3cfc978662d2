#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "spde/posterior.hpp"

namespace spde {

struct HmcConfig {
  int burn_in = 1000;        // discarded proposals
  int n_samples = 4000;      // retained samples
  int leapfrog_steps = 100;  // M
  double step_size = 1e-3;   // delta
  std::uint64_t seed = 0;
};

struct HmcChain {
  Matrix samples;                          // n_samples x d
  std::vector<std::uint8_t> accept_flags;  // one per proposal
  Vector hamiltonian_errors;               // H(z,r) - H(z',r') per proposal
  double seconds_total = 0.0;
  double seconds_per_proposal = 0.0;

  double acceptance_rate() const;
};

/// Leapfrog trajectory for H(z, r) = V(z) + |r|^2 / 2: M half-kick / drift /
/// half-kick triplets. M = 0 returns the inputs unchanged. Throws
/// NonFiniteState as soon as a coordinate leaves the finite range.
std::pair<Vector, Vector> leapfrog(
    const std::function<Vector(const Vector&)>& grad_potential, Vector z,
    Vector r, int steps, double step_size);

/// Samples the target with standard-normal momenta and the Metropolis
/// correction alpha = min(1, exp(H - H')). Rejected proposals repeat the
/// current state. Fully deterministic given (target, config, start).
HmcChain hmc_sample(const LogDensity& target, const HmcConfig& cfg,
                    const Vector& theta0);

struct HmcDiagnostics {
  double acceptance_rate = 0.0;
  double mean_abs_dh = 0.0;
  double max_abs_dh = 0.0;
  Vector ess;             // per coordinate
  double ess_min = 0.0;
  double ess_median = 0.0;
  double seconds_per_proposal = 0.0;
  bool degenerate = false;  // flagged when the chain never moves
};

/// Acceptance, energy-error, and effective-sample-size summary. ESS uses the
/// initial-monotone-sequence estimate of the autocorrelation time.
HmcDiagnostics diagnostics(const HmcChain& chain);

/// Effective sample size of one scalar series (exposed for testing).
double effective_sample_size(const Vector& series);

void save_chain(const HmcChain& chain, const std::filesystem::path& path);
HmcChain load_chain(const std::filesystem::path& path);

}  // namespace spde
