#ifndef GEOKRIG_INFERENCE_HPP
#define GEOKRIG_INFERENCE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geokrig/cls_field.hpp"
#include "geokrig/geo.hpp"
#include "geokrig/gp.hpp"
#include "geokrig/kernels.hpp"

namespace geokrig::inference {

// One walk coordinate. log_scale parameters are proposed in log space with a
// normal prior on the log (i.e. a log-normal prior on the natural scale);
// identity-scale parameters can carry a flat prior (orientation angle).
struct ParamSpec {
  std::string name;
  double init = 1.0;
  bool log_scale = true;
  double proposal_sd = 0.1;
  bool flat_prior = false;
  double prior_mu = 0.0;
  double prior_sd = 2.0;
  int block = 0;  // 0 = kernel block, 1 = latent block
};

struct McmcConfig {
  std::size_t n_samples = 2000;
  std::size_t n_burnin = 500;
  std::uint64_t seed = 1;
  double default_proposal_sd = 0.1;
  std::size_t latent_every = 4;  // propose the latent block every k-th step

  void validate() const {
    if (n_samples == 0) throw Error("n_samples must be positive");
    if (default_proposal_sd <= 0.0) throw Error("proposal sd must be positive");
    if (latent_every == 0) throw Error("latent_every must be positive");
  }
};

struct McmcResult {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> chain;  // natural-scale values, post burn-in
  double acceptance_rate = 0.0;        // over recorded samples
  double burnin_acceptance = 0.0;
};

// Block random-walk Metropolis over the transformed coordinates. The target
// receives transformed coordinates and must include any prior terms; use
// log_prior() for the standard ones. Deterministic for a fixed seed.
McmcResult metropolis(const std::function<double(const Eigen::VectorXd&)>& log_target,
                      const std::vector<ParamSpec>& specs, const McmcConfig& cfg);

// Sum of the per-parameter prior log-densities over transformed coordinates.
double log_prior(const std::vector<ParamSpec>& specs, const Eigen::VectorXd& x);

// Per-parameter posterior median of a chain.
Eigen::VectorXd posterior_point_estimate(const McmcResult& result);

// Kernel + latent hyperparameters as one sampling state.
struct HyperState {
  kernels::MaternParams kernel;
  std::optional<cls::LatentHp> latent;
};

// What the sampler needs to rebuild the model for a proposed state.
struct McmcTarget {
  kernels::KernelKind kind = kernels::KernelKind::stat_iso;
  geo::MetricMode mode = geo::MetricMode::euclidean;
  // Fixed CLS assignment: used for the stationary kinds, and for the
  // non-stationary kinds when cls_fixed is set (the latent block is absent).
  cls::ClsAssignment fixed_cls;
  bool cls_fixed = false;
  // Exclude the stationary shape parameters (ell / axes / angle) from the
  // walk, sampling amplitude and noise only.
  bool fix_shape = false;
  // Keep sigma_n at its initial value (measurement noise known a priori).
  bool fix_noise = false;
  // Keep sigma_f at its initial value (moment-matched amplitude).
  bool fix_amplitude = false;
  // Scale context for the weakly-informative priors.
  double y_sd = 1.0;         // sd of the training values
  double coord_span = 60.0;  // extent of the coordinate patch, degrees
  double known_noise = 0.0;  // > 0 when the measurement noise is known
  // Latent-driven CLS (non-stationary kinds): raw eigen-parameters to be
  // re-smoothed per latent proposal.
  std::vector<cls::EigenParams> raw;
  cls::LatentInput latent_input = cls::LatentInput::one_d;
  cls::ClsBounds bounds;
  std::optional<cls::IntrinsicConfig> icfg;  // intrinsic kind only
  bool sample_nu = false;
};

std::vector<ParamSpec> build_specs(const HyperState& init, const McmcTarget& target);
HyperState unflatten(const Eigen::VectorXd& natural, const HyperState& proto,
                     const McmcTarget& target);

// Random-walk Metropolis over the kernel (and latent) hyperparameters with
// the GP log marginal likelihood plus priors as target.
McmcResult mcmc_sample(const geo::SpatialDataset& train, const HyperState& init,
                       const McmcTarget& target, const McmcConfig& cfg);

// Chain dump: one row per sample, one column per parameter.
void write_chain_csv(const std::string& path, const McmcResult& result);

struct CvGrid {
  std::vector<std::size_t> k_candidates;
  std::vector<double> threshold_candidates;
  std::size_t n_folds = 5;

  void validate() const {
    if (k_candidates.empty() || threshold_candidates.empty()) {
      throw Error("CV grid requires nonempty candidate lists");
    }
    if (n_folds < 2) throw Error("CV requires at least 2 folds");
  }
};

struct CvReport {
  cls::IntrinsicConfig selected;
  // Mean held-out nLPD per (k, threshold) cell, k-major.
  std::vector<double> scores;
};

// 5-fold (seeded) cross-validation over (K, deviation threshold) for the
// intrinsic kernel, scored by held-out nLPD. Failed cells score +inf; ties
// break toward smaller K then smaller threshold.
CvReport cv_select(const geo::SpatialDataset& train,
                   const std::vector<spd::SpdMatrix>& per_point,
                   const kernels::MaternParams& params, const CvGrid& grid,
                   const cls::IntrinsicConfig& proto, geo::MetricMode mode,
                   std::uint64_t seed);

}  // namespace geokrig::inference

#endif  // GEOKRIG_INFERENCE_HPP
