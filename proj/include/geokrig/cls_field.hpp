#ifndef GEOKRIG_CLS_FIELD_HPP
#define GEOKRIG_CLS_FIELD_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "geokrig/cls_assignment.hpp"
#include "geokrig/geo.hpp"
#include "geokrig/kernels.hpp"
#include "geokrig/spd.hpp"

namespace geokrig::cls {

// Eigen-parameterization of a CLS matrix: rotation from (u, v), eigenvalues
// log(lambda). The lambdas are carried in log form (log_lam = the positive
// eigenvalue of Sigma) so that large length scales never overflow; lambda > 1
// maps to log_lam > 0.
struct EigenParams {
  double u = 1.0;
  double v = 0.0;
  double log_lam1 = 1.0;  // > 0
  double log_lam2 = 1.0;  // > 0

  static EigenParams from_lambda(double u, double v, double lam1, double lam2);
  double lam1() const { return std::exp(log_lam1); }
  double lam2() const { return std::exp(log_lam2); }
};

// Bounds applied to the eigenvalues of every CLS matrix the estimators emit.
struct ClsBounds {
  double min_eigenvalue = 1e-4;
  double max_eigenvalue = 1e6;
};

// Sigma = Gamma^T D Gamma with Gamma the rotation built from (u, v) and
// D = diag(log lam1, log lam2).
spd::SpdMatrix sigma_from_eigenparams(const EigenParams& e);

// Inverse of sigma_from_eigenparams, eigenvalues clamped into bounds.
EigenParams eigenparams_from_sigma(const spd::SpdMatrix& S, const ClsBounds& bounds = {});

// Per-point anisotropy initialization: local maximum-likelihood fit of a
// stationary anisotropic Matern over each point's k_local nearest neighbors
// (grid search over axis scales and orientation, refined multiplicatively).
// Scales are confined to what the neighborhood can identify: between
// scale_floor and scale_cap times the median neighbor distance, with the
// axis-eigenvalue ratio capped.
struct InitClsConfig {
  std::size_t k_local = 12;
  double nu = 1.5;
  ClsBounds bounds;
  double scale_floor = 0.33;
  double scale_cap = 6.0;
  double ratio_cap = 64.0;
};

std::vector<EigenParams> init_cls(const geo::SpatialDataset& train, std::size_t k_local,
                                  geo::MetricMode mode, const InitClsConfig& cfg = {});

// Hyperparameters of one latent smoothing GP.
struct LatentGpSet {
  double length_scale = 15.0;
  double sigma_f = 1.0;
  double sigma_n = 0.3;
};

// Four independent latent GPs, one per eigen-parameter.
struct LatentHp {
  LatentGpSet u, v, lam1, lam2;
};

// 1d: u and lam1 smoothed over latitude, v and lam2 over longitude.
// 2d: every parameter smoothed over both coordinates.
enum class LatentInput { one_d, two_d };

// Latent-GP smoother for the eigen-parameter fields. The lambda channels are
// smoothed as log(log_lam) so positivity survives any posterior mean.
class ClsSmoother {
 public:
  ClsSmoother(const std::vector<geo::Location>& locations,
              const std::vector<EigenParams>& raw, const LatentHp& hp, LatentInput input,
              const ClsBounds& bounds = {}, geo::MetricMode mode = geo::MetricMode::euclidean);

  EigenParams params_at(const geo::Location& loc) const;
  spd::SpdMatrix sigma_at(const geo::Location& loc) const;
  std::vector<EigenParams> smooth_all() const;

 private:
  struct Channel {
    std::vector<double> x1, x2;  // 1 or 2 active coordinates per point
    Eigen::VectorXd alpha;
    double mean = 0.0;
    double nu = 1.5;
    LatentGpSet hp;
    bool two_d = false;
    bool wrap_x1 = false;  // x1 is a longitude

    double predict(double c1, double c2) const;
  };

  Channel fit_channel(const std::vector<double>& values, const LatentGpSet& hp,
                      bool use_lat, bool use_lon) const;

  std::vector<geo::Location> locs_;
  std::vector<EigenParams> raw_;
  ClsBounds bounds_;
  double nu_ = 1.5;
  Channel ch_u_, ch_v_, ch_l1_, ch_l2_;
};

// Replaces each parameter by its latent-GP posterior mean at its own
// location; lambda channels re-clamped positive.
std::vector<EigenParams> smooth_cls(const std::vector<EigenParams>& raw,
                                    const std::vector<geo::Location>& locations,
                                    const LatentHp& hp, LatentInput input = LatentInput::one_d,
                                    const ClsBounds& bounds = {},
                                    geo::MetricMode mode = geo::MetricMode::euclidean);

// Regional CLS: Karcher mean of the K-nearest neighborhood (center included),
// deviation-filtered per the config, recomputed over the survivors. The
// center element is always retained.
spd::SpdMatrix regional_mean_cls(std::size_t i, const std::vector<spd::SpdMatrix>& cls,
                                 const std::vector<geo::Location>& locations,
                                 const IntrinsicConfig& cfg, geo::MetricMode mode);

// Same neighborhood construction for an arbitrary query location (test
// points); the nearest training element anchors the filter.
spd::SpdMatrix regional_mean_at(const geo::Location& query,
                                const std::vector<spd::SpdMatrix>& cls,
                                const std::vector<geo::Location>& locations,
                                const IntrinsicConfig& cfg, geo::MetricMode mode);

std::vector<spd::SpdMatrix> regional_means_all(const std::vector<spd::SpdMatrix>& cls,
                                               const std::vector<geo::Location>& locations,
                                               const IntrinsicConfig& cfg,
                                               geo::MetricMode mode);

// Pairwise intrinsic CLS from regional means (midpoint; psi(i,i) = mean_i).
spd::SpdMatrix psi(std::size_t i, std::size_t j, const std::vector<spd::SpdMatrix>& regional);

}  // namespace geokrig::cls

#endif  // GEOKRIG_CLS_FIELD_HPP
