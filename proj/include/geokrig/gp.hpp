#ifndef GEOKRIG_GP_HPP
#define GEOKRIG_GP_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <memory>

#include "geokrig/cls_assignment.hpp"
#include "geokrig/geo.hpp"
#include "geokrig/kernels.hpp"

namespace geokrig::gp {

struct PredictiveResult {
  double mean = 0.0;
  double variance = 0.0;  // includes sigma_n^2
};

struct FitOptions {
  // Center values by the training mean before fitting (added back at
  // prediction). The GP prior is zero-mean.
  bool center_mean = true;
  kernels::JitterPolicy jitter;
};

struct FittedGp {
  geo::SpatialDataset train;
  kernels::KernelKind kind = kernels::KernelKind::stat_iso;
  cls::ClsAssignment cls;
  kernels::MaternParams params;
  geo::MetricMode mode = geo::MetricMode::euclidean;
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd alpha;  // (K + sigma_n^2 I + jitter)^{-1} (y - y_mean)
  double y_mean = 0.0;
  double jitter = 0.0;
  // Number of predictions whose variance was clamped by more than 1e-8.
  std::shared_ptr<std::size_t> variance_clamps = std::make_shared<std::size_t>(0);
};

FittedGp fit(const geo::SpatialDataset& train, kernels::KernelKind kind,
             const cls::ClsAssignment& cls, const kernels::MaternParams& params,
             geo::MetricMode mode = geo::MetricMode::euclidean, const FitOptions& opt = {});

PredictiveResult predict(const FittedGp& g, const geo::Location& x);

// Blocked batch prediction; peak extra memory O(n * block).
std::vector<PredictiveResult> predict_batch(const FittedGp& g,
                                            const std::vector<geo::Location>& xs,
                                            std::size_t block = 256);

double log_marginal_likelihood(const FittedGp& g);

}  // namespace geokrig::gp

#endif  // GEOKRIG_GP_HPP
