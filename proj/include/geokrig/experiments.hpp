#ifndef GEOKRIG_EXPERIMENTS_HPP
#define GEOKRIG_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "geokrig/cls_field.hpp"
#include "geokrig/geo.hpp"
#include "geokrig/gp.hpp"
#include "geokrig/inference.hpp"
#include "geokrig/kernels.hpp"

namespace geokrig::experiments {

// Disk region with its own stationary correlation structure.
struct Region {
  geo::Location center;
  double radius = 10.0;
  double length_scale = 5.0;
  double amplitude = 1.0;
};

struct SyntheticSpec {
  enum class Kind { smooth2d, regional };
  Kind kind = Kind::regional;
  std::size_t n_train = 315;
  std::size_t n_test = 946;
  double noise_sd = 0.2;
  std::uint64_t seed = 1;
  // regional layout; values outside every disk come from the background field
  std::vector<Region> region_layout;
  double background_length_scale = 40.0;
  double background_amplitude = 0.5;
  double lat_min = 0.0, lat_max = 60.0;
  double lon_min = 0.0, lon_max = 60.0;
};

// Three-disk layout over a 60x60 degree patch with strongly different length
// scales; the default regional benchmark.
SyntheticSpec default_regional_spec();

struct SyntheticData {
  geo::SpatialDataset train;
  geo::SpatialDataset test;
  std::vector<int> train_tags;  // 0 = background, 1..N = region index
  std::vector<int> test_tags;
};

// Smoothly non-stationary closed form used by the smooth2d generator.
double smooth2d_truth(double x, double y);

SyntheticData generate_smooth2d(const SyntheticSpec& spec);
SyntheticData generate_regional(const SyntheticSpec& spec);
SyntheticData generate(const SyntheticSpec& spec);

// Standardized mean squared error: mean((y - y*)^2) / sample variance of y.
double smse(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// Negative mean Gaussian log predictive density.
double nlpd(const std::vector<double>& y_true, const std::vector<gp::PredictiveResult>& pred);

// End-to-end model construction for one kernel kind (CLS initialization,
// latent smoothing, CV, MCMC, fit).
struct PipelineConfig {
  kernels::MaternParams params;
  geo::MetricMode mode = geo::MetricMode::euclidean;
  std::size_t k_local = 12;
  double init_scale_floor = 0.33;  // of the median neighbor distance
  double init_scale_cap = 6.0;
  double init_ratio_cap = 64.0;
  double latent_noise = 1.0;  // latent GP noise sd as a multiple of channel sd
  cls::LatentInput latent_input = cls::LatentInput::one_d;
  cls::ClsBounds bounds;
  cls::IntrinsicConfig icfg;
  inference::CvGrid cv;  // empty candidate lists skip CV
  inference::McmcConfig mcmc;
  bool mcmc_enabled = true;
  bool sample_nu = false;
  bool force_equal_cls = false;  // pin every CLS matrix to params.cls
  std::size_t predict_block = 256;
  std::string chain_dump_path;  // when nonempty, the MCMC chain CSV goes here
};

struct PipelineInfo {
  cls::IntrinsicConfig selected_icfg;
  double mcmc_acceptance = -1.0;
  double jitter = 0.0;
  inference::HyperState final_state;
  std::vector<cls::EigenParams> raw;
  std::vector<cls::EigenParams> smoothed;
  std::vector<spd::SpdMatrix> regional;
};

gp::FittedGp fit_pipeline(const geo::SpatialDataset& train, kernels::KernelKind kind,
                          const PipelineConfig& cfg, std::uint64_t seed,
                          PipelineInfo* info = nullptr);

// Comparison protocol inputs: a synthetic generator, a dataset re-split per
// run, or a fixed train/test pair.
struct SplitSource {
  geo::SpatialDataset data;
  std::size_t n_train = 0;
};
struct PresplitSource {
  geo::SpatialDataset train;
  geo::SpatialDataset test;
  std::vector<int> test_tags;
};
using DataSource = std::variant<SyntheticSpec, SplitSource, PresplitSource>;

struct RunRow {
  std::size_t run = 0;
  std::string method;
  double smse = 0.0;
  double nlpd = 0.0;
};
struct RegionRow {
  std::size_t run = 0;
  std::string method;
  int region = 0;
  double smse = 0.0;
  double nlpd = 0.0;
};
struct Aggregate {
  std::string method;
  int region = -1;  // -1 = full field
  double smse_mean = 0.0, smse_sd = 0.0;
  double nlpd_mean = 0.0, nlpd_sd = 0.0;
  std::size_t n_runs = 0;
};
struct Failure {
  std::size_t run = 0;
  std::string method;
  std::string message;
};

struct MetricsReport {
  std::vector<RunRow> per_run;        // rows for fully successful runs only
  std::vector<RegionRow> per_region;  // same runs, restricted to tagged regions
  std::vector<Failure> failures;
  std::vector<std::string> methods;

  std::vector<Aggregate> aggregates() const;
  std::string table() const;
};

// The repeated-runs comparison: fresh seeded data per run, full pipeline per
// method, sMSE/nLPD per run plus regional sub-reports where tags exist. Runs
// with any method failure are dropped from per_run and recorded in failures.
MetricsReport run_comparison(const DataSource& source,
                             const std::vector<kernels::KernelKind>& methods,
                             std::size_t n_runs, std::uint64_t root_seed,
                             const PipelineConfig& cfg, unsigned threads = 1);

void save_report_csv(const std::string& path, const MetricsReport& report);
void save_region_report_csv(const std::string& path, const MetricsReport& report);

}  // namespace geokrig::experiments

#endif  // GEOKRIG_EXPERIMENTS_HPP
