#ifndef GEOKRIG_RUN_CONFIG_HPP
#define GEOKRIG_RUN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "geokrig/experiments.hpp"

namespace geokrig::cli {

// Flat typed key=value configuration: file values first, flag overrides on
// top. Unknown keys are rejected; the effective merged config is echoed to a
// sidecar file so any run can be reproduced from it.
struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = available parallelism
  std::string out = ".";
  std::string kernel = "insgp";
  std::string metric_mode = "euclidean";

  double matern_nu = 1.5;
  double matern_sigma_f = 1.0;
  double matern_sigma_n = 0.2;
  double matern_ell = 10.0;
  std::string matern_prefactor = "normalized";

  std::size_t cls_k_local = 12;
  std::string cls_latent_input = "1d";
  double cls_min_eigenvalue = 1e-4;
  double cls_max_eigenvalue = 1e6;
  double cls_scale_floor = 0.33;
  double cls_scale_cap = 6.0;
  double cls_ratio_cap = 64.0;
  double cls_latent_noise = 1.0;
  bool cls_dump = false;

  std::size_t intrinsic_k_neighbors = 8;
  double intrinsic_deviation_threshold = 2.0;
  std::string intrinsic_filter_direction = "remove_above";
  std::size_t intrinsic_min_survivors = 3;

  bool cv_enabled = true;
  std::vector<std::size_t> cv_k_candidates = {6, 10};
  std::vector<double> cv_threshold_candidates = {1.0, 4.0};
  std::size_t cv_n_folds = 5;

  bool mcmc_enabled = true;
  std::size_t mcmc_n_samples = 240;
  std::size_t mcmc_n_burnin = 80;
  double mcmc_proposal_sd = 0.1;
  std::size_t mcmc_latent_every = 4;
  bool mcmc_sample_nu = false;
  bool mcmc_dump_chain = false;

  std::string synthetic_kind = "regional";
  std::size_t synthetic_n_train = 315;
  std::size_t synthetic_n_test = 946;
  double synthetic_noise_sd = 0.2;
  double synthetic_lat_min = 0.0, synthetic_lat_max = 60.0;
  double synthetic_lon_min = 0.0, synthetic_lon_max = 60.0;
  double synthetic_background_length_scale = 40.0;
  double synthetic_background_amplitude = 0.5;
  // Disk list "lat:lon:radius:length_scale:amplitude;..."
  std::string synthetic_regions = "45:15:10:3:3;15:15:10:10:1;30:42:12:25:2";

  std::vector<std::string> run_methods = {"stat-aniso", "nsgp", "insgp"};
  std::size_t run_n_runs = 25;
  bool run_force_equal_cls = false;

  std::size_t split_n_train = 0;

  std::string io_train;
  std::string io_test;
  std::string io_data;
  std::string io_predictions;
  std::string io_truth;

  int station_first_year = 1993;
  int station_last_year = 2012;

  // Assigns one key; throws ConfigError for unknown keys or unparseable
  // values.
  void set(const std::string& key, const std::string& value);

  // Module-level invariants, checked before any work starts.
  void validate() const;

  // Effective config, one key=value per line in schema order.
  std::string echo() const;

  static RunConfig from_file(const std::string& path);
  void apply_overrides(const std::vector<std::string>& key_value_pairs);

  struct KeyInfo {
    std::string key;
    std::string default_value;
    std::string description;
  };
  static const std::vector<KeyInfo>& schema();

  // Conversions into the module configuration types.
  geo::MetricMode mode() const;
  kernels::MaternParams matern_params() const;
  cls::IntrinsicConfig intrinsic_config() const;
  inference::CvGrid cv_grid() const;
  inference::McmcConfig mcmc_config() const;
  experiments::SyntheticSpec synthetic_spec() const;
  experiments::PipelineConfig pipeline_config() const;
  unsigned effective_threads() const;
};

}  // namespace geokrig::cli

#endif  // GEOKRIG_RUN_CONFIG_HPP
