#include "geokrig/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "geokrig/io.hpp"

namespace geokrig::cli {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

void write_sidecar(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out);
  std::ofstream out(out_path(cfg, command + ".effective.conf"));
  if (!out) throw IoError("cannot write config sidecar under " + cfg.out);
  out << "# effective configuration for `" << command << "`\n" << cfg.echo();
}

std::vector<io::ClsRow> cls_rows(const std::vector<geo::Location>& locs,
                                 const std::vector<spd::SpdMatrix>& mats) {
  std::vector<io::ClsRow> rows;
  rows.reserve(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    rows.push_back(io::ClsRow{locs[i], mats[i](0, 0), mats[i](0, 1), mats[i](1, 1)});
  }
  return rows;
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  write_sidecar(cfg, "generate");
  const auto spec = cfg.synthetic_spec();
  const auto data = experiments::generate(spec);
  io::save_rates_csv(out_path(cfg, "train.csv"), data.train);
  io::save_rates_csv(out_path(cfg, "test.csv"), data.test);
  if (!data.train_tags.empty()) {
    io::save_region_tags_csv(out_path(cfg, "train_region_tags.csv"), data.train.locations,
                             data.train_tags);
    io::save_region_tags_csv(out_path(cfg, "test_region_tags.csv"), data.test.locations,
                             data.test_tags);
  }
  std::printf("generate: seed=%llu n_train=%zu n_test=%zu noise_sd=%g -> %s\n",
              static_cast<unsigned long long>(cfg.seed), data.train.size(), data.test.size(),
              spec.noise_sd, cfg.out.c_str());
  return 0;
}

int cmd_fit_predict(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.io_train.empty()) throw ConfigError("fit-predict requires io.train");
  write_sidecar(cfg, "fit-predict");

  const auto train = io::load_rates_csv(cfg.io_train);
  std::vector<geo::Location> test_locs;
  if (cfg.io_test.empty()) {
    test_locs = train.locations;  // self-prediction mode
  } else {
    test_locs = io::load_rates_csv(cfg.io_test).locations;
  }

  const auto kind = kernels::kernel_from_name(cfg.kernel);
  auto pcfg = cfg.pipeline_config();
  if (cfg.mcmc_dump_chain) pcfg.chain_dump_path = out_path(cfg, "chain.csv");

  experiments::PipelineInfo info;
  const auto fitted = experiments::fit_pipeline(train, kind, pcfg, cfg.seed, &info);
  const auto pred = gp::predict_batch(fitted, test_locs, pcfg.predict_block);

  std::vector<io::PredictionRow> rows(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    rows[i] = io::PredictionRow{test_locs[i], pred[i].mean, std::sqrt(pred[i].variance)};
  }
  io::save_predictions_csv(out_path(cfg, "predictions.csv"), rows);

  if (cfg.cls_dump && !info.raw.empty()) {
    std::vector<spd::SpdMatrix> raw_m, smooth_m;
    for (const auto& e : info.raw) raw_m.push_back(cls::sigma_from_eigenparams(e));
    for (const auto& e : info.smoothed) smooth_m.push_back(cls::sigma_from_eigenparams(e));
    io::save_cls_csv(out_path(cfg, "cls_raw.csv"), cls_rows(train.locations, raw_m));
    io::save_cls_csv(out_path(cfg, "cls_smoothed.csv"), cls_rows(train.locations, smooth_m));
    if (!info.regional.empty()) {
      io::save_cls_csv(out_path(cfg, "cls_regional.csv"),
                       cls_rows(train.locations, info.regional));
    }
  }

  std::printf("fit-predict: kernel=%s n_train=%zu n_test=%zu jitter=%g", cfg.kernel.c_str(),
              train.size(), test_locs.size(), info.jitter);
  if (info.mcmc_acceptance >= 0.0) std::printf(" mcmc_acceptance=%.3f", info.mcmc_acceptance);
  if (kind == kernels::KernelKind::intrinsic_non_stationary) {
    std::printf(" K=%zu threshold=%g", info.selected_icfg.k_neighbors,
                info.selected_icfg.deviation_threshold);
  }
  std::printf(" -> %s\n", out_path(cfg, "predictions.csv").c_str());
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.io_predictions.empty() || cfg.io_truth.empty()) {
    throw ConfigError("evaluate requires io.predictions and io.truth");
  }
  write_sidecar(cfg, "evaluate");

  const auto pred_rows = io::load_predictions_csv(cfg.io_predictions);
  const auto truth = io::load_rates_csv(cfg.io_truth);
  if (pred_rows.size() != truth.size()) {
    throw LocationMismatch("prediction and truth files differ in size (" +
                           std::to_string(pred_rows.size()) + " vs " +
                           std::to_string(truth.size()) + ")");
  }

  std::map<std::pair<double, double>, std::size_t> index;
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    index[{pred_rows[i].location.lat(), pred_rows[i].location.lon()}] = i;
  }

  std::vector<double> y_true(truth.size()), y_pred(truth.size());
  std::vector<gp::PredictiveResult> predictive(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto it = index.find({truth.locations[i].lat(), truth.locations[i].lon()});
    if (it == index.end()) {
      throw LocationMismatch("no prediction for location (" +
                             io::format_double(truth.locations[i].lat()) + ", " +
                             io::format_double(truth.locations[i].lon()) + ")");
    }
    const auto& p = pred_rows[it->second];
    y_true[i] = truth.values[i];
    y_pred[i] = p.mean;
    predictive[i] = gp::PredictiveResult{p.mean, p.sd * p.sd};
  }

  const double s = experiments::smse(y_true, y_pred);
  const double n = experiments::nlpd(y_true, predictive);
  std::ofstream out(out_path(cfg, "metrics.csv"));
  if (!out) throw IoError("cannot write metrics.csv under " + cfg.out);
  out << "smse,nlpd\n" << io::format_double(s) << ',' << io::format_double(n) << '\n';
  std::printf("evaluate: n=%zu smse=%.6f nlpd=%.6f\n", y_true.size(), s, n);
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  cfg.validate();
  write_sidecar(cfg, "compare");

  experiments::DataSource source = cfg.synthetic_spec();
  if (!cfg.io_data.empty()) {
    if (cfg.split_n_train == 0) {
      throw ConfigError("compare on io.data requires split.n_train > 0");
    }
    source = experiments::SplitSource{io::load_rates_csv(cfg.io_data), cfg.split_n_train};
  }

  std::vector<kernels::KernelKind> methods;
  for (const auto& m : cfg.run_methods) methods.push_back(kernels::kernel_from_name(m));

  const auto report = experiments::run_comparison(source, methods, cfg.run_n_runs, cfg.seed,
                                                  cfg.pipeline_config(),
                                                  cfg.effective_threads());

  experiments::save_report_csv(out_path(cfg, "report_runs.csv"), report);
  experiments::save_region_report_csv(out_path(cfg, "report_regions.csv"), report);
  const std::string table = report.table();
  {
    std::ofstream out(out_path(cfg, "report_table.txt"));
    if (!out) throw IoError("cannot write report_table.txt under " + cfg.out);
    out << table;
  }
  std::fputs(table.c_str(), stdout);
  for (const auto& f : report.failures) {
    std::fprintf(stderr, "run %zu method %s failed: %s\n", f.run, f.method.c_str(),
                 f.message.c_str());
  }
  return report.failures.empty() ? 0 : 20;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e)) return 3;
  if (dynamic_cast<const DuplicateLocation*>(&e)) return 4;
  if (dynamic_cast<const DegenerateSeries*>(&e)) return 5;
  if (dynamic_cast<const BadSplit*>(&e)) return 6;
  if (dynamic_cast<const NumericalFailure*>(&e)) return 7;
  if (dynamic_cast<const NonConvergence*>(&e)) return 8;
  if (dynamic_cast<const InsufficientSamples*>(&e)) return 9;
  if (dynamic_cast<const InsufficientNeighbors*>(&e)) return 10;
  if (dynamic_cast<const DegenerateRotation*>(&e)) return 11;
  if (dynamic_cast<const NotPositiveDefinite*>(&e)) return 12;
  if (dynamic_cast<const ZeroVariance*>(&e)) return 13;
  if (dynamic_cast<const OverlappingRegions*>(&e)) return 14;
  if (dynamic_cast<const EmptyChain*>(&e)) return 15;
  if (dynamic_cast<const AllProposalsRejected*>(&e)) return 16;
  if (dynamic_cast<const LocationMismatch*>(&e)) return 17;
  if (dynamic_cast<const IoError*>(&e)) return 18;
  if (dynamic_cast<const Error*>(&e)) return 19;
  return 1;
}

std::string exit_code_table() {
  return "exit codes:\n"
         "  0  success\n"
         "  1  unexpected error\n"
         "  2  configuration/usage error\n"
         "  3  parse error\n"
         "  4  duplicate location\n"
         "  5  degenerate station series\n"
         "  6  bad train/test split\n"
         "  7  numerical failure\n"
         "  8  iteration did not converge\n"
         "  9  insufficient samples\n"
         " 10  insufficient neighbors\n"
         " 11  degenerate rotation parameters\n"
         " 12  matrix not positive definite\n"
         " 13  zero variance in metric\n"
         " 14  overlapping synthetic regions\n"
         " 15  empty chain\n"
         " 16  all MCMC proposals rejected\n"
         " 17  prediction/truth location mismatch\n"
         " 18  I/O error\n"
         " 19  other library error\n"
         " 20  one or more comparison runs failed\n";
}

}  // namespace geokrig::cli
