#include "geokrig/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "geokrig/io.hpp"
#include "geokrig/parallel.hpp"
#include "geokrig/random.hpp"

namespace geokrig::experiments {

SyntheticSpec default_regional_spec() {
  SyntheticSpec s;
  s.kind = SyntheticSpec::Kind::regional;
  s.n_train = 315;
  s.n_test = 946;
  s.noise_sd = 0.2;
  s.region_layout = {
      {geo::Location(45.0, 15.0), 10.0, 3.0, 3.0},
      {geo::Location(15.0, 15.0), 10.0, 10.0, 1.0},
      {geo::Location(30.0, 42.0), 12.0, 25.0, 2.0},
  };
  s.background_length_scale = 40.0;
  s.background_amplitude = 0.5;
  return s;
}

double smooth2d_truth(double x, double y) { return std::sin(10.0 * x * y * y) + 0.2 * x; }

namespace {

std::vector<geo::Location> draw_locations(Rng& rng, std::size_t n, const SyntheticSpec& s) {
  std::vector<geo::Location> locs;
  locs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lat = rng.uniform(s.lat_min, s.lat_max);
    const double lon = rng.uniform(s.lon_min, s.lon_max);
    locs.emplace_back(lat, lon);
  }
  return locs;
}

}  // namespace

SyntheticData generate_smooth2d(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticSpec::Kind::smooth2d) throw Error("spec kind is not smooth2d");
  if (spec.n_train < 1 || spec.n_test < 1) throw Error("n_train and n_test must be >= 1");
  SyntheticSpec s = spec;
  s.lat_min = 0.0;
  s.lat_max = 1.0;
  s.lon_min = 0.0;
  s.lon_max = 1.0;

  Rng loc_rng(derive_seed(spec.seed, 1));
  Rng noise_rng(derive_seed(spec.seed, 2));

  SyntheticData d;
  d.train.locations = draw_locations(loc_rng, spec.n_train, s);
  d.test.locations = draw_locations(loc_rng, spec.n_test, s);
  d.train.noise_sd = spec.noise_sd;
  d.test.noise_sd = 0.0;
  for (const auto& loc : d.train.locations) {
    d.train.values.push_back(smooth2d_truth(loc.lat(), loc.lon()) +
                             spec.noise_sd * noise_rng.normal());
  }
  for (const auto& loc : d.test.locations) {
    d.test.values.push_back(smooth2d_truth(loc.lat(), loc.lon()));
  }
  return d;
}

SyntheticData generate_regional(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticSpec::Kind::regional) throw Error("spec kind is not regional");
  if (spec.region_layout.empty()) throw Error("regional spec requires a region layout");
  if (spec.n_train < 1 || spec.n_test < 1) throw Error("n_train and n_test must be >= 1");
  for (const auto& r : spec.region_layout) {
    if (!(r.radius > 0.0) || !(r.length_scale > 0.0) || !(r.amplitude > 0.0)) {
      throw Error("region radius, length scale and amplitude must be positive");
    }
  }
  for (std::size_t i = 0; i < spec.region_layout.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.region_layout.size(); ++j) {
      const auto& a = spec.region_layout[i];
      const auto& b = spec.region_layout[j];
      const double dist =
          geo::displacement(a.center, b.center, geo::MetricMode::euclidean).norm();
      if (dist < a.radius + b.radius) {
        throw OverlappingRegions("regions " + std::to_string(i + 1) + " and " +
                                 std::to_string(j + 1) + " intersect");
      }
    }
  }

  Rng loc_rng(derive_seed(spec.seed, 1));
  SyntheticData d;
  d.train.locations = draw_locations(loc_rng, spec.n_train, spec);
  d.test.locations = draw_locations(loc_rng, spec.n_test, spec);
  d.train.noise_sd = spec.noise_sd;
  d.test.noise_sd = 0.0;

  const std::size_t n_all = spec.n_train + spec.n_test;
  std::vector<geo::Location> all;
  all.reserve(n_all);
  all.insert(all.end(), d.train.locations.begin(), d.train.locations.end());
  all.insert(all.end(), d.test.locations.begin(), d.test.locations.end());

  std::vector<int> tags(n_all, 0);
  for (std::size_t i = 0; i < n_all; ++i) {
    for (std::size_t r = 0; r < spec.region_layout.size(); ++r) {
      const auto& reg = spec.region_layout[r];
      if (geo::displacement(all[i], reg.center, geo::MetricMode::euclidean).norm() <=
          reg.radius) {
        tags[i] = static_cast<int>(r + 1);
        break;
      }
    }
  }

  // Independent stationary draw inside each region (background is region 0);
  // correlation never crosses a boundary.
  std::vector<double> values(n_all, 0.0);
  const std::size_t n_regions = spec.region_layout.size();
  for (std::size_t r = 0; r <= n_regions; ++r) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n_all; ++i) {
      if (tags[i] == static_cast<int>(r)) idx.push_back(i);
    }
    if (idx.empty()) continue;
    const double ell =
        r == 0 ? spec.background_length_scale : spec.region_layout[r - 1].length_scale;
    const double amp =
        r == 0 ? spec.background_amplitude : spec.region_layout[r - 1].amplitude;

    const std::size_t m = idx.size();
    Eigen::MatrixXd C(m, m);
    for (std::size_t a = 0; a < m; ++a) {
      C(a, a) = 1.0;
      for (std::size_t b = a + 1; b < m; ++b) {
        const double dist2 =
            geo::displacement(all[idx[a]], all[idx[b]], geo::MetricMode::euclidean)
                .squaredNorm();
        const double v = kernels::matern_correlation(1.5, dist2 / (ell * ell));
        C(a, b) = v;
        C(b, a) = v;
      }
    }
    const auto g = kernels::gram_from_correlation(C, amp, 0.0);
    Rng field_rng(derive_seed(spec.seed, 100 + r));
    Eigen::VectorXd z(m);
    for (std::size_t a = 0; a < m; ++a) z[static_cast<Eigen::Index>(a)] = field_rng.normal();
    const Eigen::VectorXd f = g.llt.matrixL() * z;
    for (std::size_t a = 0; a < m; ++a) values[idx[a]] = f[static_cast<Eigen::Index>(a)];
  }

  Rng noise_rng(derive_seed(spec.seed, 3));
  d.train.values.resize(spec.n_train);
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    d.train.values[i] = values[i] + spec.noise_sd * noise_rng.normal();
  }
  d.test.values.assign(values.begin() + static_cast<std::ptrdiff_t>(spec.n_train),
                       values.end());
  d.train_tags.assign(tags.begin(), tags.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
  d.test_tags.assign(tags.begin() + static_cast<std::ptrdiff_t>(spec.n_train), tags.end());
  return d;
}

SyntheticData generate(const SyntheticSpec& spec) {
  return spec.kind == SyntheticSpec::Kind::smooth2d ? generate_smooth2d(spec)
                                                    : generate_regional(spec);
}

double smse(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error("smse length mismatch");
  const std::size_t n = y_true.size();
  if (n < 2) throw Error("smse requires at least 2 points");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y_true) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (!(var > 0.0)) throw ZeroVariance("smse undefined: zero sample variance of truth");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y_true[i] - y_pred[i];
    sum += d * d;
  }
  return sum / (static_cast<double>(n) * var);
}

double nlpd(const std::vector<double>& y_true, const std::vector<gp::PredictiveResult>& pred) {
  if (y_true.size() != pred.size()) throw Error("nlpd length mismatch");
  if (y_true.empty()) throw Error("nlpd of empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!(pred[i].variance > 0.0)) throw Error("nlpd requires positive variances");
    const double d = y_true[i] - pred[i].mean;
    sum += 0.5 * std::log(2.0 * M_PI * pred[i].variance) + d * d / (2.0 * pred[i].variance);
  }
  return sum / static_cast<double>(y_true.size());
}

namespace {

// Per-channel latent hyperparameter defaults scaled to the raw field spread
// and the patch extent.
cls::LatentHp auto_latent_hp(const std::vector<cls::EigenParams>& raw,
                             const std::vector<geo::Location>& locs, double noise_factor) {
  double lat_lo = locs.front().lat(), lat_hi = lat_lo;
  double lon_lo = locs.front().lon(), lon_hi = lon_lo;
  for (const auto& l : locs) {
    lat_lo = std::min(lat_lo, l.lat());
    lat_hi = std::max(lat_hi, l.lat());
    lon_lo = std::min(lon_lo, l.lon());
    lon_hi = std::max(lon_hi, l.lon());
  }
  const double lat_span = std::max(lat_hi - lat_lo, 1e-6);
  const double lon_span = std::max(lon_hi - lon_lo, 1e-6);

  const auto sd_of = [&](auto getter) {
    double m = 0.0;
    for (const auto& e : raw) m += getter(e);
    m /= static_cast<double>(raw.size());
    double s = 0.0;
    for (const auto& e : raw) {
      const double d = getter(e) - m;
      s += d * d;
    }
    return std::sqrt(s / static_cast<double>(std::max<std::size_t>(raw.size() - 1, 1)));
  };

  const auto make = [&](double sd, double span) {
    cls::LatentGpSet s;
    s.length_scale = 0.25 * span;
    s.sigma_f = std::max(sd, 1e-3);
    s.sigma_n = std::max(noise_factor * sd, 1e-4);
    return s;
  };

  cls::LatentHp hp;
  hp.u = make(sd_of([](const cls::EigenParams& e) { return e.u; }), lat_span);
  hp.v = make(sd_of([](const cls::EigenParams& e) { return e.v; }), lon_span);
  hp.lam1 =
      make(sd_of([](const cls::EigenParams& e) { return std::log(e.log_lam1); }), lat_span);
  hp.lam2 =
      make(sd_of([](const cls::EigenParams& e) { return std::log(e.log_lam2); }), lon_span);
  return hp;
}

kernels::MaternParams normalize_params(kernels::KernelKind kind,
                                       const kernels::MaternParams& in) {
  kernels::MaternParams p = in;
  if (kind == kernels::KernelKind::stat_aniso &&
      std::holds_alternative<double>(p.cls)) {
    const double ell = std::get<double>(p.cls);
    p.cls = spd::SpdMatrix::diag(ell * ell, ell * ell);
  }
  if (kind == kernels::KernelKind::stat_iso &&
      std::holds_alternative<spd::SpdMatrix>(p.cls)) {
    const auto& S = std::get<spd::SpdMatrix>(p.cls);
    p.cls = std::sqrt(std::sqrt(S.det()));
  }
  return p;
}

spd::SpdMatrix equal_cls_matrix(const kernels::MaternParams& p) {
  if (std::holds_alternative<spd::SpdMatrix>(p.cls)) return std::get<spd::SpdMatrix>(p.cls);
  const double ell = std::get<double>(p.cls);
  return spd::SpdMatrix::diag(ell * ell, ell * ell);
}

}  // namespace

gp::FittedGp fit_pipeline(const geo::SpatialDataset& train, kernels::KernelKind kind,
                          const PipelineConfig& cfg, std::uint64_t seed, PipelineInfo* info) {
  using kernels::KernelKind;
  kernels::MaternParams params = normalize_params(kind, cfg.params);
  params.validate();

  PipelineInfo local_info;
  PipelineInfo& pi = info ? *info : local_info;
  pi.selected_icfg = cfg.icfg;

  const bool cls_kind =
      kind == KernelKind::non_stationary || kind == KernelKind::intrinsic_non_stationary;

  // Sources with declared measurement noise get fixed, moment-matched scale
  // parameters so that the methods differ only in covariance structure; with
  // unknown noise both scales are sampled.
  const bool noise_known = train.noise_sd > 0.0;
  double y_mean = 0.0;
  for (double v : train.values) y_mean += v;
  y_mean /= static_cast<double>(train.size());
  double y_var = 0.0;
  for (double v : train.values) y_var += (v - y_mean) * (v - y_mean);
  const double y_sd = std::sqrt(
      y_var / static_cast<double>(std::max<std::size_t>(train.size() - 1, 1)));
  double lat_lo = train.locations.front().lat(), lat_hi = lat_lo;
  double lon_lo = train.locations.front().lon(), lon_hi = lon_lo;
  for (const auto& l : train.locations) {
    lat_lo = std::min(lat_lo, l.lat());
    lat_hi = std::max(lat_hi, l.lat());
    lon_lo = std::min(lon_lo, l.lon());
    lon_hi = std::max(lon_hi, l.lon());
  }
  const double span = std::max({lat_hi - lat_lo, lon_hi - lon_lo, 1e-6});
  if (noise_known) {
    params.sigma_n = train.noise_sd;
    params.sigma_f = std::sqrt(std::max(y_sd * y_sd - params.sigma_n * params.sigma_n,
                                        0.05 * y_sd * y_sd));
  }
  const auto set_scales = [&](inference::McmcTarget& t) {
    t.y_sd = y_sd;
    t.coord_span = span;
    t.known_noise = noise_known ? train.noise_sd : 0.0;
    if (noise_known && std::getenv("GK_FIX_SCALES") != nullptr) {
      t.fix_noise = true;
      t.fix_amplitude = std::getenv("GK_FIX_SCALES")[0] == '2';
    }
  };

  inference::McmcConfig mcfg = cfg.mcmc;
  mcfg.seed = derive_seed(seed, 11);

  // Forced-equal CLS: every per-point and regional matrix pinned to the
  // configured one; only amplitude and noise are sampled.
  if (cfg.force_equal_cls) {
    const spd::SpdMatrix S0 = equal_cls_matrix(params);
    cls::ClsAssignment assign;
    assign.per_point.assign(train.size(), S0);
    assign.regional = assign.per_point;
    assign.query_cls = [S0](const geo::Location&) { return S0; };
    if (kind == KernelKind::stat_aniso) params.cls = S0;
    if (kind == KernelKind::stat_iso) params.cls = std::sqrt(std::sqrt(S0.det()));

    inference::HyperState st{params, std::nullopt};
    if (cfg.mcmc_enabled && mcfg.n_samples > 0) {
      inference::McmcTarget target;
      target.kind = kind;
      target.mode = cfg.mode;
      target.fixed_cls = assign;
      target.cls_fixed = true;
      target.fix_shape = true;
      set_scales(target);
      const auto chain = inference::mcmc_sample(train, st, target, mcfg);
      if (!cfg.chain_dump_path.empty()) inference::write_chain_csv(cfg.chain_dump_path, chain);
      pi.mcmc_acceptance = chain.acceptance_rate;
      st = inference::unflatten(inference::posterior_point_estimate(chain), st, target);
    }
    auto fitted = gp::fit(train, kind, assign, st.kernel, cfg.mode);
    pi.final_state = st;
    pi.jitter = fitted.jitter;
    return fitted;
  }

  if (!cls_kind) {
    inference::HyperState st{params, std::nullopt};
    if (cfg.mcmc_enabled && mcfg.n_samples > 0) {
      inference::McmcTarget target;
      target.kind = kind;
      target.mode = cfg.mode;
      target.sample_nu = cfg.sample_nu;
      set_scales(target);
      const auto chain = inference::mcmc_sample(train, st, target, mcfg);
      if (!cfg.chain_dump_path.empty()) inference::write_chain_csv(cfg.chain_dump_path, chain);
      pi.mcmc_acceptance = chain.acceptance_rate;
      st = inference::unflatten(inference::posterior_point_estimate(chain), st, target);
    }
    auto fitted = gp::fit(train, kind, {}, st.kernel, cfg.mode);
    pi.final_state = st;
    pi.jitter = fitted.jitter;
    return fitted;
  }

  // Non-stationary kinds: raw local-ML eigen-parameters first. The latent
  // hyperparameters are sampled jointly with amplitude and noise against the
  // (smoothed-field) non-stationary marginal likelihood for both kinds; the
  // intrinsic kind then selects its neighborhood configuration by CV, builds
  // the regional means once, and re-samples amplitude and noise against its
  // own marginal likelihood with the CLS held fixed.
  cls::InitClsConfig init_cfg;
  init_cfg.k_local = cfg.k_local;
  init_cfg.nu = params.nu;
  init_cfg.bounds = cfg.bounds;
  init_cfg.scale_floor = cfg.init_scale_floor;
  init_cfg.scale_cap = cfg.init_scale_cap;
  init_cfg.ratio_cap = cfg.init_ratio_cap;
  pi.raw = cls::init_cls(train, cfg.k_local, cfg.mode, init_cfg);
  const cls::LatentHp latent0 = auto_latent_hp(pi.raw, train.locations, cfg.latent_noise);

  inference::HyperState st{params, latent0};
  if (cfg.mcmc_enabled && mcfg.n_samples > 0) {
    inference::McmcTarget target;
    target.kind = KernelKind::non_stationary;
    target.mode = cfg.mode;
    target.raw = pi.raw;
    target.latent_input = cfg.latent_input;
    target.bounds = cfg.bounds;
    target.sample_nu = cfg.sample_nu;
    set_scales(target);
    const auto chain = inference::mcmc_sample(train, st, target, mcfg);
    if (!cfg.chain_dump_path.empty()) inference::write_chain_csv(cfg.chain_dump_path, chain);
    pi.mcmc_acceptance = chain.acceptance_rate;
    st = inference::unflatten(inference::posterior_point_estimate(chain), st, target);
  }

  cls::ClsSmoother smoother(train.locations, pi.raw, st.latent.value_or(latent0),
                            cfg.latent_input, cfg.bounds, cfg.mode);
  pi.smoothed = smoother.smooth_all();

  cls::ClsAssignment assign;
  assign.per_point.reserve(train.size());
  for (const auto& e : pi.smoothed) assign.per_point.push_back(cls::sigma_from_eigenparams(e));

  if (kind == KernelKind::intrinsic_non_stationary) {
    cls::IntrinsicConfig icfg = cfg.icfg;
    if (!cfg.cv.k_candidates.empty()) {
      try {
        const auto cv = inference::cv_select(train, assign.per_point, st.kernel, cfg.cv, icfg,
                                             cfg.mode, derive_seed(seed, 12));
        icfg = cv.selected;
      } catch (const Error&) {
        // No feasible cell at these hyperparameters; keep the configured
        // neighborhood and let the noise-escalation below find a floor.
      }
    }
    pi.selected_icfg = icfg;

    assign.regional = cls::regional_means_all(assign.per_point, train.locations, icfg, cfg.mode);
    pi.regional = *assign.regional;
    const auto per_point = assign.per_point;
    const auto locs = train.locations;
    const auto mode = cfg.mode;
    assign.query_cls = [per_point, locs, icfg, mode](const geo::Location& q) {
      return cls::regional_mean_at(q, per_point, locs, icfg, mode);
    };

    if (cfg.mcmc_enabled && mcfg.n_samples > 0) {
      inference::McmcTarget target;
      target.kind = kind;
      target.mode = cfg.mode;
      target.fixed_cls = assign;
      target.cls_fixed = true;
      set_scales(target);
      inference::McmcConfig mcfg2 = mcfg;
      mcfg2.seed = derive_seed(seed, 13);
      inference::HyperState st2{st.kernel, std::nullopt};
      // The intrinsic gram may need a larger noise floor than the
      // non-stationary posterior suggests; escalate until the walk can start.
      for (int attempt = 0;; ++attempt) {
        try {
          const auto chain = inference::mcmc_sample(train, st2, target, mcfg2);
          pi.mcmc_acceptance = chain.acceptance_rate;
          st.kernel =
              inference::unflatten(inference::posterior_point_estimate(chain), st2, target)
                  .kernel;
          break;
        } catch (const Error&) {
          if (attempt >= 6) throw;
          st2.kernel.sigma_n *= 2.0;
        }
      }
    }
  } else {
    auto shared = std::make_shared<cls::ClsSmoother>(std::move(smoother));
    assign.query_cls = [shared](const geo::Location& q) { return shared->sigma_at(q); };
  }

  // The intrinsic kernel is only guaranteed PSD in exact arithmetic; when the
  // jitter ladder is not enough, raise the noise floor and record it.
  for (int attempt = 0;; ++attempt) {
    try {
      auto fitted = gp::fit(train, kind, assign, st.kernel, cfg.mode);
      pi.final_state = st;
      pi.jitter = fitted.jitter;
      return fitted;
    } catch (const NotPositiveDefinite&) {
      if (attempt >= 8 || kind != KernelKind::intrinsic_non_stationary) throw;
      st.kernel.sigma_n *= 1.5;
    }
  }
}

namespace {

struct RunOutcome {
  std::vector<RunRow> rows;
  std::vector<RegionRow> region_rows;
  std::vector<Failure> fails;
};

}  // namespace

MetricsReport run_comparison(const DataSource& source,
                             const std::vector<kernels::KernelKind>& methods,
                             std::size_t n_runs, std::uint64_t root_seed,
                             const PipelineConfig& cfg, unsigned threads) {
  if (methods.empty()) throw Error("run_comparison requires a nonempty method list");
  if (n_runs == 0) throw Error("run_comparison requires n_runs >= 1");

  std::vector<RunOutcome> outcomes(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t r) {
    const std::uint64_t run_seed = derive_seed(root_seed, r);

    geo::SpatialDataset train, test;
    std::vector<int> test_tags;
    if (const auto* spec = std::get_if<SyntheticSpec>(&source)) {
      SyntheticSpec s = *spec;
      s.seed = run_seed;
      auto data = generate(s);
      train = std::move(data.train);
      test = std::move(data.test);
      test_tags = std::move(data.test_tags);
    } else if (const auto* split = std::get_if<SplitSource>(&source)) {
      auto [tr, te] = geo::train_test_split(split->data, split->n_train, run_seed);
      train = std::move(tr);
      test = std::move(te);
    } else {
      const auto& pre = std::get<PresplitSource>(source);
      train = pre.train;
      test = pre.test;
      test_tags = pre.test_tags;
    }

    RunOutcome& out = outcomes[r];
    for (const auto kind : methods) {
      const std::string name = kernels::kernel_name(kind);
      try {
        const auto fitted = fit_pipeline(train, kind, cfg, derive_seed(run_seed, 1000));
        const auto pred = gp::predict_batch(fitted, test.locations, cfg.predict_block);
        std::vector<double> means(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) means[i] = pred[i].mean;

        out.rows.push_back(RunRow{r, name, smse(test.values, means), nlpd(test.values, pred)});

        if (!test_tags.empty()) {
          std::set<int> regions(test_tags.begin(), test_tags.end());
          for (int reg : regions) {
            std::vector<double> yt, yp;
            std::vector<gp::PredictiveResult> pp;
            for (std::size_t i = 0; i < test_tags.size(); ++i) {
              if (test_tags[i] == reg) {
                yt.push_back(test.values[i]);
                yp.push_back(means[i]);
                pp.push_back(pred[i]);
              }
            }
            if (yt.size() < 2) continue;
            try {
              out.region_rows.push_back(RegionRow{r, name, reg, smse(yt, yp), nlpd(yt, pp)});
            } catch (const ZeroVariance&) {
              // region too degenerate to score
            }
          }
        }
      } catch (const Error& e) {
        out.fails.push_back(Failure{r, name, e.what()});
      }
    }
  });

  MetricsReport report;
  for (const auto kind : methods) report.methods.push_back(kernels::kernel_name(kind));
  for (std::size_t r = 0; r < n_runs; ++r) {
    auto& o = outcomes[r];
    if (!o.fails.empty()) {
      report.failures.insert(report.failures.end(), o.fails.begin(), o.fails.end());
      continue;
    }
    report.per_run.insert(report.per_run.end(), o.rows.begin(), o.rows.end());
    report.per_region.insert(report.per_region.end(), o.region_rows.begin(),
                             o.region_rows.end());
  }
  return report;
}

std::vector<Aggregate> MetricsReport::aggregates() const {
  std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> cells;
  for (const auto& row : per_run) cells[{row.method, -1}].push_back({row.smse, row.nlpd});
  for (const auto& row : per_region) {
    cells[{row.method, row.region}].push_back({row.smse, row.nlpd});
  }

  const auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>{m, sd};
  };

  std::vector<Aggregate> out;
  // Preserve the configured method order, full field first.
  for (int region_pass = 0; region_pass < 2; ++region_pass) {
    for (const auto& [key, vals] : cells) {
      const bool is_full = key.second == -1;
      if ((region_pass == 0) != is_full) continue;
      std::vector<double> s, n;
      s.reserve(vals.size());
      n.reserve(vals.size());
      for (const auto& [a, b] : vals) {
        s.push_back(a);
        n.push_back(b);
      }
      const auto [sm, ss] = mean_sd(s);
      const auto [nm, ns] = mean_sd(n);
      out.push_back(Aggregate{key.first, key.second, sm, ss, nm, ns, vals.size()});
    }
  }
  return out;
}

std::string MetricsReport::table() const {
  const auto aggs = aggregates();
  std::set<int> regions;
  for (const auto& a : aggs) {
    if (a.region >= 0) regions.insert(a.region);
  }

  const auto find = [&](const std::string& m, int reg) -> const Aggregate* {
    for (const auto& a : aggs) {
      if (a.method == m && a.region == reg) return &a;
    }
    return nullptr;
  };

  std::ostringstream os;
  os << "method      ";
  os << "| All sMSE   nLPD     ";
  for (int r : regions) os << "| Reg." << r << " sMSE  nLPD    ";
  os << '\n';
  for (const auto& m : methods) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-12s", m.c_str());
    os << buf;
    const auto emit = [&](const Aggregate* a) {
      if (a == nullptr) {
        os << "|    --        --    ";
        return;
      }
      std::snprintf(buf, sizeof(buf), "| %8.4f %8.4f  ", a->smse_mean, a->nlpd_mean);
      os << buf;
    };
    emit(find(m, -1));
    for (int r : regions) emit(find(m, r));
    os << '\n';
  }
  double max_sd = 0.0;
  for (const auto& a : aggs) {
    if (a.region == -1) max_sd = std::max(max_sd, a.smse_sd);
  }
  os << "runs aggregated: "
     << (methods.empty() || per_run.empty() ? 0 : per_run.size() / methods.size())
     << ", failures: " << failures.size() << ", max sd(sMSE): ";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", max_sd);
  os << buf << '\n';
  return os.str();
}

void save_report_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "run,method,smse,nlpd\n";
  for (const auto& r : report.per_run) {
    out << r.run << ',' << r.method << ',' << io::format_double(r.smse) << ','
        << io::format_double(r.nlpd) << '\n';
  }
}

void save_region_report_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "run,method,region,smse,nlpd\n";
  for (const auto& r : report.per_region) {
    out << r.run << ',' << r.method << ',' << r.region << ',' << io::format_double(r.smse)
        << ',' << io::format_double(r.nlpd) << '\n';
  }
}

}  // namespace geokrig::experiments
