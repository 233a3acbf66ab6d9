#include "geokrig/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "geokrig/io.hpp"
#include "geokrig/random.hpp"

namespace geokrig::inference {

double log_prior(const std::vector<ParamSpec>& specs, const Eigen::VectorXd& x) {
  double lp = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.flat_prior) continue;
    const double z = (x[static_cast<Eigen::Index>(i)] - s.prior_mu) / s.prior_sd;
    lp += -0.5 * z * z;
  }
  return lp;
}

McmcResult metropolis(const std::function<double(const Eigen::VectorXd&)>& log_target,
                      const std::vector<ParamSpec>& specs, const McmcConfig& cfg) {
  cfg.validate();
  if (specs.empty()) throw Error("metropolis requires at least one parameter");

  const Eigen::Index dim = static_cast<Eigen::Index>(specs.size());
  Eigen::VectorXd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& s = specs[static_cast<std::size_t>(i)];
    if (s.log_scale && !(s.init > 0.0)) {
      throw Error("log-scale parameter '" + s.name + "' requires a positive init");
    }
    x[i] = s.log_scale ? std::log(s.init) : s.init;
  }

  std::vector<std::vector<Eigen::Index>> blocks;
  {
    std::vector<Eigen::Index> b0, b1;
    for (Eigen::Index i = 0; i < dim; ++i) {
      (specs[static_cast<std::size_t>(i)].block == 0 ? b0 : b1).push_back(i);
    }
    if (!b0.empty()) blocks.push_back(b0);
    if (!b1.empty()) blocks.push_back(b1);
  }

  Rng rng(cfg.seed);
  double lt = log_target(x);
  if (!std::isfinite(lt)) {
    throw Error("MCMC initial state has non-finite target");
  }

  McmcResult res;
  res.names.reserve(specs.size());
  for (const auto& s : specs) res.names.push_back(s.name);
  res.chain.reserve(cfg.n_samples);

  std::size_t burn_acc = 0, samp_acc = 0;
  const std::size_t total = cfg.n_burnin + cfg.n_samples;
  for (std::size_t step = 0; step < total; ++step) {
    const std::size_t which =
        (blocks.size() > 1 && (step + 1) % cfg.latent_every == 0) ? 1 : 0;
    Eigen::VectorXd prop = x;
    for (Eigen::Index i : blocks[which]) {
      prop[i] += specs[static_cast<std::size_t>(i)].proposal_sd * rng.normal();
    }
    const double lt_prop = log_target(prop);
    const double u = rng.uniform();
    bool accept = false;
    if (std::isfinite(lt_prop)) {
      accept = std::log(std::max(u, 1e-300)) < lt_prop - lt;
    }
    if (accept) {
      x = prop;
      lt = lt_prop;
      if (step < cfg.n_burnin) {
        ++burn_acc;
      } else {
        ++samp_acc;
      }
    }
    if (step >= cfg.n_burnin) {
      Eigen::VectorXd natural(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        natural[i] = specs[static_cast<std::size_t>(i)].log_scale ? std::exp(x[i]) : x[i];
      }
      res.chain.push_back(std::move(natural));
    }
  }

  res.burnin_acceptance =
      cfg.n_burnin > 0 ? static_cast<double>(burn_acc) / static_cast<double>(cfg.n_burnin) : 1.0;
  res.acceptance_rate = static_cast<double>(samp_acc) / static_cast<double>(cfg.n_samples);
  if (cfg.n_burnin >= 100 && res.burnin_acceptance < 0.01) {
    throw AllProposalsRejected("burn-in acceptance " + std::to_string(res.burnin_acceptance) +
                               " below 1%; proposals are mis-scaled");
  }
  return res;
}

Eigen::VectorXd posterior_point_estimate(const McmcResult& result) {
  if (result.chain.empty()) throw EmptyChain("posterior point estimate of empty chain");
  const Eigen::Index dim = result.chain.front().size();
  Eigen::VectorXd out(dim);
  std::vector<double> column(result.chain.size());
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (std::size_t t = 0; t < result.chain.size(); ++t) column[t] = result.chain[t][j];
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out[j] = (n % 2 == 1) ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

namespace {

struct AnisoAngles {
  double axis1 = 1.0, axis2 = 1.0, theta = 0.0;
};

AnisoAngles decompose_sigma(const spd::SpdMatrix& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S.mat());
  AnisoAngles a;
  a.axis1 = es.eigenvalues()[0];
  a.axis2 = es.eigenvalues()[1];
  a.theta = std::atan2(es.eigenvectors()(1, 0), es.eigenvectors()(0, 0));
  return a;
}

spd::SpdMatrix compose_sigma(const AnisoAngles& a) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  const Eigen::Vector2d d(a.axis1, a.axis2);
  return spd::SpdMatrix(Eigen::Matrix2d(r * d.asDiagonal() * r.transpose()));
}

void append_latent_specs(std::vector<ParamSpec>& specs, const cls::LatentHp& hp,
                         double proposal_sd) {
  const auto add_set = [&](const std::string& prefix, const cls::LatentGpSet& s) {
    specs.push_back({prefix + ".length_scale", s.length_scale, true, proposal_sd, false,
                     std::log(std::max(s.length_scale, 1e-12)), 2.0, 1});
    specs.push_back({prefix + ".sigma_f", s.sigma_f, true, proposal_sd, false,
                     std::log(std::max(s.sigma_f, 1e-12)), 2.0, 1});
    specs.push_back({prefix + ".sigma_n", s.sigma_n, true, proposal_sd, false,
                     std::log(std::max(s.sigma_n, 1e-12)), 2.0, 1});
  };
  add_set("latent.u", hp.u);
  add_set("latent.v", hp.v);
  add_set("latent.lam1", hp.lam1);
  add_set("latent.lam2", hp.lam2);
}

}  // namespace

std::vector<ParamSpec> build_specs(const HyperState& init, const McmcTarget& target) {
  std::vector<ParamSpec> specs;
  const double psd = 0.1;
  // Weakly-informative priors centered on the data scales.
  const double ell_mu = std::log(std::max(0.2 * target.coord_span, 1e-6));
  const double sf_mu = std::log(std::max(target.y_sd, 1e-6));
  const double sn_mu = target.known_noise > 0.0
                           ? std::log(target.known_noise)
                           : std::log(std::max(0.3 * target.y_sd, 1e-6));
  const double sn_sd = target.known_noise > 0.0 ? 0.25 : 2.0;
  if (!target.fix_shape) {
    switch (target.kind) {
      case kernels::KernelKind::stat_iso:
        specs.push_back({"ell", init.kernel.ell(), true, psd, false, ell_mu, 2.0, 0});
        break;
      case kernels::KernelKind::stat_aniso: {
        const AnisoAngles a = decompose_sigma(init.kernel.sigma());
        specs.push_back({"axis1", a.axis1, true, psd, false, 2.0 * ell_mu, 4.0, 0});
        specs.push_back({"axis2", a.axis2, true, psd, false, 2.0 * ell_mu, 4.0, 0});
        specs.push_back({"theta", a.theta, false, 0.15, true, 0.0, 2.0, 0});
        break;
      }
      case kernels::KernelKind::non_stationary:
      case kernels::KernelKind::intrinsic_non_stationary:
        break;
    }
  }
  if (!target.fix_amplitude) {
    specs.push_back({"sigma_f", init.kernel.sigma_f, true, psd, false, sf_mu, 2.0, 0});
  }
  if (!target.fix_noise) {
    specs.push_back({"sigma_n", init.kernel.sigma_n, true, psd, false, sn_mu, sn_sd, 0});
  }
  if (target.sample_nu) {
    specs.push_back({"nu", init.kernel.nu, true, 0.05, false, 0.0, 1.0, 0});
  }
  if (init.latent && !target.cls_fixed) {
    append_latent_specs(specs, *init.latent, psd);
  }
  return specs;
}

HyperState unflatten(const Eigen::VectorXd& natural, const HyperState& proto,
                     const McmcTarget& target) {
  HyperState st = proto;
  Eigen::Index k = 0;
  if (!target.fix_shape) {
    switch (target.kind) {
      case kernels::KernelKind::stat_iso:
        st.kernel.cls = natural[k++];
        break;
      case kernels::KernelKind::stat_aniso: {
        AnisoAngles a;
        a.axis1 = natural[k++];
        a.axis2 = natural[k++];
        a.theta = natural[k++];
        st.kernel.cls = compose_sigma(a);
        break;
      }
      default:
        break;
    }
  }
  if (!target.fix_amplitude) st.kernel.sigma_f = natural[k++];
  if (!target.fix_noise) st.kernel.sigma_n = natural[k++];
  if (target.sample_nu) st.kernel.nu = natural[k++];
  if (proto.latent && !target.cls_fixed) {
    cls::LatentHp hp;
    const auto take_set = [&](cls::LatentGpSet& s) {
      s.length_scale = natural[k++];
      s.sigma_f = natural[k++];
      s.sigma_n = natural[k++];
    };
    take_set(hp.u);
    take_set(hp.v);
    take_set(hp.lam1);
    take_set(hp.lam2);
    st.latent = hp;
  }
  return st;
}

McmcResult mcmc_sample(const geo::SpatialDataset& train, const HyperState& init,
                       const McmcTarget& target, const McmcConfig& cfg) {
  const auto specs = build_specs(init, target);

  // Correlation cache: rebuilt only when a CLS-determining coordinate moves.
  struct Cache {
    bool valid = false;
    Eigen::VectorXd key;
    Eigen::MatrixXd C;
  };
  auto cache = std::make_shared<Cache>();

  const bool latent_driven =
      (target.kind == kernels::KernelKind::non_stationary ||
       target.kind == kernels::KernelKind::intrinsic_non_stationary) &&
      !target.cls_fixed;

  // Indices of coordinates that change the correlation matrix.
  std::vector<Eigen::Index> cls_coords;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& name = specs[i].name;
    const bool is_kernel_shape = name == "ell" || name == "axis1" || name == "axis2" ||
                                 name == "theta" || name == "nu";
    if (is_kernel_shape || specs[i].block == 1) {
      cls_coords.push_back(static_cast<Eigen::Index>(i));
    }
  }

  const auto log_target = [&, cache](const Eigen::VectorXd& x) -> double {
    Eigen::VectorXd natural(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      natural[i] = specs[static_cast<std::size_t>(i)].log_scale ? std::exp(x[i]) : x[i];
    }
    try {
      const HyperState st = unflatten(natural, init, target);

      Eigen::VectorXd key(static_cast<Eigen::Index>(cls_coords.size()));
      for (Eigen::Index i = 0; i < key.size(); ++i) {
        key[i] = natural[cls_coords[static_cast<std::size_t>(i)]];
      }
      if (!cache->valid || key.size() != cache->key.size() || key != cache->key) {
        cls::ClsAssignment assignment = target.fixed_cls;
        if (latent_driven) {
          if (!st.latent) throw Error("latent hyperparameters missing");
          cls::ClsSmoother smoother(train.locations, target.raw, *st.latent,
                                    target.latent_input, target.bounds, target.mode);
          assignment.per_point.clear();
          assignment.per_point.reserve(train.size());
          for (const auto& loc : train.locations) {
            assignment.per_point.push_back(smoother.sigma_at(loc));
          }
          if (target.kind == kernels::KernelKind::intrinsic_non_stationary) {
            if (!target.icfg) throw Error("intrinsic sampling requires an IntrinsicConfig");
            assignment.regional = cls::regional_means_all(assignment.per_point,
                                                          train.locations, *target.icfg,
                                                          target.mode);
          }
        }
        cache->C = kernels::correlation_matrix(train.locations, target.kind, assignment,
                                               st.kernel, target.mode);
        cache->key = key;
        cache->valid = true;
      }

      const auto g = kernels::gram_from_correlation(cache->C, st.kernel.sigma_f,
                                                    st.kernel.sigma_n);
      Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = train.values[i];
      }
      y.array() -= y.mean();
      const Eigen::VectorXd alpha = g.llt.solve(y);
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) logdet += std::log(g.llt.matrixLLT()(i, i));
      const double lml = -0.5 * y.dot(alpha) - logdet -
                         0.5 * static_cast<double>(y.size()) * std::log(2.0 * M_PI);
      return lml + log_prior(specs, x);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  return metropolis(log_target, specs, cfg);
}

void write_chain_csv(const std::string& path, const McmcResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t j = 0; j < result.names.size(); ++j) {
    out << (j ? "," : "") << result.names[j];
  }
  out << '\n';
  for (const auto& row : result.chain) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      out << (j ? "," : "") << io::format_double(row[j]);
    }
    out << '\n';
  }
}

CvReport cv_select(const geo::SpatialDataset& train,
                   const std::vector<spd::SpdMatrix>& per_point,
                   const kernels::MaternParams& params, const CvGrid& grid,
                   const cls::IntrinsicConfig& proto, geo::MetricMode mode,
                   std::uint64_t seed) {
  grid.validate();
  const std::size_t n = train.size();
  if (n < grid.n_folds) throw Error("CV requires n >= n_folds");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm);

  // Round-robin fold assignment over the shuffled order.
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % grid.n_folds;

  CvReport report;
  report.scores.assign(grid.k_candidates.size() * grid.threshold_candidates.size(),
                       std::numeric_limits<double>::infinity());

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_cell = 0;
  bool any = false;
  std::string last_failure;

  for (std::size_t ki = 0; ki < grid.k_candidates.size(); ++ki) {
    for (std::size_t ti = 0; ti < grid.threshold_candidates.size(); ++ti) {
      cls::IntrinsicConfig cfg = proto;
      cfg.k_neighbors = grid.k_candidates[ki];
      cfg.deviation_threshold = grid.threshold_candidates[ti];
      cfg.min_survivors = std::min(cfg.min_survivors, cfg.k_neighbors);

      double total = 0.0;
      bool failed = false;
      for (std::size_t f = 0; f < grid.n_folds && !failed; ++f) {
        geo::SpatialDataset sub;
        sub.noise_sd = train.noise_sd;
        std::vector<spd::SpdMatrix> sub_cls;
        std::vector<std::size_t> held;
        for (std::size_t i = 0; i < n; ++i) {
          if (fold_of[i] == f) {
            held.push_back(i);
          } else {
            sub.locations.push_back(train.locations[i]);
            sub.values.push_back(train.values[i]);
            sub_cls.push_back(per_point[i]);
          }
        }
        if (sub.locations.size() < cfg.k_neighbors || held.empty()) {
          failed = true;
          last_failure = "fold smaller than k_neighbors";
          break;
        }
        try {
          cls::ClsAssignment assignment;
          assignment.per_point = sub_cls;
          assignment.regional =
              cls::regional_means_all(sub_cls, sub.locations, cfg, mode);
          auto sub_locs = sub.locations;
          assignment.query_cls = [sub_cls, sub_locs, cfg, mode](const geo::Location& q) {
            return cls::regional_mean_at(q, sub_cls, sub_locs, cfg, mode);
          };
          const auto fitted = gp::fit(sub, kernels::KernelKind::intrinsic_non_stationary,
                                      assignment, params, mode);
          double nlpd_sum = 0.0;
          for (std::size_t i : held) {
            const auto pr = gp::predict(fitted, train.locations[i]);
            const double d = train.values[i] - pr.mean;
            nlpd_sum += 0.5 * std::log(2.0 * M_PI * pr.variance) +
                        d * d / (2.0 * pr.variance);
          }
          total += nlpd_sum / static_cast<double>(held.size());
        } catch (const Error& e) {
          failed = true;
          last_failure = e.what();
        }
      }

      const std::size_t cell = ki * grid.threshold_candidates.size() + ti;
      if (!failed) {
        const double score = total / static_cast<double>(grid.n_folds);
        report.scores[cell] = score;
        if (score < best) {
          best = score;
          best_cell = cell;
          any = true;
        }
      }
    }
  }

  if (!any) {
    throw Error("all CV cells failed; intrinsic configuration grid is infeasible (last: " +
                last_failure + ")");
  }
  cls::IntrinsicConfig selected = proto;
  selected.k_neighbors = grid.k_candidates[best_cell / grid.threshold_candidates.size()];
  selected.deviation_threshold =
      grid.threshold_candidates[best_cell % grid.threshold_candidates.size()];
  selected.min_survivors = std::min(selected.min_survivors, selected.k_neighbors);
  report.selected = selected;
  return report;
}

}  // namespace geokrig::inference
