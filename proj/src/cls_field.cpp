#include "geokrig/cls_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geokrig::cls {

EigenParams EigenParams::from_lambda(double u, double v, double lam1, double lam2) {
  if (!(lam1 > 1.0) || !(lam2 > 1.0)) {
    throw Error("lambda parameters must exceed 1");
  }
  return EigenParams{u, v, std::log(lam1), std::log(lam2)};
}

spd::SpdMatrix sigma_from_eigenparams(const EigenParams& e) {
  const double l = std::hypot(e.u, e.v);
  if (l < 1e-12) {
    throw DegenerateRotation("(u, v) too close to the origin to define a rotation");
  }
  if (!(e.log_lam1 > 0.0) || !(e.log_lam2 > 0.0)) {
    throw Error("eigen-parameters require lambda > 1 (positive log)");
  }
  const double c = e.u / l;
  const double s = e.v / l;
  Eigen::Matrix2d gamma;
  gamma << c, -s, s, c;
  const Eigen::Vector2d d(e.log_lam1, e.log_lam2);
  return spd::SpdMatrix(Eigen::Matrix2d(gamma.transpose() * d.asDiagonal() * gamma));
}

EigenParams eigenparams_from_sigma(const spd::SpdMatrix& S, const ClsBounds& bounds) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(S.mat());
  if (solver.info() != Eigen::Success) throw NumericalFailure("CLS eigen-decomposition failed");
  const auto clamp = [&](double a) {
    return std::min(bounds.max_eigenvalue, std::max(bounds.min_eigenvalue, a));
  };
  // Eigenvector for log_lam1 is (u, -v)/l_uv. Near-isotropic matrices have
  // numerically arbitrary eigenvectors; give them the neutral orientation so
  // the latent fields are not fed noise. The sign is canonicalized (u >= 0)
  // because (u, v) and (-u, -v) encode the same rotation and would cancel
  // under smoothing.
  const Eigen::Vector2d w = solver.eigenvectors().col(0);
  EigenParams e;
  e.u = w[0];
  e.v = -w[1];
  e.log_lam1 = clamp(solver.eigenvalues()[0]);
  e.log_lam2 = clamp(solver.eigenvalues()[1]);
  const double lo = solver.eigenvalues()[0];
  const double hi = solver.eigenvalues()[1];
  if (hi <= lo * 1.0000001) {
    e.u = 1.0;
    e.v = 0.0;
  } else if (e.u < 0.0 || (e.u == 0.0 && e.v < 0.0)) {
    e.u = -e.u;
    e.v = -e.v;
  }
  if (std::hypot(e.u, e.v) < 1e-12) {
    e.u = 1.0;
    e.v = 0.0;
  }
  return e;
}

namespace {

Eigen::Matrix2d rot_scale(double s1, double s2, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  const Eigen::Vector2d d(s1, s2);
  return r * d.asDiagonal() * r.transpose();
}

// Profiled Gaussian log marginal likelihood of centered values under an
// anisotropic Matern with known noise sd: the correlation matrix is
// eigendecomposed once and the signal variance maximized along its
// eigenbasis by golden-section search.
struct LocalShape {
  Eigen::VectorXd lam;  // correlation eigenvalues
  Eigen::VectorXd yt;   // eigenbasis-rotated values
  bool ok = false;
};

LocalShape local_shape(const std::vector<geo::Displacement>& pair_d, const Eigen::VectorXd& y,
                       double nu, const Eigen::Matrix2d& S) {
  LocalShape shape;
  const Eigen::Index m = y.size();
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (!(det > 0.0)) return shape;
  Eigen::MatrixXd C(m, m);
  std::size_t t = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    C(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j, ++t) {
      const geo::Displacement& d = pair_d[t];
      const double q = (S(1, 1) * d[0] * d[0] - 2.0 * S(0, 1) * d[0] * d[1] +
                        S(0, 0) * d[1] * d[1]) /
                       det;
      const double v = kernels::matern_correlation(nu, q < 0.0 ? 0.0 : q);
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) return shape;
  shape.lam = es.eigenvalues().cwiseMax(0.0);
  shape.yt = es.eigenvectors().transpose() * y;
  shape.ok = true;
  return shape;
}

struct ProfiledFit {
  double lml = -std::numeric_limits<double>::infinity();
  double sigma_f2 = 0.0;
};

ProfiledFit profile_amplitude(const LocalShape& shape, double sigma_n, double var_ref) {
  ProfiledFit fit;
  if (!shape.ok) return fit;
  const Eigen::Index m = shape.yt.size();
  const double sn2 = sigma_n * sigma_n;
  const auto lml_of = [&](double z) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double k = z * shape.lam[i] + sn2;
      acc += shape.yt[i] * shape.yt[i] / k + std::log(k);
    }
    return -0.5 * acc - 0.5 * static_cast<double>(m) * std::log(2.0 * M_PI);
  };
  // Golden-section on log signal variance.
  const double phi = 0.6180339887498949;
  double lo = std::log(std::max(1e-4 * var_ref, 1e-12));
  double hi = std::log(std::max(100.0 * var_ref, 1e-10));
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = lml_of(std::exp(x1)), f2 = lml_of(std::exp(x2));
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = lml_of(std::exp(x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = lml_of(std::exp(x1));
    }
  }
  const double z = std::exp(0.5 * (lo + hi));
  fit.lml = lml_of(z);
  fit.sigma_f2 = z;
  return fit;
}

}  // namespace

std::vector<EigenParams> init_cls(const geo::SpatialDataset& train, std::size_t k_local,
                                  geo::MetricMode mode, const InitClsConfig& cfg) {
  const std::size_t n = train.size();
  if (k_local < 4) throw InsufficientNeighbors("k_local must be at least 4");
  if (k_local > n) {
    throw InsufficientNeighbors("k_local=" + std::to_string(k_local) + " exceeds n=" +
                                std::to_string(n));
  }

  std::vector<EigenParams> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = geo::nearest_neighbors(train.locations, i, k_local, mode);
    const std::size_t m = idx.size();

    Eigen::VectorXd y(m);
    for (std::size_t a = 0; a < m; ++a) y[a] = train.values[idx[a]];
    const double mean = y.mean();
    y.array() -= mean;
    const double var_f = y.squaredNorm() / static_cast<double>(m - 1);

    std::vector<double> dist;
    dist.reserve(m - 1);
    for (std::size_t a = 1; a < m; ++a) {
      dist.push_back(geo::neighbor_distance(train.locations[i], train.locations[idx[a]], mode));
    }
    std::sort(dist.begin(), dist.end());
    const double med = std::max(dist[dist.size() / 2], 1e-9);

    if (!(var_f > 0.0)) {
      // Constant neighborhood: fall back to an isotropic CLS at the local spacing.
      out[i] = eigenparams_from_sigma(
          spd::SpdMatrix::diag(std::max(med * med, cfg.bounds.min_eigenvalue),
                               std::max(med * med, cfg.bounds.min_eigenvalue)),
          cfg.bounds);
      continue;
    }

    std::vector<geo::Displacement> pair_d;
    pair_d.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        pair_d.push_back(
            geo::displacement(train.locations[idx[a]], train.locations[idx[b]], mode));
      }
    }

    std::vector<double> noise_sds;
    if (train.noise_sd > 0.0) {
      noise_sds = {train.noise_sd};
    } else {
      const double sd = std::sqrt(var_f);
      noise_sds = {0.05 * sd, 0.2 * sd, 0.5 * sd};
    }

    // Identifiable window: a k-point neighborhood cannot resolve length
    // scales much below its spacing or beyond its extent, and letting them
    // drift there produces wildly conditioned CLS fields downstream.
    const double s_lo = std::pow(cfg.scale_floor * med, 2);
    const double s_hi = std::pow(cfg.scale_cap * med, 2);
    const double ratio_cap = cfg.ratio_cap;

    std::vector<double> factors;
    for (double f = 0.5; f * f * med * med <= s_hi * 1.0001; f *= 2.0) factors.push_back(f);

    struct Best {
      double lml = -std::numeric_limits<double>::infinity();
      double s1 = 0.0, s2 = 0.0, th = 0.0, sn = 0.0;
    };
    Best iso, aniso;
    iso.s1 = iso.s2 = med * med;
    iso.sn = noise_sds[0];
    aniso = iso;

    const auto score = [&](double s1, double s2, double th, Best& slot) {
      const auto shape = local_shape(pair_d, y, cfg.nu, rot_scale(s1, s2, th));
      for (double sn : noise_sds) {
        const double l = profile_amplitude(shape, sn, var_f).lml;
        if (l > slot.lml) slot = Best{l, s1, s2, th, sn};
      }
    };

    std::vector<Best> iso_cands, aniso_cands;
    for (std::size_t a = 0; a < factors.size(); ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        const double s1 = std::pow(factors[a] * med, 2);
        const double s2 = std::pow(factors[b] * med, 2);
        const int n_angles = (a == b) ? 1 : 8;  // isotropic candidates need no angle
        for (int t = 0; t < n_angles; ++t) {
          Best cand;
          score(s1, s2, M_PI * t / 8.0, cand);
          ((a == b) ? iso_cands : aniso_cands).push_back(cand);
        }
      }
    }
    // Long scales are often likelihood-flat; prefer the smoothest model that
    // stays within one nat of the maximum.
    const auto occam = [](const std::vector<Best>& cands) {
      double top = -std::numeric_limits<double>::infinity();
      for (const auto& c : cands) top = std::max(top, c.lml);
      Best pick;
      for (const auto& c : cands) {
        if (c.lml >= top - 1.0 && c.s1 + c.s2 > pick.s1 + pick.s2) pick = c;
      }
      return pick;
    };
    iso = occam(iso_cands);
    aniso = occam(aniso_cands);

    // Multiplicative refinement of the axis scales, then of the angle.
    const auto refine = [&](Best& best, bool isotropic) {
      for (double step : {1.5, 1.2}) {
        const double cur_s1 = best.s1, cur_s2 = best.s2;
        for (double f1 : {1.0 / step, 1.0, step}) {
          for (double f2 : {1.0 / step, 1.0, step}) {
            if (isotropic && f1 != f2) continue;
            score(std::clamp(cur_s1 * f1, s_lo, s_hi), std::clamp(cur_s2 * f2, s_lo, s_hi),
                  best.th, best);
          }
        }
      }
      if (isotropic) return;
      for (double dth : {-M_PI / 16.0, M_PI / 16.0, -M_PI / 32.0, M_PI / 32.0}) {
        score(best.s1, best.s2, best.th + dth, best);
      }
    };
    refine(iso, true);
    refine(aniso, false);

    // Anisotropy costs two extra parameters; require a real likelihood gain
    // before accepting it, or noise gets soaked into a short axis.
    const bool is_iso = !(aniso.lml > iso.lml + 2.0);
    const Best& best = is_iso ? iso : aniso;
    const double best_s1 = best.s1, best_s2 = best.s2, best_th = best.th;
    if (is_iso) {
      const auto clamp_iso = [&](double s) {
        return std::min(cfg.bounds.max_eigenvalue, std::max(cfg.bounds.min_eigenvalue, s));
      };
      EigenParams e;
      e.u = 1.0;
      e.v = 0.0;
      e.log_lam1 = clamp_iso(0.5 * (best_s1 + best_s2));
      e.log_lam2 = e.log_lam1;
      out[i] = e;
      continue;
    }

    double hi = std::max(best_s1, best_s2);
    double lo = std::min(best_s1, best_s2);
    hi = std::min(hi, ratio_cap * lo);
    const auto clamp_eig = [&](double s) {
      return std::min(cfg.bounds.max_eigenvalue, std::max(cfg.bounds.min_eigenvalue, s));
    };
    const double s1f = clamp_eig(best_s1 >= best_s2 ? hi : lo);
    const double s2f = clamp_eig(best_s1 >= best_s2 ? lo : hi);
    out[i] = eigenparams_from_sigma(spd::SpdMatrix(rot_scale(s1f, s2f, best_th)), cfg.bounds);
  }
  return out;
}

double ClsSmoother::Channel::predict(double c1, double c2) const {
  const std::size_t n = x1.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r2;
    if (two_d) {
      const double d1 = c1 - x1[i];
      const double d2 = geo::wrap_lon(c2 - x2[i]);
      r2 = d1 * d1 + d2 * d2;
    } else {
      double d1 = c1 - x1[i];
      if (wrap_x1) d1 = geo::wrap_lon(d1);
      r2 = d1 * d1;
    }
    const double corr =
        kernels::matern_correlation(nu, r2 / (hp.length_scale * hp.length_scale));
    acc += hp.sigma_f * hp.sigma_f * corr * alpha[static_cast<Eigen::Index>(i)];
  }
  return acc + mean;
}

ClsSmoother::Channel ClsSmoother::fit_channel(const std::vector<double>& values,
                                              const LatentGpSet& hp, bool use_lat,
                                              bool use_lon) const {
  Channel ch;
  ch.hp = hp;
  ch.nu = nu_;
  ch.two_d = use_lat && use_lon;
  ch.wrap_x1 = !use_lat && !ch.two_d;
  const std::size_t n = values.size();
  ch.x1.resize(n);
  ch.x2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ch.two_d) {
      ch.x1[i] = locs_[i].lat();
      ch.x2[i] = locs_[i].lon();
    } else {
      ch.x1[i] = use_lat ? locs_[i].lat() : locs_[i].lon();
      ch.x2[i] = 0.0;
    }
  }

  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = values[i];
  ch.mean = y.mean();
  y.array() -= ch.mean;

  const bool lon_channel = ch.wrap_x1;
  Eigen::MatrixXd K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    K(i, i) = hp.sigma_f * hp.sigma_f + hp.sigma_n * hp.sigma_n;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2;
      if (ch.two_d) {
        const double d1 = ch.x1[i] - ch.x1[j];
        const double d2 = geo::wrap_lon(ch.x2[i] - ch.x2[j]);
        r2 = d1 * d1 + d2 * d2;
      } else {
        double d1 = ch.x1[i] - ch.x1[j];
        if (lon_channel) d1 = geo::wrap_lon(d1);
        r2 = d1 * d1;
      }
      const double v = hp.sigma_f * hp.sigma_f *
                       kernels::matern_correlation(nu_, r2 / (hp.length_scale * hp.length_scale));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  K.diagonal().array() += 1e-10 * hp.sigma_f * hp.sigma_f;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("latent smoothing gram not factorizable");
  }
  ch.alpha = llt.solve(y);
  return ch;
}

ClsSmoother::ClsSmoother(const std::vector<geo::Location>& locations,
                         const std::vector<EigenParams>& raw, const LatentHp& hp,
                         LatentInput input, const ClsBounds& bounds, geo::MetricMode)
    : locs_(locations), raw_(raw), bounds_(bounds) {
  if (locations.size() != raw.size() || raw.empty()) {
    throw Error("smoother requires one eigen-parameter set per location");
  }
  const std::size_t n = raw.size();
  std::vector<double> vu(n), vv(n), vl1(n), vl2(n);
  for (std::size_t i = 0; i < n; ++i) {
    vu[i] = raw[i].u;
    vv[i] = raw[i].v;
    vl1[i] = std::log(raw[i].log_lam1);
    vl2[i] = std::log(raw[i].log_lam2);
  }
  const bool two_d = input == LatentInput::two_d;
  ch_u_ = fit_channel(vu, hp.u, true, two_d);
  ch_l1_ = fit_channel(vl1, hp.lam1, true, two_d);
  ch_v_ = fit_channel(vv, hp.v, two_d, true);
  ch_l2_ = fit_channel(vl2, hp.lam2, two_d, true);
}

EigenParams ClsSmoother::params_at(const geo::Location& loc) const {
  const auto clamp = [&](double a) {
    return std::min(bounds_.max_eigenvalue, std::max(bounds_.min_eigenvalue, a));
  };
  EigenParams e;
  e.u = ch_u_.predict(loc.lat(), loc.lon());
  e.v = ch_v_.predict(ch_v_.two_d ? loc.lat() : loc.lon(), loc.lon());
  e.log_lam1 = clamp(std::exp(ch_l1_.predict(loc.lat(), loc.lon())));
  e.log_lam2 = clamp(std::exp(ch_l2_.predict(ch_l2_.two_d ? loc.lat() : loc.lon(), loc.lon())));
  if (std::hypot(e.u, e.v) < 1e-12) {
    // Rotation undefined at the origin; fall back to axis-aligned.
    e.u = 1.0;
    e.v = 0.0;
  }
  return e;
}

spd::SpdMatrix ClsSmoother::sigma_at(const geo::Location& loc) const {
  return sigma_from_eigenparams(params_at(loc));
}

std::vector<EigenParams> ClsSmoother::smooth_all() const {
  std::vector<EigenParams> out;
  out.reserve(locs_.size());
  for (const auto& loc : locs_) out.push_back(params_at(loc));
  return out;
}

std::vector<EigenParams> smooth_cls(const std::vector<EigenParams>& raw,
                                    const std::vector<geo::Location>& locations,
                                    const LatentHp& hp, LatentInput input,
                                    const ClsBounds& bounds, geo::MetricMode mode) {
  return ClsSmoother(locations, raw, hp, input, bounds, mode).smooth_all();
}

namespace {

spd::SpdMatrix regional_impl(const std::vector<std::size_t>& idx, std::size_t anchor_pos,
                             const std::vector<spd::SpdMatrix>& cls,
                             const IntrinsicConfig& cfg) {
  std::vector<spd::SpdMatrix> nb;
  nb.reserve(idx.size());
  for (std::size_t j : idx) nb.push_back(cls.at(j));

  // Looser tolerance than the library default: whitened eigensolves of
  // strongly anisotropic neighborhoods carry noise floors around eps * kappa,
  // far below anything the length-scale estimates can resolve.
  auto first = spd::karcher_mean(nb, 1e-5, 2000);
  if (!first.converged) {
    throw NonConvergence("Karcher mean of neighborhood did not converge (gradient " +
                         std::to_string(first.gradient_norm) + " after " +
                         std::to_string(first.iterations) + " iterations)");
  }
  const auto devs = spd::per_element_deviation(nb, first.mean);

  std::vector<char> keep(nb.size(), 0);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const bool ok = cfg.filter_direction == FilterDirection::remove_above
                        ? devs[k] <= cfg.deviation_threshold
                        : devs[k] >= cfg.deviation_threshold;
    if (ok) {
      keep[k] = 1;
      ++kept;
    }
  }
  if (!keep[anchor_pos]) {
    keep[anchor_pos] = 1;
    ++kept;
  }
  if (kept < cfg.min_survivors) {
    std::vector<std::size_t> order(nb.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cfg.filter_direction == FilterDirection::remove_above ? devs[a] < devs[b]
                                                                   : devs[a] > devs[b];
    });
    for (std::size_t k : order) {
      if (kept >= cfg.min_survivors) break;
      if (!keep[k]) {
        keep[k] = 1;
        ++kept;
      }
    }
  }

  if (kept == nb.size()) return first.mean;

  std::vector<spd::SpdMatrix> survivors;
  survivors.reserve(kept);
  for (std::size_t k = 0; k < nb.size(); ++k) {
    if (keep[k]) survivors.push_back(nb[k]);
  }
  auto second = spd::karcher_mean(survivors, 1e-5, 2000);
  if (!second.converged) {
    std::string dump;
    for (const auto& s : survivors) {
      dump += " {" + std::to_string(s(0,0)) + "," + std::to_string(s(0,1)) + "," +
              std::to_string(s(1,1)) + "}";
    }
    throw NonConvergence("Karcher mean of filtered neighborhood did not converge (gradient " +
                         std::to_string(second.gradient_norm) + " after " +
                         std::to_string(second.iterations) + " iterations):" + dump);
  }
  return second.mean;
}

}  // namespace

spd::SpdMatrix regional_mean_cls(std::size_t i, const std::vector<spd::SpdMatrix>& cls,
                                 const std::vector<geo::Location>& locations,
                                 const IntrinsicConfig& cfg, geo::MetricMode mode) {
  cfg.validate(locations.size());
  const auto idx = geo::nearest_neighbors(locations, i, cfg.k_neighbors, mode);
  const auto anchor = std::find(idx.begin(), idx.end(), i);
  return regional_impl(idx, static_cast<std::size_t>(anchor - idx.begin()), cls, cfg);
}

spd::SpdMatrix regional_mean_at(const geo::Location& query,
                                const std::vector<spd::SpdMatrix>& cls,
                                const std::vector<geo::Location>& locations,
                                const IntrinsicConfig& cfg, geo::MetricMode mode) {
  cfg.validate(locations.size());
  const auto idx = geo::nearest_neighbors(locations, query, cfg.k_neighbors, mode);
  return regional_impl(idx, 0, cls, cfg);
}

std::vector<spd::SpdMatrix> regional_means_all(const std::vector<spd::SpdMatrix>& cls,
                                               const std::vector<geo::Location>& locations,
                                               const IntrinsicConfig& cfg,
                                               geo::MetricMode mode) {
  std::vector<spd::SpdMatrix> out;
  out.reserve(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) {
    out.push_back(regional_mean_cls(i, cls, locations, cfg, mode));
  }
  return out;
}

spd::SpdMatrix psi(std::size_t i, std::size_t j, const std::vector<spd::SpdMatrix>& regional) {
  if (i == j) return regional.at(i);
  return spd::geodesic_midpoint(regional.at(i), regional.at(j));
}

}  // namespace geokrig::cls
