#include "geokrig/kernels.hpp"

#include <cmath>

namespace geokrig::kernels {

void MaternParams::validate() const {
  if (!(nu > 0.0)) throw Error("nu must be positive");
  if (!(sigma_f > 0.0)) throw Error("sigma_f must be positive");
  if (sigma_n < 0.0) throw Error("sigma_n must be nonnegative");
  if (std::holds_alternative<double>(cls) && !(std::get<double>(cls) > 0.0)) {
    throw Error("isotropic length scale must be positive");
  }
}

double matern_correlation(double nu, double Q) {
  if (!(Q > 0.0)) return 1.0;
  const double z = std::sqrt(2.0 * nu * Q);
  if (z < 1e-12) return 1.0;
  if (z > 705.0) return 0.0;  // exp(-z) underflows
  if (nu == 0.5) return std::exp(-z);
  if (nu == 1.5) return (1.0 + z) * std::exp(-z);
  if (nu == 2.5) return (1.0 + z + z * z / 3.0) * std::exp(-z);
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
}

double matern_scalar(double nu, double sqrtQ, double sigma_f) {
  return sigma_f * sigma_f * matern_correlation(nu, sqrtQ * sqrtQ);
}

double quad_form(const geo::Displacement& d, const spd::SpdMatrix& Sigma) {
  const double det = Sigma.det();
  // Closed-form 2x2 inverse quadratic form.
  const double q = (Sigma(1, 1) * d[0] * d[0] - 2.0 * Sigma(0, 1) * d[0] * d[1] +
                    Sigma(0, 0) * d[1] * d[1]) /
                   det;
  return q < 0.0 ? 0.0 : q;
}

namespace {

double quad_form_raw(const geo::Displacement& d, const Eigen::Matrix2d& S) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double q =
      (S(1, 1) * d[0] * d[0] - 2.0 * S(0, 1) * d[0] * d[1] + S(0, 0) * d[1] * d[1]) / det;
  return q < 0.0 ? 0.0 : q;
}

double prefactor_scale(NsPrefactor mode) {
  return mode == NsPrefactor::literal ? 2.0 : 1.0;  // 2^{d/2} with d = 2
}

}  // namespace

double stat_matern(const geo::Location& xi, const geo::Location& xj, const MaternParams& p,
                   geo::MetricMode mode) {
  const geo::Displacement d = geo::displacement(xi, xj, mode);
  double Q;
  if (std::holds_alternative<double>(p.cls)) {
    const double ell = std::get<double>(p.cls);
    Q = d.squaredNorm() / (ell * ell);
  } else {
    Q = quad_form(d, std::get<spd::SpdMatrix>(p.cls));
  }
  return p.sigma_f * p.sigma_f * matern_correlation(p.nu, Q);
}

double ns_matern(const geo::Location& xi, const geo::Location& xj, const spd::SpdMatrix& Si,
                 const spd::SpdMatrix& Sj, const MaternParams& p, geo::MetricMode mode) {
  const geo::Displacement d = geo::displacement(xi, xj, mode);
  const Eigen::Matrix2d avg = 0.5 * (Si.mat() + Sj.mat());
  const double det_avg = avg(0, 0) * avg(1, 1) - avg(0, 1) * avg(1, 0);
  const double pref = prefactor_scale(p.prefactor) *
                      std::pow(Si.det() * Sj.det(), 0.25) / std::sqrt(det_avg);
  const double Q = quad_form_raw(d, avg);
  return p.sigma_f * p.sigma_f * pref * matern_correlation(p.nu, Q);
}

double intrinsic_ns_matern(const geo::Location& xi, const geo::Location& xj,
                           const spd::SpdMatrix& Sbar_i, const spd::SpdMatrix& Sbar_j,
                           const spd::SpdMatrix& psi, const MaternParams& p,
                           geo::MetricMode mode) {
  const geo::Displacement d = geo::displacement(xi, xj, mode);
  const double pref = prefactor_scale(p.prefactor) *
                      std::pow(Sbar_i.det() * Sbar_j.det(), 0.25) / std::sqrt(psi.det());
  const double Q = quad_form(d, psi);
  return p.sigma_f * p.sigma_f * pref * matern_correlation(p.nu, Q);
}

namespace {

// Correlation matrix (kernel / sigma_f^2), one symmetric pass over pairs.
// The intrinsic kind precomputes the square-root factors of each regional
// mean so that a pair costs one 2x2 eigen-solve.
Eigen::MatrixXd correlation_impl(const std::vector<geo::Location>& locs, KernelKind kind,
                                 const cls::ClsAssignment& cls, const MaternParams& p,
                                 geo::MetricMode mode) {
  const std::size_t n = locs.size();
  Eigen::MatrixXd C(n, n);
  const double pscale = prefactor_scale(p.prefactor);

  switch (kind) {
    case KernelKind::stat_iso:
    case KernelKind::stat_aniso: {
      Eigen::Matrix2d S;
      if (std::holds_alternative<double>(p.cls)) {
        const double ell = std::get<double>(p.cls);
        S = Eigen::Matrix2d::Identity() * (ell * ell);
      } else {
        S = std::get<spd::SpdMatrix>(p.cls).mat();
      }
      for (std::size_t i = 0; i < n; ++i) {
        C(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
          const geo::Displacement d = geo::displacement(locs[i], locs[j], mode);
          const double v = matern_correlation(p.nu, quad_form_raw(d, S));
          C(i, j) = v;
          C(j, i) = v;
        }
      }
      return C;
    }
    case KernelKind::non_stationary: {
      const auto& field = cls.per_point;
      if (field.size() != n) throw Error("per-point CLS length mismatch in gram assembly");
      std::vector<double> det(n);
      for (std::size_t i = 0; i < n; ++i) det[i] = field[i].det();
      for (std::size_t i = 0; i < n; ++i) {
        C(i, i) = pscale;
        for (std::size_t j = i + 1; j < n; ++j) {
          const geo::Displacement d = geo::displacement(locs[i], locs[j], mode);
          const Eigen::Matrix2d avg = 0.5 * (field[i].mat() + field[j].mat());
          const double det_avg = avg(0, 0) * avg(1, 1) - avg(0, 1) * avg(1, 0);
          const double pref = pscale * std::pow(det[i] * det[j], 0.25) / std::sqrt(det_avg);
          const double v = pref * matern_correlation(p.nu, quad_form_raw(d, avg));
          C(i, j) = v;
          C(j, i) = v;
        }
      }
      return C;
    }
    case KernelKind::intrinsic_non_stationary: {
      if (!cls.regional) throw Error("intrinsic gram requires regional CLS means");
      const auto& field = *cls.regional;
      if (field.size() != n) throw Error("regional CLS length mismatch in gram assembly");
      std::vector<Eigen::Matrix2d> rt(n), irt(n);
      std::vector<double> det(n);
      for (std::size_t i = 0; i < n; ++i) {
        rt[i] = spd::spd_sqrt(field[i]);
        irt[i] = spd::spd_inv_sqrt(field[i]);
        det[i] = field[i].det();
      }
      for (std::size_t i = 0; i < n; ++i) {
        C(i, i) = pscale;
        for (std::size_t j = i + 1; j < n; ++j) {
          const geo::Displacement d = geo::displacement(locs[i], locs[j], mode);
          const Eigen::Matrix2d inner =
              spd::detail::spectral_map<double>(Eigen::Matrix2d(irt[i] * field[j].mat() * irt[i]),
                                                [](double x) {
                                                  if (!(x > 0.0)) {
                                                    throw NumericalFailure(
                                                        "midpoint of non-PD pair");
                                                  }
                                                  return std::sqrt(x);
                                                });
          const Eigen::Matrix2d psi = rt[i] * inner * rt[i];
          const double det_psi = psi(0, 0) * psi(1, 1) - psi(0, 1) * psi(1, 0);
          const double pref = pscale * std::pow(det[i] * det[j], 0.25) / std::sqrt(det_psi);
          const double v = pref * matern_correlation(p.nu, quad_form_raw(d, psi));
          C(i, j) = v;
          C(j, i) = v;
        }
      }
      return C;
    }
  }
  throw Error("unknown kernel kind");
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const std::vector<geo::Location>& locs, KernelKind kind,
                                   const cls::ClsAssignment& cls, const MaternParams& p,
                                   geo::MetricMode mode) {
  p.validate();
  return correlation_impl(locs, kind, cls, p, mode);
}

Eigen::MatrixXd kernel_matrix(const std::vector<geo::Location>& locs, KernelKind kind,
                              const cls::ClsAssignment& cls, const MaternParams& p,
                              geo::MetricMode mode) {
  return p.sigma_f * p.sigma_f * correlation_matrix(locs, kind, cls, p, mode);
}

Eigen::VectorXd kstar_vector(const std::vector<geo::Location>& train_locs,
                             const geo::Location& query, const spd::SpdMatrix* S_star,
                             KernelKind kind, const cls::ClsAssignment& cls,
                             const MaternParams& p, geo::MetricMode mode) {
  const std::size_t n = train_locs.size();
  Eigen::VectorXd k(n);
  switch (kind) {
    case KernelKind::stat_iso:
    case KernelKind::stat_aniso:
      for (std::size_t i = 0; i < n; ++i) k(i) = stat_matern(query, train_locs[i], p, mode);
      return k;
    case KernelKind::non_stationary: {
      if (S_star == nullptr) throw Error("non-stationary kstar requires the query CLS");
      for (std::size_t i = 0; i < n; ++i) {
        k(i) = ns_matern(query, train_locs[i], *S_star, cls.per_point.at(i), p, mode);
      }
      return k;
    }
    case KernelKind::intrinsic_non_stationary: {
      if (S_star == nullptr) throw Error("intrinsic kstar requires the query CLS");
      if (!cls.regional) throw Error("intrinsic kstar requires regional CLS means");
      for (std::size_t i = 0; i < n; ++i) {
        const spd::SpdMatrix& Sbar_i = cls.regional->at(i);
        const spd::SpdMatrix psi = spd::geodesic_midpoint(*S_star, Sbar_i);
        k(i) = intrinsic_ns_matern(query, train_locs[i], *S_star, Sbar_i, psi, p, mode);
      }
      return k;
    }
  }
  throw Error("unknown kernel kind");
}

double kstarstar(KernelKind kind, const MaternParams& p) {
  const double base = p.sigma_f * p.sigma_f;
  if (kind == KernelKind::non_stationary || kind == KernelKind::intrinsic_non_stationary) {
    return base * prefactor_scale(p.prefactor);
  }
  return base;
}

Gram gram_from_correlation(const Eigen::MatrixXd& C, double sigma_f, double sigma_n,
                           const JitterPolicy& policy) {
  const std::size_t n = static_cast<std::size_t>(C.rows());
  Eigen::MatrixXd K = sigma_f * sigma_f * C;
  K.diagonal().array() += sigma_n * sigma_n;
  const double mean_diag = K.diagonal().mean();

  Gram g;
  for (double rel : policy.ladder) {
    const double jitter = rel * mean_diag;
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      g.K = std::move(Kj);
      g.llt = std::move(llt);
      g.jitter = jitter;
      return g;
    }
  }
  throw NotPositiveDefinite("gram not factorizable after jitter escalation (n=" +
                            std::to_string(n) + ")");
}

Gram gram(const std::vector<geo::Location>& locs, KernelKind kind,
          const cls::ClsAssignment& cls, const MaternParams& p, geo::MetricMode mode,
          const JitterPolicy& policy) {
  const Eigen::MatrixXd C = correlation_matrix(locs, kind, cls, p, mode);
  return gram_from_correlation(C, p.sigma_f, p.sigma_n, policy);
}

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::stat_iso:
      return "stat-iso";
    case KernelKind::stat_aniso:
      return "stat-aniso";
    case KernelKind::non_stationary:
      return "nsgp";
    case KernelKind::intrinsic_non_stationary:
      return "insgp";
  }
  return "?";
}

KernelKind kernel_from_name(const std::string& name) {
  if (name == "stat-iso") return KernelKind::stat_iso;
  if (name == "stat-aniso") return KernelKind::stat_aniso;
  if (name == "nsgp") return KernelKind::non_stationary;
  if (name == "insgp") return KernelKind::intrinsic_non_stationary;
  throw ConfigError("unknown kernel '" + name +
                    "' (expected stat-iso|stat-aniso|nsgp|insgp)");
}

}  // namespace geokrig::kernels
