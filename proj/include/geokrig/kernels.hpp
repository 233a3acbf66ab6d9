#ifndef GEOKRIG_KERNELS_HPP
#define GEOKRIG_KERNELS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <variant>

#include "geokrig/cls_assignment.hpp"
#include "geokrig/geo.hpp"
#include "geokrig/spd.hpp"

namespace geokrig::kernels {

enum class KernelKind { stat_iso, stat_aniso, non_stationary, intrinsic_non_stationary };

// Prefactor convention for the non-stationary kernels. `normalized` omits the
// 2^{d/2} factor so that equal CLS matrices reduce the kernel exactly to the
// stationary anisotropic one; `literal` keeps it.
enum class NsPrefactor { normalized, literal };

struct MaternParams {
  double nu = 1.5;       // smoothness
  double sigma_f = 1.0;  // signal sd
  double sigma_n = 0.1;  // noise sd
  // Isotropic length scale ell (Q = |d|^2 / ell^2) or full anisotropic CLS
  // matrix (Q = d^T Sigma^{-1} d; eigenvalues of Sigma are squared scales).
  std::variant<double, spd::SpdMatrix> cls = 1.0;
  NsPrefactor prefactor = NsPrefactor::normalized;

  void validate() const;
  double ell() const { return std::get<double>(cls); }
  const spd::SpdMatrix& sigma() const { return std::get<spd::SpdMatrix>(cls); }
};

// Unit-variance Matern correlation as a function of the quadratic form Q.
// Half-integer nu uses the closed forms; general nu the modified Bessel
// function of the second kind.
double matern_correlation(double nu, double Q);

// sigma_f^2 times the Matern correlation at Q = sqrtQ^2.
double matern_scalar(double nu, double sqrtQ, double sigma_f);

// d^T Sigma^{-1} d.
double quad_form(const geo::Displacement& d, const spd::SpdMatrix& Sigma);

// Stationary kernels.
double stat_matern(const geo::Location& xi, const geo::Location& xj, const MaternParams& p,
                   geo::MetricMode mode);

// Non-stationary Matern with arithmetic-average CLS convolution.
double ns_matern(const geo::Location& xi, const geo::Location& xj, const spd::SpdMatrix& Si,
                 const spd::SpdMatrix& Sj, const MaternParams& p, geo::MetricMode mode);

// Non-stationary Matern with the pairwise CLS `psi` (normally the geodesic
// midpoint of the two regional means).
double intrinsic_ns_matern(const geo::Location& xi, const geo::Location& xj,
                           const spd::SpdMatrix& Sbar_i, const spd::SpdMatrix& Sbar_j,
                           const spd::SpdMatrix& psi, const MaternParams& p,
                           geo::MetricMode mode);

// Raw kernel matrix, no noise or jitter. sigma_f enters; sigma_n does not.
Eigen::MatrixXd kernel_matrix(const std::vector<geo::Location>& locs, KernelKind kind,
                              const cls::ClsAssignment& cls, const MaternParams& p,
                              geo::MetricMode mode);

// kernel_matrix / sigma_f^2: depends on locations, nu and the CLS assignment
// but not on sigma_f or sigma_n, so it can be cached across noise/amplitude
// updates.
Eigen::MatrixXd correlation_matrix(const std::vector<geo::Location>& locs, KernelKind kind,
                                   const cls::ClsAssignment& cls, const MaternParams& p,
                                   geo::MetricMode mode);

// Cross-covariances k(x*, x_i). For the CLS-driven kinds `S_star` is the CLS
// at the query point.
Eigen::VectorXd kstar_vector(const std::vector<geo::Location>& train_locs,
                             const geo::Location& query, const spd::SpdMatrix* S_star,
                             KernelKind kind, const cls::ClsAssignment& cls,
                             const MaternParams& p, geo::MetricMode mode);

double kstarstar(KernelKind kind, const MaternParams& p);

struct JitterPolicy {
  // Relative ladder applied to the mean diagonal until Cholesky succeeds.
  std::vector<double> ladder = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};
};

struct Gram {
  Eigen::MatrixXd K;  // kernel + sigma_n^2 I + jitter I
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute jitter added to the diagonal
};

// Factor-ready Gram matrix: kernel + sigma_n^2 I, escalating jitter per the
// policy. Throws NotPositiveDefinite when the ladder is exhausted.
Gram gram(const std::vector<geo::Location>& locs, KernelKind kind,
          const cls::ClsAssignment& cls, const MaternParams& p, geo::MetricMode mode,
          const JitterPolicy& policy = {});

// Assembles sigma_f^2 C + sigma_n^2 I + jitter from a cached correlation
// matrix; same jitter escalation as gram().
Gram gram_from_correlation(const Eigen::MatrixXd& C, double sigma_f, double sigma_n,
                           const JitterPolicy& policy = {});

std::string kernel_name(KernelKind kind);
KernelKind kernel_from_name(const std::string& name);

}  // namespace geokrig::kernels

#endif  // GEOKRIG_KERNELS_HPP
