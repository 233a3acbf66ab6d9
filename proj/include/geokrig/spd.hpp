#ifndef GEOKRIG_SPD_HPP
#define GEOKRIG_SPD_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "geokrig/errors.hpp"

// Riemannian statistics on 2x2 symmetric positive definite matrices under the
// affine-invariant metric: geodesic distance, exp/log maps, Karcher mean,
// two-point midpoint, and tangent-space dispersion.
namespace geokrig::spd {

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

namespace detail {

template <typename Scalar>
struct EigenPair {
  Eigen::Matrix<Scalar, 2, 1> values;
  Mat2<Scalar> vectors;
};

template <typename Scalar>
EigenPair<Scalar> sym_eigen(const Mat2<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> solver;
  solver.compute(m);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("2x2 symmetric eigen-solve failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

template <typename Scalar, typename Fn>
Mat2<Scalar> spectral_map(const Mat2<Scalar>& m, Fn&& fn) {
  const auto ep = sym_eigen<Scalar>(Mat2<Scalar>((m + m.transpose()) / Scalar(2)));
  Eigen::Matrix<Scalar, 2, 1> mapped(fn(ep.values[0]), fn(ep.values[1]));
  return ep.vectors * mapped.asDiagonal() * ep.vectors.transpose();
}

}  // namespace detail

// Element of S+(2, R). Symmetrized on construction; construction fails unless
// both eigenvalues are strictly positive and the condition number is below
// 1e12 (downstream inverses are meaningless past that).
template <typename Scalar>
class SpdMatrixT {
 public:
  SpdMatrixT() : m_(Mat2<Scalar>::Identity()) {}

  explicit SpdMatrixT(const Mat2<Scalar>& m) : m_((m + m.transpose()) / Scalar(2)) {
    const auto ep = detail::sym_eigen<Scalar>(m_);
    const Scalar lo = ep.values[0];
    const Scalar hi = ep.values[1];
    if (!(lo > Scalar(0)) || !std::isfinite(static_cast<double>(hi))) {
      throw NumericalFailure("matrix is not positive definite (min eigenvalue " +
                             std::to_string(static_cast<double>(lo)) + ")");
    }
    if (hi / lo > Scalar(1e12)) {
      throw NumericalFailure("SPD condition number exceeds 1e12");
    }
  }

  SpdMatrixT(Scalar a11, Scalar a12, Scalar a22)
      : SpdMatrixT(Mat2<Scalar>{{a11, a12}, {a12, a22}}) {}

  static SpdMatrixT identity() { return SpdMatrixT(); }
  static SpdMatrixT diag(Scalar a, Scalar b) { return SpdMatrixT(a, Scalar(0), b); }

  const Mat2<Scalar>& mat() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  Scalar det() const { return m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0); }
  Scalar trace() const { return m_(0, 0) + m_(1, 1); }

  Mat2<Scalar> inverse() const {
    const Scalar d = det();
    Mat2<Scalar> inv;
    inv << m_(1, 1) / d, -m_(0, 1) / d, -m_(1, 0) / d, m_(0, 0) / d;
    return inv;
  }

 private:
  Mat2<Scalar> m_;
};

using SpdMatrix = SpdMatrixT<double>;

// Principal matrix square root, inverse square root, logarithm, exponential.
template <typename Scalar>
Mat2<Scalar> spd_sqrt(const SpdMatrixT<Scalar>& a) {
  return detail::spectral_map<Scalar>(a.mat(), [](Scalar x) { return std::sqrt(x); });
}

template <typename Scalar>
Mat2<Scalar> spd_inv_sqrt(const SpdMatrixT<Scalar>& a) {
  return detail::spectral_map<Scalar>(a.mat(),
                                      [](Scalar x) { return Scalar(1) / std::sqrt(x); });
}

template <typename Scalar>
Mat2<Scalar> sym_log(const Mat2<Scalar>& m) {
  return detail::spectral_map<Scalar>(m, [](Scalar x) {
    if (!(x > Scalar(0))) throw NumericalFailure("matrix logarithm of non-PD matrix");
    return std::log(x);
  });
}

template <typename Scalar>
Mat2<Scalar> sym_exp(const Mat2<Scalar>& m) {
  return detail::spectral_map<Scalar>(m, [](Scalar x) { return std::exp(x); });
}

// Tangent vector at `base`, in ambient coordinates: exp_base(b) recovers the
// target. Whitened coordinates base^{-1/2} b base^{-1/2} carry the metric.
template <typename Scalar>
struct TangentVectorT {
  Mat2<Scalar> b;
  SpdMatrixT<Scalar> base;

  Mat2<Scalar> whitened() const {
    const Mat2<Scalar> w = spd_inv_sqrt(base);
    return Mat2<Scalar>(w * b * w);
  }
};

using TangentVector = TangentVectorT<double>;

// Affine-invariant geodesic distance sqrt(1/2 sum log^2 eta_i), eta_i the
// eigenvalues of a^{-1/2} b a^{-1/2}.
template <typename Scalar>
Scalar geodesic_distance(const SpdMatrixT<Scalar>& a, const SpdMatrixT<Scalar>& b) {
  const Mat2<Scalar> w = spd_inv_sqrt(a);
  const Mat2<Scalar> m = w * b.mat() * w;
  const auto ep = detail::sym_eigen<Scalar>(Mat2<Scalar>((m + m.transpose()) / Scalar(2)));
  Scalar sum = Scalar(0);
  for (int i = 0; i < 2; ++i) {
    if (!(ep.values[i] > Scalar(0))) {
      throw NumericalFailure("geodesic distance: whitened matrix not PD");
    }
    const Scalar l = std::log(ep.values[i]);
    sum += l * l;
  }
  return std::sqrt(sum / Scalar(2));
}

template <typename Scalar>
TangentVectorT<Scalar> log_map(const SpdMatrixT<Scalar>& base,
                               const SpdMatrixT<Scalar>& target) {
  const Mat2<Scalar> s = spd_sqrt(base);
  const Mat2<Scalar> w = spd_inv_sqrt(base);
  const Mat2<Scalar> inner = sym_log(Mat2<Scalar>(w * target.mat() * w));
  return TangentVectorT<Scalar>{Mat2<Scalar>(s * inner * s), base};
}

template <typename Scalar>
SpdMatrixT<Scalar> exp_map(const SpdMatrixT<Scalar>& base, const Mat2<Scalar>& tangent) {
  const Mat2<Scalar> s = spd_sqrt(base);
  const Mat2<Scalar> w = spd_inv_sqrt(base);
  const Mat2<Scalar> inner = sym_exp(Mat2<Scalar>(w * tangent * w));
  return SpdMatrixT<Scalar>(Mat2<Scalar>(s * inner * s));
}

template <typename Scalar>
SpdMatrixT<Scalar> exp_map(const SpdMatrixT<Scalar>& base, const TangentVectorT<Scalar>& v) {
  return exp_map(base, v.b);
}

template <typename Scalar>
struct KarcherResultT {
  SpdMatrixT<Scalar> mean;
  bool converged = false;
  int iterations = 0;
  // Frobenius norm of the mean tangent in whitened coordinates at return;
  // scale-invariant, equals the ambient norm at mean = I.
  Scalar gradient_norm = Scalar(0);
};

using KarcherResult = KarcherResultT<double>;

// Fixed-point gradient iteration initialized at the log-Euclidean mean:
// mean <- exp_mean(step * avg_k log_mean(S_k)) until the mean tangent drops
// below tol. The step starts at 1 and is halved whenever the Karcher
// objective fails to decrease (the pure unit step can cycle on widely spread
// anisotropic inputs started far from the mean).
template <typename Scalar>
KarcherResultT<Scalar> karcher_mean(const std::vector<SpdMatrixT<Scalar>>& set,
                                    Scalar tol = Scalar(1e-10), int max_iter = 100) {
  if (set.empty()) throw InsufficientSamples("karcher_mean of empty set");
  if (set.size() == 1) return {set.front(), true, 0, Scalar(0)};

  Mat2<Scalar> log_sum = Mat2<Scalar>::Zero();
  for (const auto& s : set) log_sum += sym_log(s.mat());
  SpdMatrixT<Scalar> mean(sym_exp(Mat2<Scalar>(log_sum / Scalar(set.size()))));

  // Whitened mean tangent, ambient tangent, gradient norm and the Karcher
  // objective sum d^2 = 1/2 sum |S_k|_F^2, all from one whitening pass.
  struct Eval {
    Mat2<Scalar> ambient;
    Scalar gnorm;
    Scalar objective;
  };
  const auto evaluate = [&set](const SpdMatrixT<Scalar>& m) {
    const Mat2<Scalar> w = spd_inv_sqrt(m);
    const Mat2<Scalar> s = spd_sqrt(m);
    Mat2<Scalar> white = Mat2<Scalar>::Zero();
    Scalar obj = Scalar(0);
    for (const auto& x : set) {
      const Mat2<Scalar> sk = sym_log(Mat2<Scalar>(w * x.mat() * w));
      white += sk;
      obj += sk.squaredNorm() / Scalar(2);
    }
    white /= Scalar(set.size());
    return Eval{Mat2<Scalar>(s * white * s), white.norm(), obj};
  };

  Eval cur = evaluate(mean);
  KarcherResultT<Scalar> best{mean, false, 0, cur.gnorm};
  Scalar step = Scalar(1);
  const int fixed_point_budget = std::min(max_iter, 60);
  int iter = 0;
  for (; iter <= fixed_point_budget; ++iter) {
    if (cur.gnorm < best.gradient_norm) best = {mean, false, iter, cur.gnorm};
    if (cur.gnorm < tol) return {mean, true, iter, cur.gnorm};
    if (iter == fixed_point_budget) break;

    const SpdMatrixT<Scalar> candidate = exp_map(mean, Mat2<Scalar>(step * cur.ambient));
    const Eval cand = evaluate(candidate);
    // Roundoff-level increases are admitted so the gradient can keep
    // contracting once the objective sits at its floating-point floor.
    if (cand.objective <= cur.objective + Scalar(1e-12) * (Scalar(1) + cur.objective)) {
      mean = candidate;
      cur = cand;
      step = std::min(Scalar(1), step * Scalar(1.05));  // regrow slowly, avoid thrash
    } else {
      step /= Scalar(2);
      if (step < Scalar(1e-8)) break;  // genuinely stuck
    }
  }

  // Damped Newton in global log coordinates. Some spread near-singular sets
  // make the fixed point crawl; the problem is only 3-dimensional, so a
  // finite-difference Newton polish is cheap and rate-independent.
  const auto f_of = [&](const Eigen::Matrix<Scalar, 3, 1>& x) -> Scalar {
    try {
      const SpdMatrixT<Scalar> m(sym_exp(Mat2<Scalar>{{x[0], x[1]}, {x[1], x[2]}}));
      const Mat2<Scalar> w = spd_inv_sqrt(m);
      Scalar obj = Scalar(0);
      for (const auto& s : set) {
        obj += sym_log(Mat2<Scalar>(w * s.mat() * w)).squaredNorm() / Scalar(2);
      }
      return obj;
    } catch (const Error&) {
      return std::numeric_limits<Scalar>::infinity();
    }
  };

  const Mat2<Scalar> x0m = sym_log(best.mean.mat());
  Eigen::Matrix<Scalar, 3, 1> x(x0m(0, 0), x0m(0, 1), x0m(1, 1));
  const int newton_budget = std::max(10, max_iter / 10);
  for (int nit = 0; nit < newton_budget; ++nit, ++iter) {
    SpdMatrixT<Scalar> m(sym_exp(Mat2<Scalar>{{x[0], x[1]}, {x[1], x[2]}}));
    cur = evaluate(m);
    if (cur.gnorm < best.gradient_norm) best = {m, false, iter, cur.gnorm};
    if (cur.gnorm < tol) return {m, true, iter, cur.gnorm};

    const Scalar f0 = cur.objective;
    const Scalar h = Scalar(1e-5) * (Scalar(1) + x.template lpNorm<Eigen::Infinity>());
    Eigen::Matrix<Scalar, 3, 1> grad;
    Eigen::Matrix<Scalar, 3, 3> hess;
    Eigen::Matrix<Scalar, 3, 1> fp, fm;
    for (int i = 0; i < 3; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fp[i] = f_of(xp);
      fm[i] = f_of(xm);
      grad[i] = (fp[i] - fm[i]) / (2 * h);
      hess(i, i) = (fp[i] - 2 * f0 + fm[i]) / (h * h);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        auto xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += h;
        xpp[j] += h;
        xpm[i] += h;
        xpm[j] -= h;
        xmp[i] -= h;
        xmp[j] += h;
        xmm[i] -= h;
        xmm[j] -= h;
        const Scalar v = (f_of(xpp) - f_of(xpm) - f_of(xmp) + f_of(xmm)) / (4 * h * h);
        hess(i, j) = v;
        hess(j, i) = v;
      }
    }

    // Ridge until the Newton direction descends.
    Eigen::Matrix<Scalar, 3, 1> dir;
    Scalar ridge = Scalar(0);
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<Scalar, 3, 3> hr = hess;
      hr.diagonal().array() += ridge;
      dir = hr.ldlt().solve(-grad);
      if (dir.dot(grad) < Scalar(0) && dir.allFinite()) break;
      ridge = ridge == Scalar(0) ? Scalar(1e-6) : ridge * Scalar(10);
    }
    if (!(dir.dot(grad) < Scalar(0)) || !dir.allFinite()) dir = -grad;

    Scalar t = Scalar(1);
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t /= Scalar(2)) {
      const Scalar f1 = f_of(x + t * dir);
      if (f1 <= f0 + Scalar(1e-12) * (Scalar(1) + std::abs(f0))) {
        x += t * dir;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return best;  // converged == false
}

// Two-point Karcher mean, closed form a^{1/2} (a^{-1/2} b a^{-1/2})^{1/2} a^{1/2}.
template <typename Scalar>
SpdMatrixT<Scalar> geodesic_midpoint(const SpdMatrixT<Scalar>& a, const SpdMatrixT<Scalar>& b) {
  const Mat2<Scalar> s = spd_sqrt(a);
  const Mat2<Scalar> w = spd_inv_sqrt(a);
  const Mat2<Scalar> inner =
      detail::spectral_map<Scalar>(Mat2<Scalar>(w * b.mat() * w), [](Scalar x) {
        if (!(x > Scalar(0))) throw NumericalFailure("geodesic midpoint: non-PD inner matrix");
        return std::sqrt(x);
      });
  return SpdMatrixT<Scalar>(Mat2<Scalar>(s * inner * s));
}

// Covariance of a set of SPD matrices over vectorized whitened tangent
// coordinates at their Karcher mean: Lambda = 1/(N-1) sum vec(S_k) vec(S_k)^T.
template <typename Scalar>
struct DispersionT {
  Eigen::Matrix<Scalar, 4, 4> lambda;
  std::size_t n_samples = 0;

  Scalar trace() const { return lambda.trace(); }
};

using Dispersion = DispersionT<double>;

namespace detail {

// Whitened tangent coordinate of `target` at `mean`:
// log(mean^{-1/2} target mean^{-1/2}); its squared Frobenius norm equals
// sum log^2 eta = 2 d^2(mean, target).
template <typename Scalar>
Mat2<Scalar> whitened_log(const SpdMatrixT<Scalar>& mean, const SpdMatrixT<Scalar>& target) {
  const Mat2<Scalar> w = spd_inv_sqrt(mean);
  return sym_log(Mat2<Scalar>(w * target.mat() * w));
}

}  // namespace detail

template <typename Scalar>
DispersionT<Scalar> dispersion(const std::vector<SpdMatrixT<Scalar>>& set,
                               const SpdMatrixT<Scalar>& mean) {
  if (set.size() < 2) {
    throw InsufficientSamples("dispersion requires at least 2 matrices, got " +
                              std::to_string(set.size()));
  }
  Eigen::Matrix<Scalar, 4, 4> lambda = Eigen::Matrix<Scalar, 4, 4>::Zero();
  for (const auto& s : set) {
    const Mat2<Scalar> t = detail::whitened_log(mean, s);
    const Eigen::Matrix<Scalar, 4, 1> v(t(0, 0), t(0, 1), t(1, 0), t(1, 1));
    lambda += v * v.transpose();
  }
  lambda /= Scalar(set.size() - 1);
  return {lambda, set.size()};
}

// Squared whitened-tangent Frobenius norm of each element about the mean
// (equal to twice the squared geodesic distance). Summed and divided by N-1
// this reproduces trace(dispersion).
template <typename Scalar>
std::vector<Scalar> per_element_deviation(const std::vector<SpdMatrixT<Scalar>>& set,
                                          const SpdMatrixT<Scalar>& mean) {
  std::vector<Scalar> out;
  out.reserve(set.size());
  const Mat2<Scalar> w = spd_inv_sqrt(mean);
  for (const auto& s : set) {
    const Mat2<Scalar> t = sym_log(Mat2<Scalar>(w * s.mat() * w));
    out.push_back(t.squaredNorm());
  }
  return out;
}

}  // namespace geokrig::spd

#endif  // GEOKRIG_SPD_HPP
