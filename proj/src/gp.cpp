#include "geokrig/gp.hpp"

#include <cmath>

namespace geokrig::gp {

FittedGp fit(const geo::SpatialDataset& train, kernels::KernelKind kind,
             const cls::ClsAssignment& cls, const kernels::MaternParams& params,
             geo::MetricMode mode, const FitOptions& opt) {
  params.validate();
  if (train.locations.empty() || train.locations.size() != train.values.size()) {
    throw Error("fit requires a nonempty, consistent dataset");
  }

  FittedGp g;
  g.train = train;
  g.kind = kind;
  g.cls = cls;
  g.params = params;
  g.mode = mode;

  auto gram = kernels::gram(train.locations, kind, cls, params, mode, opt.jitter);
  g.jitter = gram.jitter;

  Eigen::VectorXd y(static_cast<Eigen::Index>(train.values.size()));
  for (std::size_t i = 0; i < train.values.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = train.values[i];
  }
  if (opt.center_mean) {
    g.y_mean = y.mean();
    y.array() -= g.y_mean;
  }
  g.alpha = gram.llt.solve(y);
  g.chol = std::move(gram.llt);
  return g;
}

namespace {

const spd::SpdMatrix* query_cls_ptr(const FittedGp& g, const geo::Location& x,
                                    spd::SpdMatrix& storage) {
  if (g.kind == kernels::KernelKind::non_stationary ||
      g.kind == kernels::KernelKind::intrinsic_non_stationary) {
    if (!g.cls.query_cls) {
      throw Error("prediction with a CLS-driven kernel requires cls.query_cls");
    }
    storage = g.cls.query_cls(x);
    return &storage;
  }
  return nullptr;
}

PredictiveResult finish_prediction(const FittedGp& g, const Eigen::VectorXd& kstar,
                                   const Eigen::VectorXd& solved) {
  PredictiveResult r;
  r.mean = kstar.dot(g.alpha) + g.y_mean;
  const double sn2 = g.params.sigma_n * g.params.sigma_n;
  double v = kernels::kstarstar(g.kind, g.params) - kstar.dot(solved) + sn2;
  if (v < sn2) {
    if (sn2 - v > 1e-8) ++(*g.variance_clamps);
    v = sn2;
  }
  r.variance = v;
  return r;
}

}  // namespace

PredictiveResult predict(const FittedGp& g, const geo::Location& x) {
  spd::SpdMatrix storage;
  const spd::SpdMatrix* s_star = query_cls_ptr(g, x, storage);
  const Eigen::VectorXd kstar = kernels::kstar_vector(g.train.locations, x, s_star, g.kind,
                                                      g.cls, g.params, g.mode);
  const Eigen::VectorXd solved = g.chol.solve(kstar);
  return finish_prediction(g, kstar, solved);
}

std::vector<PredictiveResult> predict_batch(const FittedGp& g,
                                            const std::vector<geo::Location>& xs,
                                            std::size_t block) {
  const std::size_t n = g.train.locations.size();
  std::vector<PredictiveResult> out(xs.size());
  if (block == 0) block = 1;
  for (std::size_t start = 0; start < xs.size(); start += block) {
    const std::size_t b = std::min(block, xs.size() - start);
    Eigen::MatrixXd kstars(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(b));
    for (std::size_t c = 0; c < b; ++c) {
      spd::SpdMatrix storage;
      const spd::SpdMatrix* s_star = query_cls_ptr(g, xs[start + c], storage);
      kstars.col(static_cast<Eigen::Index>(c)) = kernels::kstar_vector(
          g.train.locations, xs[start + c], s_star, g.kind, g.cls, g.params, g.mode);
    }
    const Eigen::MatrixXd solved = g.chol.solve(kstars);
    for (std::size_t c = 0; c < b; ++c) {
      out[start + c] = finish_prediction(g, kstars.col(static_cast<Eigen::Index>(c)),
                                         solved.col(static_cast<Eigen::Index>(c)));
    }
  }
  return out;
}

double log_marginal_likelihood(const FittedGp& g) {
  const Eigen::Index n = g.alpha.size();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = g.train.values[static_cast<std::size_t>(i)] - g.y_mean;
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(g.chol.matrixLLT()(i, i));
  return -0.5 * y.dot(g.alpha) - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

}  // namespace geokrig::gp
