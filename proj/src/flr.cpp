#include "tlflr/flr.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tlflr/rng.hpp"
#include "tlflr/simd.hpp"

namespace tlflr {

VectorXd default_eval_grid(const Interval& domain, int points) {
  return linspace(domain.lo, domain.hi, points);
}

namespace {

/// P Sigma P with P = I - 11'/N, symmetrized against rounding drift.
MatrixXd doubly_center(const MatrixXd& sigma) {
  VectorXd m = sigma.rowwise().mean();
  const double grand = m.mean();
  MatrixXd g = sigma;
  g.colwise() -= m;
  g.rowwise() -= m.transpose();
  g.array() += grand;
  g = ((g + g.transpose()) * 0.5).eval();
  return g;
}

/// (G + N lambda I + jitter) c = y_c via LLT, escalating jitter from
/// 1e-12 trace(Sigma)/N by factors of 10 up to 1e-6 trace(Sigma).
VectorXd solve_ridge(const MatrixXd& g, const VectorXd& y_c, double ridge,
                     double sigma_trace, double n) {
  const double j0 = 1e-12 * sigma_trace / n;
  const double jmax = 1e-6 * sigma_trace;
  double jitter = 0.0;
  for (;;) {
    MatrixXd a = g;
    a.diagonal().array() += ridge + jitter;
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      VectorXd c = llt.solve(y_c);
      if (c.allFinite()) return c;
    }
    if (jitter == 0.0)
      jitter = j0 > 0 ? j0 : 1e-12;
    else
      jitter *= 10.0;
    if (jitter > jmax && jmax > 0.0) {
      std::ostringstream msg;
      msg << "ridge solve failed: N=" << n << " ridge=" << ridge
          << " trace=" << sigma_trace << " max jitter " << jmax
          << " exhausted";
      throw NumericalError(msg.str());
    }
    if (jmax <= 0.0 && jitter > 1e-6) {
      throw NumericalError("ridge solve failed on a zero-trace Gram");
    }
  }
}

BetaEstimate beta_from_coef(const std::vector<Curve>& curves,
                            const VectorXd& coef, const KernelSpec& kernel,
                            const VectorXd& grid) {
  const auto groups = group_curves(curves);
  VectorXd beta = VectorXd::Zero(grid.size());
  for (const auto& grp : groups) {
    VectorXd cg(grp.rows.size());
    for (std::size_t i = 0; i < grp.rows.size(); ++i)
      cg[static_cast<Eigen::Index>(i)] = coef[grp.rows[i]];
    beta.noalias() += kernel_matrix(kernel, grid, grp.grid) * (grp.z * cg);
  }
  return {grid, beta};
}

}  // namespace

RidgeFit fit_from_gram(const MatrixXd& sigma, const VectorXd& y,
                       const KernelSpec& kernel, double lambda,
                       std::shared_ptr<const std::vector<Curve>> curves,
                       const FitOptions& opts) {
  const Eigen::Index n = sigma.rows();
  if (n == 0 || sigma.cols() != n) throw ArgumentError("fit: bad Gram shape");
  if (y.size() != n) throw ArgumentError("fit: response length mismatch");
  if (!(lambda > 0)) throw ArgumentError("fit: lambda must be positive");
  if (curves && static_cast<Eigen::Index>(curves->size()) != n)
    throw ArgumentError("fit: curve count mismatch");

  const double ybar = y.mean();
  VectorXd y_c = y.array() - ybar;
  MatrixXd g = doubly_center(sigma);
  VectorXd c = solve_ridge(g, y_c, static_cast<double>(n) * lambda,
                           sigma.trace(), static_cast<double>(n));

  RidgeFit fit;
  fit.intercept = ybar - (sigma * c).mean();
  fit.coef = std::move(c);
  fit.curves = std::move(curves);
  fit.kernel = kernel;
  fit.lambda = lambda;
  VectorXd grid = opts.eval_grid.size() > 0 ? opts.eval_grid
                                            : default_eval_grid(kernel.domain);
  fit.beta_on_grid = beta_from_coef(*fit.curves, fit.coef, kernel, grid);
  return fit;
}

RidgeFit fit_oflr(const TaskDataset& data, const KernelSpec& kernel,
                  double lambda, const FitOptions& opts) {
  validate_dataset(data);
  auto curves = std::make_shared<const std::vector<Curve>>(data.curves);
  MatrixXd sigma = rkhs_gram_curves(*curves, kernel);
  return fit_from_gram(sigma, data.responses, kernel, lambda,
                       std::move(curves), opts);
}

RidgeFit fit_oflr(const std::vector<const TaskDataset*>& pooled,
                  const KernelSpec& kernel, double lambda,
                  const FitOptions& opts) {
  std::vector<Curve> all;
  std::vector<double> ys;
  for (const auto* t : pooled) {
    if (t == nullptr) throw ArgumentError("fit_oflr: null task");
    validate_dataset(*t);
    all.insert(all.end(), t->curves.begin(), t->curves.end());
    for (Eigen::Index i = 0; i < t->responses.size(); ++i)
      ys.push_back(t->responses[i]);
  }
  auto curves = std::make_shared<const std::vector<Curve>>(std::move(all));
  MatrixXd sigma = rkhs_gram_curves(*curves, kernel);
  VectorXd y = Eigen::Map<const VectorXd>(ys.data(), ys.size());
  return fit_from_gram(sigma, y, kernel, lambda, std::move(curves), opts);
}

BetaEstimate evaluate_beta(const RidgeFit& fit, const VectorXd& grid) {
  return beta_from_coef(*fit.curves, fit.coef, fit.kernel, grid);
}

double predict(const RidgeFit& fit, const Curve& x) {
  MatrixXd cross = rkhs_cross_gram({x}, *fit.curves, fit.kernel);
  return fit.intercept + (cross * fit.coef)(0);
}

VectorXd predict_batch(const RidgeFit& fit, const std::vector<Curve>& xs) {
  MatrixXd cross = rkhs_cross_gram(xs, *fit.curves, fit.kernel);
  return (cross * fit.coef).array() + fit.intercept;
}

std::vector<std::vector<int>> cv_fold_indices(int n, int folds,
                                              std::uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "cv_folds"));
  rng.shuffle(order);
  std::vector<std::vector<int>> out(folds);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    out[pos % folds].push_back(order[pos]);
  return out;
}

double select_lambda_cv(const TaskDataset& data, const KernelSpec& kernel,
                        const std::vector<double>& lambda_grid, int folds,
                        std::uint64_t seed) {
  validate_dataset(data);
  if (lambda_grid.empty()) throw ArgumentError("cv: empty lambda grid");
  const Eigen::Index n = data.size();
  if (folds < 2 || folds > n) throw ArgumentError("cv: folds out of range");

  MatrixXd sigma = rkhs_gram(data, kernel);
  const auto plan = cv_fold_indices(static_cast<int>(n), folds, seed);
  std::vector<double> cv(lambda_grid.size(), 0.0);

  for (const auto& test : plan) {
    if (test.empty()) continue;
    std::vector<int> train;
    train.reserve(n - test.size());
    std::vector<bool> held(n, false);
    for (int i : test) held[i] = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!held[i]) train.push_back(static_cast<int>(i));

    MatrixXd s_tr = submatrix(sigma, train, train);
    MatrixXd cross = submatrix(sigma, test, train);
    VectorXd y_tr(train.size()), y_te(test.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_tr[i] = data.responses[train[i]];
    for (std::size_t i = 0; i < test.size(); ++i) y_te[i] = data.responses[test[i]];

    const double ybar = y_tr.mean();
    VectorXd y_c = y_tr.array() - ybar;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(doubly_center(s_tr));
    if (es.info() != Eigen::Success)
      throw NumericalError("cv: eigendecomposition failed");
    VectorXd y_t = es.eigenvectors().transpose() * y_c;
    VectorXd row_mean = s_tr.rowwise().mean();
    const double n_tr = static_cast<double>(train.size());

    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
      VectorXd scaled =
          (y_t.array() / (es.eigenvalues().array() + n_tr * lambda_grid[k]))
              .matrix();
      VectorXd c = es.eigenvectors() * scaled;
      const double alpha = ybar - row_mean.dot(c);
      VectorXd pred = (cross * c).array() + alpha;
      cv[k] += (pred - y_te).squaredNorm() / static_cast<double>(test.size());
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < lambda_grid.size(); ++k)
    if (cv[k] < cv[best]) best = k;
  return lambda_grid[best];
}

double gcv_score(const TaskDataset& data, const KernelSpec& kernel,
                 double lambda) {
  validate_dataset(data);
  const Eigen::Index n = data.size();
  if (n < 2) throw ArgumentError("gcv: needs N >= 2");
  MatrixXd sigma = rkhs_gram(data, kernel);
  const double ybar = data.responses.mean();
  VectorXd y_c = data.responses.array() - ybar;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(doubly_center(sigma));
  if (es.info() != Eigen::Success)
    throw NumericalError("gcv: eigendecomposition failed");
  VectorXd y_t = es.eigenvectors().transpose() * y_c;
  const double dn = static_cast<double>(n);
  const double nl = dn * lambda;
  double rss = 0.0, tr_h = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = es.eigenvalues()[i];
    const double shrink = nl / (d + nl);
    rss += (shrink * y_t[i]) * (shrink * y_t[i]);
    tr_h += d / (d + nl);
  }
  if (tr_h / dn >= 1.0)
    throw NumericalError("gcv: tr(H)/N >= 1 at this lambda");
  const double denom = 1.0 - tr_h / dn;
  return (rss / dn) / (denom * denom);
}

double select_lambda_gcv(const TaskDataset& data, const KernelSpec& kernel,
                         const std::vector<double>& lambda_grid) {
  validate_dataset(data);
  if (lambda_grid.empty()) throw ArgumentError("gcv: empty lambda grid");
  const Eigen::Index n = data.size();
  if (n < 2) throw ArgumentError("gcv: needs N >= 2");

  MatrixXd sigma = rkhs_gram(data, kernel);
  const double ybar = data.responses.mean();
  VectorXd y_c = data.responses.array() - ybar;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(doubly_center(sigma));
  if (es.info() != Eigen::Success)
    throw NumericalError("gcv: eigendecomposition failed");
  VectorXd y_t = es.eigenvectors().transpose() * y_c;
  const double dn = static_cast<double>(n);

  double best_gcv = std::numeric_limits<double>::infinity();
  std::size_t best = lambda_grid.size();
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    const double nl = dn * lambda_grid[k];
    double rss = 0.0, tr_h = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = es.eigenvalues()[i];
      const double shrink = nl / (d + nl);
      rss += (shrink * y_t[i]) * (shrink * y_t[i]);
      tr_h += d / (d + nl);
    }
    if (tr_h / dn >= 1.0) continue;  // saturated hat matrix: skip this lambda
    const double denom = 1.0 - tr_h / dn;
    const double gcv = (rss / dn) / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best = k;
    }
  }
  if (best == lambda_grid.size())
    throw NumericalError("gcv: every lambda had tr(H)/N >= 1");
  return lambda_grid[best];
}

double truncated_rkhs_distance(const BetaEstimate& beta_a,
                               const BetaEstimate& beta_b,
                               const EigenSystem& eig, int M) {
  if (M < 1 || M > eig.count)
    throw ArgumentError("truncated distance: M exceeds available eigenpairs");
  VectorXd va = (beta_a.grid.size() == eig.grid.size() &&
                 beta_a.grid == eig.grid)
                    ? beta_a.values
                    : interp_linear(beta_a, eig.grid);
  VectorXd vb = (beta_b.grid.size() == eig.grid.size() &&
                 beta_b.grid == eig.grid)
                    ? beta_b.values
                    : interp_linear(beta_b, eig.grid);
  VectorXd delta = va - vb;
  double acc = 0.0;
  for (int j = 0; j < M; ++j) {
    const double score =
        l2_inner_on_grid(delta, eig.eigenfunctions[j], eig.quad_weights);
    acc += score * score / eig.eigenvalues[j];
  }
  return acc;
}

}  // namespace tlflr
