#include "tlflr/transfer.hpp"

#include <cmath>

#include "tlflr/rng.hpp"

namespace tlflr {

std::pair<double, double> default_lambdas(int n_pooled, int n_target, double r,
                                          double pre_c1, double pre_c2) {
  if (n_pooled < 1 || n_target < 1) throw ArgumentError("sample sizes >= 1");
  if (!(r > 0) || !(pre_c1 > 0) || !(pre_c2 > 0))
    throw ArgumentError("rate exponent and pre-constants must be positive");
  const double expo = -2.0 * r / (2.0 * r + 1.0);
  return {pre_c1 * std::pow(static_cast<double>(n_pooled), expo),
          pre_c2 * std::pow(static_cast<double>(n_target), expo)};
}

std::vector<double> default_pre_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
  return g;
}

std::pair<double, double> lambdas_for(const LambdaRule& rule, int n_pooled,
                                      int n_target) {
  if (rule.kind == LambdaRule::Kind::Fixed)
    return {rule.lambda1, rule.lambda2};
  return default_lambdas(n_pooled, n_target, rule.r, rule.pre_c1, rule.pre_c2);
}

double screening_lambda(const LambdaRule& rule, int n) {
  if (rule.kind == LambdaRule::Kind::Fixed) return rule.lambda2;
  return default_lambdas(n, n, rule.r, 1.0, rule.screening_pre).second;
}

namespace {

RidgeFit zero_debias_fit(const TaskDataset& target, const KernelSpec& kernel,
                         double lambda2, const VectorXd& grid) {
  RidgeFit fit;
  fit.intercept = 0.0;
  fit.coef = VectorXd::Zero(target.size());
  fit.curves = std::make_shared<const std::vector<Curve>>(target.curves);
  fit.kernel = kernel;
  fit.lambda = lambda2;
  fit.beta_on_grid = {grid, VectorXd::Zero(grid.size())};
  return fit;
}

}  // namespace

TransferFit fit_tlflr(const TaskDataset& target,
                      const std::vector<const TaskDataset*>& sources,
                      const KernelSpec& kernel, double lambda1, double lambda2,
                      TransferMode mode, const FitOptions& opts) {
  validate_dataset(target);
  for (const auto* s : sources) {
    if (s == nullptr) throw ArgumentError("fit_tlflr: null source");
    validate_dataset(*s);
  }
  if (!(lambda1 > 0) || !(lambda2 > 0))
    throw ArgumentError("fit_tlflr: lambdas must be positive");

  const Eigen::Index n0 = target.size();
  std::vector<Curve> pooled = target.curves;
  std::vector<double> ys(target.responses.data(),
                         target.responses.data() + n0);
  std::vector<std::string> ids;
  for (const auto* s : sources) {
    pooled.insert(pooled.end(), s->curves.begin(), s->curves.end());
    for (Eigen::Index i = 0; i < s->responses.size(); ++i)
      ys.push_back(s->responses[i]);
    ids.push_back(s->task_id);
  }
  auto pooled_curves =
      std::make_shared<const std::vector<Curve>>(std::move(pooled));
  MatrixXd sigma = rkhs_gram_curves(*pooled_curves, kernel);
  VectorXd y = Eigen::Map<const VectorXd>(ys.data(), ys.size());

  FitOptions fit_opts = opts;
  if (fit_opts.eval_grid.size() == 0)
    fit_opts.eval_grid = default_eval_grid(kernel.domain);

  TransferFit out;
  out.mode = mode;
  out.source_ids = std::move(ids);
  out.transfer_fit =
      fit_from_gram(sigma, y, kernel, lambda1, pooled_curves, fit_opts);

  if (mode == TransferMode::PooledOnly) {
    out.debias_fit =
        zero_debias_fit(target, kernel, lambda2, fit_opts.eval_grid);
    out.combined_beta = out.transfer_fit.beta_on_grid;
    out.combined_intercept = out.transfer_fit.intercept;
    return out;
  }

  // Debias on residuals r_i = y_i - alpha_S - <X_i, beta_S>; the row sums of
  // the pooled Gram give <X_i, beta_S> exactly.
  VectorXd fitted = sigma.topRows(n0) * out.transfer_fit.coef;
  VectorXd resid =
      y.head(n0) - fitted.array().matrix() -
      VectorXd::Constant(n0, out.transfer_fit.intercept);
  MatrixXd sigma0 = sigma.topLeftCorner(n0, n0);
  out.debias_fit = fit_from_gram(
      sigma0, resid, kernel, lambda2,
      std::make_shared<const std::vector<Curve>>(target.curves), fit_opts);

  out.combined_beta = {fit_opts.eval_grid,
                       out.transfer_fit.beta_on_grid.values +
                           out.debias_fit.beta_on_grid.values};
  out.combined_intercept =
      out.transfer_fit.intercept + out.debias_fit.intercept;
  return out;
}

double predict(const TransferFit& fit, const Curve& x) {
  double p = predict(fit.transfer_fit, x);
  if (!fit.debias_fit.coef.isZero(0.0) || fit.debias_fit.intercept != 0.0)
    p += predict(fit.debias_fit, x);
  return p;
}

VectorXd predict_batch(const TransferFit& fit, const std::vector<Curve>& xs) {
  VectorXd p = predict_batch(fit.transfer_fit, xs);
  if (!fit.debias_fit.coef.isZero(0.0) || fit.debias_fit.intercept != 0.0)
    p += predict_batch(fit.debias_fit, xs);
  return p;
}

std::pair<double, double> select_preconstants_cv(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& rule, std::uint64_t seed) {
  validate_dataset(target);
  const std::vector<double>& grid =
      rule.pre_grid.empty() ? default_pre_grid() : rule.pre_grid;
  const int n0 = static_cast<int>(target.size());
  int n_pooled = n0;
  for (const auto* s : sources) n_pooled += static_cast<int>(s->size());
  const auto base = default_lambdas(n_pooled, n0, rule.r, 1.0, 1.0);

  // Pooled Gram with target rows first.
  std::vector<const TaskDataset*> all;
  all.push_back(&target);
  all.insert(all.end(), sources.begin(), sources.end());
  MatrixXd sigma = rkhs_gram(all, kernel);
  VectorXd y(n_pooled);
  {
    Eigen::Index at = 0;
    for (const auto* t : all) {
      y.segment(at, t->size()) = t->responses;
      at += t->size();
    }
  }

  const auto folds = cv_fold_indices(n0, rule.folds, seed);
  std::vector<double> cv(grid.size(), 0.0);

  for (const auto& test : folds) {
    if (test.empty()) continue;
    std::vector<bool> held(n0, false);
    for (int i : test) held[i] = true;
    std::vector<int> target_train, train;
    for (int i = 0; i < n0; ++i)
      if (!held[i]) target_train.push_back(i);
    train = target_train;
    for (int i = n0; i < n_pooled; ++i) train.push_back(i);

    MatrixXd s_tr = submatrix(sigma, train, train);
    VectorXd y_tr(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_tr[i] = y[train[i]];
    const double ybar = y_tr.mean();
    VectorXd y_c = y_tr.array() - ybar;
    VectorXd row_mean = s_tr.rowwise().mean();

    MatrixXd g_tr = s_tr;
    {
      VectorXd m = g_tr.rowwise().mean();
      const double grand = m.mean();
      g_tr.colwise() -= m;
      g_tr.rowwise() -= m.transpose();
      g_tr.array() += grand;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        ((g_tr + g_tr.transpose()) * 0.5).eval());
    if (es.info() != Eigen::Success)
      throw NumericalError("preconstant cv: transfer eigendecomposition failed");
    VectorXd y_t = es.eigenvectors().transpose() * y_c;

    // Debias system on the target training rows.
    MatrixXd s00 = submatrix(sigma, target_train, target_train);
    MatrixXd g00 = s00;
    {
      VectorXd m = g00.rowwise().mean();
      const double grand = m.mean();
      g00.colwise() -= m;
      g00.rowwise() -= m.transpose();
      g00.array() += grand;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es0(
        ((g00 + g00.transpose()) * 0.5).eval());
    if (es0.info() != Eigen::Success)
      throw NumericalError("preconstant cv: debias eigendecomposition failed");
    VectorXd row_mean0 = s00.rowwise().mean();
    MatrixXd cross_tr = submatrix(sigma, test, train);
    MatrixXd cross_tt = submatrix(sigma, test, target_train);
    MatrixXd s0_tr = submatrix(sigma, target_train, train);
    VectorXd y0(target_train.size());
    for (std::size_t i = 0; i < target_train.size(); ++i)
      y0[i] = y[target_train[i]];
    VectorXd y_te(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) y_te[i] = y[test[i]];
    const double n_tr = static_cast<double>(train.size());
    const double n_tr0 = static_cast<double>(target_train.size());

    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double l1 = grid[k] * base.first;
      const double l2 = grid[k] * base.second;
      VectorXd c_s =
          es.eigenvectors() *
          ((y_t.array() / (es.eigenvalues().array() + n_tr * l1)).matrix());
      const double alpha_s = ybar - row_mean.dot(c_s);
      VectorXd resid = y0 - (s0_tr * c_s).array().matrix() -
                       VectorXd::Constant(y0.size(), alpha_s);
      const double rbar = resid.mean();
      VectorXd r_t = es0.eigenvectors().transpose() *
                     (resid.array() - rbar).matrix();
      VectorXd c_d =
          es0.eigenvectors() *
          ((r_t.array() / (es0.eigenvalues().array() + n_tr0 * l2)).matrix());
      const double alpha_d = rbar - row_mean0.dot(c_d);
      VectorXd pred = (cross_tr * c_s).array() + alpha_s +
                      (cross_tt * c_d).array() + alpha_d;
      cv[k] += (pred - y_te).squaredNorm() / static_cast<double>(test.size());
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (cv[k] < cv[best]) best = k;
  return {grid[best] * base.first, grid[best] * base.second};
}

std::pair<double, double> resolve_lambdas_tlflr(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& rule, std::uint64_t seed) {
  int n_pooled = static_cast<int>(target.size());
  for (const auto* s : sources) n_pooled += static_cast<int>(s->size());
  const int n0 = static_cast<int>(target.size());
  switch (rule.kind) {
    case LambdaRule::Kind::Fixed:
    case LambdaRule::Kind::Theorem1:
      return lambdas_for(rule, n_pooled, n0);
    case LambdaRule::Kind::CV:
      return select_preconstants_cv(target, sources, kernel, rule, seed);
    case LambdaRule::Kind::GCV: {
      const auto base = default_lambdas(n_pooled, n0, rule.r, 1.0, 1.0);
      const std::vector<double>& pre =
          rule.pre_grid.empty() ? default_pre_grid() : rule.pre_grid;
      // Transfer step: GCV over the pooled data.
      TaskDataset merged = target;
      merged.task_id = "pooled";
      for (const auto* s : sources) {
        merged.curves.insert(merged.curves.end(), s->curves.begin(),
                             s->curves.end());
        VectorXd r(merged.responses.size() + s->responses.size());
        r << merged.responses, s->responses;
        merged.responses = std::move(r);
      }
      std::vector<double> grid1;
      for (double c : pre) grid1.push_back(c * base.first);
      const double l1 = select_lambda_gcv(merged, kernel, grid1);
      // Debias step: GCV on the target residuals under the chosen l1.
      TransferFit tmp = fit_tlflr(target, sources, kernel, l1, base.second,
                                  TransferMode::Full);
      VectorXd fitted = predict_batch(tmp.transfer_fit, target.curves);
      TaskDataset resid = target;
      resid.responses = target.responses - fitted;
      std::vector<double> grid2;
      for (double c : pre) grid2.push_back(c * base.second);
      const double l2 = select_lambda_gcv(resid, kernel, grid2);
      return {l1, l2};
    }
  }
  throw ArgumentError("unknown lambda rule");
}

double resolve_lambda_oflr(const TaskDataset& data, const KernelSpec& kernel,
                           const LambdaRule& rule, std::uint64_t seed) {
  const int n = static_cast<int>(data.size());
  switch (rule.kind) {
    case LambdaRule::Kind::Fixed:
      return rule.lambda2;
    case LambdaRule::Kind::Theorem1:
      return lambdas_for(rule, n, n).second;
    case LambdaRule::Kind::CV: {
      const auto base = default_lambdas(n, n, rule.r, 1.0, 1.0);
      const std::vector<double>& pre =
          rule.pre_grid.empty() ? default_pre_grid() : rule.pre_grid;
      std::vector<double> grid;
      for (double c : pre) grid.push_back(c * base.second);
      return select_lambda_cv(data, kernel, grid, rule.folds, seed);
    }
    case LambdaRule::Kind::GCV: {
      const auto base = default_lambdas(n, n, rule.r, 1.0, 1.0);
      const std::vector<double>& pre =
          rule.pre_grid.empty() ? default_pre_grid() : rule.pre_grid;
      std::vector<double> grid;
      for (double c : pre) grid.push_back(c * base.second);
      return select_lambda_gcv(data, kernel, grid);
    }
  }
  throw ArgumentError("unknown lambda rule");
}

}  // namespace tlflr
