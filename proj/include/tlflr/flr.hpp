#pragma once

#include <memory>
#include <optional>

#include "tlflr/fda.hpp"
#include "tlflr/kernels.hpp"
#include "tlflr/types.hpp"

namespace tlflr {

/// RKHS-penalized functional linear regression fit in representer form:
/// beta(t) = sum_i c_i <X_i, K_t>, prediction alpha + <x, beta>.
struct RidgeFit {
  double intercept = 0.0;
  VectorXd coef;  // one per training curve
  std::shared_ptr<const std::vector<Curve>> curves;
  KernelSpec kernel;
  double lambda = 0.0;
  BetaEstimate beta_on_grid;  // cached slope on the evaluation grid
};

struct FitOptions {
  VectorXd eval_grid;  // empty -> 201 uniform points on the kernel domain
};

VectorXd default_eval_grid(const Interval& domain, int points = 201);

/// Exact minimizer of (1/N)||y - alpha 1 - Sigma c||^2 + lambda c' Sigma c:
/// centers y and the Gram, solves (Sigma_c + N lambda I) c = y_c,
/// alpha = ybar - mean(Sigma c).
RidgeFit fit_oflr(const TaskDataset& data, const KernelSpec& kernel,
                  double lambda, const FitOptions& opts = {});
RidgeFit fit_oflr(const std::vector<const TaskDataset*>& pooled,
                  const KernelSpec& kernel, double lambda,
                  const FitOptions& opts = {});

/// Computational core shared with the transfer/aggregation paths: fit from a
/// precomputed Gram. `curves` must match sigma's row order.
RidgeFit fit_from_gram(const MatrixXd& sigma, const VectorXd& y,
                       const KernelSpec& kernel, double lambda,
                       std::shared_ptr<const std::vector<Curve>> curves,
                       const FitOptions& opts = {});

double predict(const RidgeFit& fit, const Curve& x);
VectorXd predict_batch(const RidgeFit& fit, const std::vector<Curve>& xs);

BetaEstimate evaluate_beta(const RidgeFit& fit, const VectorXd& grid);

/// Fold assignment rule shared by every CV path: shuffle 0..n-1 with the
/// seed, deal round-robin into `folds` buckets.
std::vector<std::vector<int>> cv_fold_indices(int n, int folds,
                                              std::uint64_t seed);

/// K-fold cross-validation over a lambda grid; folds are a seeded shuffled
/// round-robin; ties keep the first grid entry.
double select_lambda_cv(const TaskDataset& data, const KernelSpec& kernel,
                        const std::vector<double>& lambda_grid, int folds,
                        std::uint64_t seed);

/// GCV(lambda) = (RSS/N) / (1 - tr(H)/N)^2 with the exact hat-matrix trace;
/// grid values with tr(H)/N >= 1 are skipped.
double select_lambda_gcv(const TaskDataset& data, const KernelSpec& kernel,
                         const std::vector<double>& lambda_grid);

/// The GCV objective at a single lambda.
double gcv_score(const TaskDataset& data, const KernelSpec& kernel,
                 double lambda);

/// Truncated squared RKHS distance
/// sum_{j<=M} <beta_a - beta_b, v_j>_w^2 / tau_j on the eigensystem grid.
double truncated_rkhs_distance(const BetaEstimate& beta_a,
                               const BetaEstimate& beta_b,
                               const EigenSystem& eig, int M);

}  // namespace tlflr
