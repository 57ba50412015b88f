#pragma once

#include "tlflr/flr.hpp"

namespace tlflr {

enum class TransferMode { Full, PooledOnly };

/// TL-FLR output: pooled transfer fit plus target-only debias fit.
struct TransferFit {
  RidgeFit transfer_fit;  // pooled, lambda1
  RidgeFit debias_fit;    // target-only fit on residuals, lambda2
  BetaEstimate combined_beta;
  double combined_intercept = 0.0;
  std::vector<std::string> source_ids;
  TransferMode mode = TransferMode::Full;
};

/// Two-step transfer estimator. Transfer step pools target and sources under
/// lambda1 with denominator n_S + n_0; debias step refits the target
/// residuals r_i = y_i - alpha_S - <X_i, beta_S> under lambda2. PooledOnly
/// skips the debias step (the Pooled-TL baseline); an empty source list is
/// the two-stage target-only fit.
TransferFit fit_tlflr(const TaskDataset& target,
                      const std::vector<const TaskDataset*>& sources,
                      const KernelSpec& kernel, double lambda1, double lambda2,
                      TransferMode mode = TransferMode::Full,
                      const FitOptions& opts = {});

double predict(const TransferFit& fit, const Curve& x);
VectorXd predict_batch(const TransferFit& fit, const std::vector<Curve>& xs);

/// (pre_c1 * n_pooled^(-2r/(2r+1)), pre_c2 * n_target^(-2r/(2r+1)))
std::pair<double, double> default_lambdas(int n_pooled, int n_target, double r,
                                          double pre_c1, double pre_c2);

/// Lambda policy used by the fitting front ends.
struct LambdaRule {
  enum class Kind { Fixed, Theorem1, CV, GCV } kind = Kind::Theorem1;
  double lambda1 = 1e-3, lambda2 = 1e-3;  // Fixed
  double r = 2.0;
  double pre_c1 = 0.2, pre_c2 = 0.2;      // Theorem1
  std::vector<double> pre_grid;           // CV/GCV pre-constant grid
  int folds = 10;
  // Pre-constant for the candidate-screening OFLR fits (Algorithm 2 Step 2).
  // Screening compares slope estimates in the truncated norm, where lighter
  // smoothing keeps the target/source covariance mismatch from inflating the
  // distances of genuinely close sources.
  double screening_pre = 0.02;
};

/// Lambda for one screening fit on n samples under the rule.
double screening_lambda(const LambdaRule& rule, int n);

/// The 0.05..1 pre-constant grid used by cross-validated tuning.
std::vector<double> default_pre_grid();

/// (lambda1, lambda2) for a pooled/target sample-size pair under the rule.
/// CV/GCV rules are resolved by the callers that own the data.
std::pair<double, double> lambdas_for(const LambdaRule& rule, int n_pooled,
                                      int n_target);

/// Pick the shared pre-constant of (lambda1, lambda2) by K-fold CV on the
/// target (sources always stay in the transfer step), then return the
/// resolved lambdas.
std::pair<double, double> select_preconstants_cv(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& rule, std::uint64_t seed);

/// Resolve (lambda1, lambda2) for a TL-FLR fit under any rule. CV runs
/// select_preconstants_cv; GCV tunes the transfer step on the pooled data,
/// then the debias step on the target residuals.
std::pair<double, double> resolve_lambdas_tlflr(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& rule, std::uint64_t seed);

/// Resolve the single lambda of a target-only OFLR fit under any rule.
double resolve_lambda_oflr(const TaskDataset& data, const KernelSpec& kernel,
                           const LambdaRule& rule, std::uint64_t seed);

}  // namespace tlflr
