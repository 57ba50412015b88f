#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tlflr/aggregate.hpp"
#include "tlflr/simgen.hpp"

namespace tlflr {

/// Law of a fresh predictor draw used for excess-risk evaluation.
struct PredictorLaw {
  MeanFn mean = MeanFn::SinPi;
  KernelSpec cov{MaternKernel{MaternNu::Half, 1.0}, {}};
};

/// Monte-Carlo excess risk: mean over n_mc fresh draws of
/// (delta_alpha + <X, delta_beta>_w)^2 on the truth's grid.
double excess_risk_mc(const BetaEstimate& est_beta, double est_alpha,
                      const BetaEstimate& true_beta, double true_alpha,
                      const PredictorLaw& law, int n_mc, Rng& rng);

/// Closed-form counterpart <db, C db>_w + (da + <mu, db>_w)^2 by quadrature
/// over the covariance kernel.
double excess_risk_analytic(const BetaEstimate& est_beta, double est_alpha,
                            const BetaEstimate& true_beta, double true_alpha,
                            const PredictorLaw& law);

double relative_excess_risk(double method_risk, double baseline_risk);

struct ExperimentRow {
  double h = std::nan("");
  int s_size = -1;
  int n = -1;
  std::string method;
  double mean = 0.0;
  double se = 0.0;
  int reps = 0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ExperimentRow> rows;
  std::uint64_t seed = 0;
  std::string config_hash;
  double slope = std::nan("");  // rate_slope only
  // Count of star-aggregation runs whose holdout risk exceeded the best
  // dictionary member (should always stay 0).
  int star_oracle_violations = 0;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  KernelSpec kernel{EigenExpansionKernel{}, {}};
  LambdaRule lambda_rule;
  int n_mc = 1000;
  int reps = 20;
  int threads = 1;
  int M = 20;
  int eig_grid_size = 256;
  double temperature = 1.0;
  std::uint64_t seed = 1;
};

/// Relative excess risk of TL-FLR(true S) to OFLR over an (h, |S|) grid.
ExperimentResult run_heatmap_experiment(const std::vector<double>& h_values,
                                        const std::vector<int>& s_sizes,
                                        const ExperimentConfig& config);

/// Mean excess risk per method with L sources and a random transferable
/// subset of each requested size. Methods: "oflr", "tlflr_true_s",
/// "atlflr_star", "atlflr_ew".
ExperimentResult run_mixture_experiment(const std::vector<int>& s_sizes,
                                        const std::vector<std::string>& methods,
                                        const ExperimentConfig& config);

/// Least-squares slope of log mean OFLR excess risk against log n.
double slope_loglog(const std::vector<double>& ns,
                    const std::vector<double>& risks);
ExperimentResult run_rate_slope_experiment(const std::vector<int>& n_values,
                                           const ExperimentConfig& config);

}  // namespace tlflr
