#pragma once

#include "tlflr/fda.hpp"
#include "tlflr/rng.hpp"

namespace tlflr {

enum class MeanFn { Zero, SinPi, Cos2Pi };
enum class NegativeVariant { OrnsteinUhlenbeck, Wiener };

struct ScenarioConfig {
  int beta_scenario = 2;                // 1, 2, 3
  double h = 0.0;                       // transferability radius
  std::vector<int> transferable_ids;    // 1-based source indexes in S
  int L = 0;                            // total sources
  int n0 = 150;
  int nl = 100;
  int grid_points = 50;
  double noise_sd = 0.25;
  KernelSpec target_cov{MaternKernel{MaternNu::Half, 1.0}, {}};
  KernelSpec source_cov{MaternKernel{MaternNu::ThreeHalves, 1.0}, {}};
  NegativeVariant negative_variant = NegativeVariant::OrnsteinUhlenbeck;
  int series_truncation = 50;
  std::uint64_t seed = 0;
};

void validate_scenario(const ScenarioConfig& c);

struct GeneratedScenario {
  TaskDataset target;
  std::vector<TaskDataset> sources;
  BetaEstimate true_target_beta;
  std::vector<BetaEstimate> true_source_betas;
  ScenarioConfig config;
};

/// GP draws on a grid via Cholesky of the covariance matrix with an
/// escalating jitter ladder. `amplitude` scales the covariance (0 gives
/// jitter-only draws hugging the mean).
std::vector<Curve> sample_gp(MeanFn mean, const KernelSpec& cov,
                             const VectorXd& grid, int n, Rng& rng,
                             double amplitude = 1.0);

VectorXd mean_values(MeanFn mean, const VectorXd& grid);

/// The three target slopes: (1) sum 4 sqrt(2) (-1)^(k-1) k^-2 psi_k,
/// (2) 4 cos(3 pi t), (3) 4 cos(3 pi t) + 4 sin(3 pi t).
BetaEstimate target_beta(int scenario, const VectorXd& grid, int truncation);

/// sum_k u_k (sqrt(12) h / (pi k^2)) psi_k on the grid, for given u values
/// (the test hook); transferable_source_beta draws u ~ U[-1,1] itself.
VectorXd source_perturbation(const VectorXd& grid, double h,
                             const VectorXd& u_values);

BetaEstimate transferable_source_beta(const BetaEstimate& target, double h,
                                      Rng& rng, int truncation);

GeneratedScenario generate_scenario(const ScenarioConfig& config);

}  // namespace tlflr
