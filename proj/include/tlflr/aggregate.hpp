#pragma once

#include "tlflr/transfer.hpp"

namespace tlflr {

/// Nested candidate source sets ranked by the truncated RKHS distance.
struct CandidateSets {
  std::vector<std::vector<int>> sets;  // sets[l] = indexes of the l closest
  std::vector<double> distances;       // Delta_l in original source order
  std::vector<int> ranking;            // source indexes, ascending distance
};

struct AggregationMethod {
  enum class Kind { SparseStar, ExpWeights } kind = Kind::SparseStar;
  double temperature = 1.0;
};

struct AggregationResult {
  VectorXd weights;  // simplex weights over the dictionary
  std::vector<int> support;
  BetaEstimate aggregated_beta;
  double aggregated_intercept = 0.0;
  AggregationMethod method;
  // Diagnostics.
  VectorXd holdout_risks;            // per dictionary member
  double aggregate_holdout_risk = 0.0;
  CandidateSets candidates;          // filled by fit_atlflr
};

/// Seeded split into (I, I^c) with |I| = floor(n0/2). Requires n0 >= 4.
std::pair<TaskDataset, TaskDataset> split_target(const TaskDataset& target,
                                                 std::uint64_t seed);

/// OFLR on half_I and on each source, then Delta_l rankings and nested sets
/// S_0 = {} through S_L; ties break by source index.
CandidateSets build_candidate_sets(const TaskDataset& half_I,
                                   const std::vector<const TaskDataset*>& sources,
                                   const KernelSpec& kernel,
                                   const EigenSystem& eig, int M,
                                   const LambdaRule& lambda_rule);

/// Dictionary member as the aggregation procedures see it: an intercept, a
/// slope on the shared evaluation grid, and its predictions on the holdout.
struct DictionaryEntry {
  double intercept = 0.0;
  BetaEstimate beta;
  VectorXd holdout_pred;
};

/// Two-stage star aggregation under squared loss: empirical-risk minimizer
/// f*, then the best point on the segments [f, f*] (closed-form theta,
/// clamped to [0,1]). At most two nonzero weights; never worse on the
/// holdout than the best single member.
AggregationResult sparse_aggregate_star(
    const std::vector<DictionaryEntry>& dictionary, const VectorXd& holdout_y);

/// w_j proportional to exp(-n R_j / T).
AggregationResult exp_weights_aggregate(
    const std::vector<DictionaryEntry>& dictionary, const VectorXd& holdout_y,
    double temperature);

struct AggregateOptions {
  int M = 20;
  int eig_grid_size = 256;
  VectorXd eval_grid;  // empty -> default 201-point grid
};

/// ATL-FLR: split the target, rank sources on half I, fit TL-FLR per nested
/// candidate set with target = half I, aggregate on half I^c.
AggregationResult fit_atlflr(const TaskDataset& target,
                             const std::vector<const TaskDataset*>& sources,
                             const KernelSpec& kernel,
                             const LambdaRule& lambda_rule,
                             AggregationMethod method, std::uint64_t seed,
                             const AggregateOptions& opts = {});

/// Same dictionary, several aggregation methods at once (the dictionary of
/// TL-FLR fits dominates the cost and is shared).
std::vector<AggregationResult> fit_atlflr_multi(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& lambda_rule,
    const std::vector<AggregationMethod>& methods, std::uint64_t seed,
    const AggregateOptions& opts = {});

}  // namespace tlflr
