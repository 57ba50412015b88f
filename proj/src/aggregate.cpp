#include "tlflr/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tlflr/rng.hpp"

namespace tlflr {

std::pair<TaskDataset, TaskDataset> split_target(const TaskDataset& target,
                                                 std::uint64_t seed) {
  validate_dataset(target);
  const int n0 = static_cast<int>(target.size());
  if (n0 < 4) throw ArgumentError("split_target: need n0 >= 4");
  std::vector<int> order(n0);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "target_split"));
  rng.shuffle(order);
  const int half = n0 / 2;
  std::vector<int> in_i(order.begin(), order.begin() + half);
  std::vector<int> in_ic(order.begin() + half, order.end());
  std::sort(in_i.begin(), in_i.end());
  std::sort(in_ic.begin(), in_ic.end());

  auto take = [&](const std::vector<int>& idx) {
    TaskDataset d;
    d.task_id = target.task_id;
    d.responses.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      d.curves.push_back(target.curves[idx[k]]);
      d.responses[static_cast<Eigen::Index>(k)] = target.responses[idx[k]];
    }
    return d;
  };
  return {take(in_i), take(in_ic)};
}

CandidateSets build_candidate_sets(const TaskDataset& half_I,
                                   const std::vector<const TaskDataset*>& sources,
                                   const KernelSpec& kernel,
                                   const EigenSystem& eig, int M,
                                   const LambdaRule& lambda_rule) {
  if (sources.empty()) throw ArgumentError("build_candidate_sets: L >= 1");
  if (M < 1 || M > eig.count)
    throw ArgumentError("build_candidate_sets: M exceeds available eigenpairs");
  const int L = static_cast<int>(sources.size());

  FitOptions opts;
  opts.eval_grid = eig.grid;
  const int n_i = static_cast<int>(half_I.size());
  RidgeFit fit0 =
      fit_oflr(half_I, kernel, screening_lambda(lambda_rule, n_i), opts);

  CandidateSets out;
  out.distances.resize(L);
  for (int l = 0; l < L; ++l) {
    const int nl = static_cast<int>(sources[l]->size());
    RidgeFit fit_l = fit_oflr(*sources[l], kernel,
                              screening_lambda(lambda_rule, nl), opts);
    out.distances[l] = truncated_rkhs_distance(fit0.beta_on_grid,
                                               fit_l.beta_on_grid, eig, M);
  }

  out.ranking.resize(L);
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) {
    if (out.distances[a] != out.distances[b])
      return out.distances[a] < out.distances[b];
    return a < b;
  });

  out.sets.resize(L + 1);
  for (int l = 1; l <= L; ++l) {
    out.sets[l] = std::vector<int>(out.ranking.begin(),
                                   out.ranking.begin() + l);
    std::sort(out.sets[l].begin(), out.sets[l].end());
  }
  return out;
}

namespace {

VectorXd holdout_risks(const std::vector<DictionaryEntry>& dict,
                       const VectorXd& y) {
  VectorXd r(dict.size());
  for (std::size_t l = 0; l < dict.size(); ++l) {
    if (dict[l].holdout_pred.size() != y.size())
      throw ArgumentError("aggregate: holdout prediction length mismatch");
    r[static_cast<Eigen::Index>(l)] =
        (dict[l].holdout_pred - y).squaredNorm() /
        static_cast<double>(y.size());
  }
  return r;
}

void check_dictionary(const std::vector<DictionaryEntry>& dict,
                      const VectorXd& y) {
  if (dict.empty()) throw ArgumentError("aggregate: empty dictionary");
  if (y.size() == 0) throw ArgumentError("aggregate: empty holdout");
  for (const auto& d : dict)
    if (d.beta.grid.size() != dict.front().beta.grid.size() ||
        d.beta.grid != dict.front().beta.grid)
      throw ArgumentError("aggregate: dictionary betas on different grids");
}

}  // namespace

AggregationResult sparse_aggregate_star(
    const std::vector<DictionaryEntry>& dict, const VectorXd& y) {
  check_dictionary(dict, y);
  const int m = static_cast<int>(dict.size());
  const double n = static_cast<double>(y.size());
  VectorXd risks = holdout_risks(dict, y);

  int star = 0;
  for (int l = 1; l < m; ++l)
    if (risks[l] < risks[star]) star = l;

  // Stage 2: best point on the segments joining each member to f*.
  int best_l = star;
  double best_theta = 1.0;
  double best_risk = risks[star];
  const VectorXd& p_star = dict[star].holdout_pred;
  for (int l = 0; l < m; ++l) {
    if (l == star) continue;
    VectorXd d = p_star - dict[l].holdout_pred;
    const double dd = d.squaredNorm();
    double theta = 1.0;
    if (dd > 0.0)
      theta = std::clamp((y - dict[l].holdout_pred).dot(d) / dd, 0.0, 1.0);
    VectorXd pred = theta * p_star + (1.0 - theta) * dict[l].holdout_pred;
    const double risk = (pred - y).squaredNorm() / n;
    if (risk < best_risk) {
      best_risk = risk;
      best_l = l;
      best_theta = theta;
    }
  }

  AggregationResult out;
  out.method = {AggregationMethod::Kind::SparseStar, 0.0};
  out.weights = VectorXd::Zero(m);
  out.weights[star] += best_theta;
  out.weights[best_l] += 1.0 - best_theta;
  for (int l = 0; l < m; ++l)
    if (out.weights[l] > 0.0) out.support.push_back(l);
  out.aggregated_beta = {dict.front().beta.grid,
                         best_theta * dict[star].beta.values +
                             (1.0 - best_theta) * dict[best_l].beta.values};
  out.aggregated_intercept = best_theta * dict[star].intercept +
                             (1.0 - best_theta) * dict[best_l].intercept;
  out.holdout_risks = risks;
  out.aggregate_holdout_risk = best_risk;
  return out;
}

AggregationResult exp_weights_aggregate(
    const std::vector<DictionaryEntry>& dict, const VectorXd& y,
    double temperature) {
  check_dictionary(dict, y);
  if (!(temperature > 0))
    throw ArgumentError("exp_weights: temperature must be positive");
  const int m = static_cast<int>(dict.size());
  const double n = static_cast<double>(y.size());
  VectorXd risks = holdout_risks(dict, y);

  double emax = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < m; ++l)
    if (std::isfinite(risks[l])) emax = std::max(emax, -n * risks[l] / temperature);
  if (!std::isfinite(emax))
    throw NumericalError("exp_weights: every dictionary risk is non-finite");

  VectorXd w = VectorXd::Zero(m);
  for (int l = 0; l < m; ++l)
    if (std::isfinite(risks[l]))
      w[l] = std::exp(-n * risks[l] / temperature - emax);
  w /= w.sum();

  AggregationResult out;
  out.method = {AggregationMethod::Kind::ExpWeights, temperature};
  out.weights = w;
  for (int l = 0; l < m; ++l)
    if (w[l] > 0.0) out.support.push_back(l);
  VectorXd beta = VectorXd::Zero(dict.front().beta.values.size());
  VectorXd pred = VectorXd::Zero(y.size());
  double intercept = 0.0;
  for (int l = 0; l < m; ++l) {
    if (w[l] == 0.0) continue;
    beta += w[l] * dict[l].beta.values;
    pred += w[l] * dict[l].holdout_pred;
    intercept += w[l] * dict[l].intercept;
  }
  out.aggregated_beta = {dict.front().beta.grid, beta};
  out.aggregated_intercept = intercept;
  out.holdout_risks = risks;
  out.aggregate_holdout_risk = (pred - y).squaredNorm() / n;
  return out;
}

std::vector<AggregationResult> fit_atlflr_multi(
    const TaskDataset& target, const std::vector<const TaskDataset*>& sources,
    const KernelSpec& kernel, const LambdaRule& lambda_rule,
    const std::vector<AggregationMethod>& methods, std::uint64_t seed,
    const AggregateOptions& opts) {
  validate_dataset(target);
  if (sources.empty())
    throw ArgumentError("fit_atlflr: needs at least one source");
  if (methods.empty()) throw ArgumentError("fit_atlflr: no methods");

  auto [half_i, half_ic] = split_target(target, seed);
  EigenSystem eig = mercer_eigensystem(kernel, opts.eig_grid_size, opts.M);
  const int m_eff = std::min(opts.M, eig.count);  // kernels with fast-decaying
                                                  // spectra cap the usable M
  CandidateSets cands = build_candidate_sets(half_i, sources, kernel, eig,
                                             m_eff, lambda_rule);

  FitOptions fit_opts;
  fit_opts.eval_grid = opts.eval_grid.size() > 0
                           ? opts.eval_grid
                           : default_eval_grid(kernel.domain);

  const int L = static_cast<int>(sources.size());
  std::vector<DictionaryEntry> dict(L + 1);
  for (int l = 0; l <= L; ++l) {
    std::vector<const TaskDataset*> subset;
    for (int idx : cands.sets[l]) subset.push_back(sources[idx]);
    const auto [l1, l2] =
        resolve_lambdas_tlflr(half_i, subset, kernel, lambda_rule, seed);
    TransferFit fit = fit_tlflr(half_i, subset, kernel, l1, l2,
                                TransferMode::Full, fit_opts);
    dict[l] = {fit.combined_intercept, fit.combined_beta,
               predict_batch(fit, half_ic.curves)};
  }

  std::vector<AggregationResult> results;
  for (const auto& method : methods) {
    AggregationResult r =
        method.kind == AggregationMethod::Kind::SparseStar
            ? sparse_aggregate_star(dict, half_ic.responses)
            : exp_weights_aggregate(dict, half_ic.responses,
                                    method.temperature);
    r.candidates = cands;
    results.push_back(std::move(r));
  }
  return results;
}

AggregationResult fit_atlflr(const TaskDataset& target,
                             const std::vector<const TaskDataset*>& sources,
                             const KernelSpec& kernel,
                             const LambdaRule& lambda_rule,
                             AggregationMethod method, std::uint64_t seed,
                             const AggregateOptions& opts) {
  return fit_atlflr_multi(target, sources, kernel, lambda_rule, {method},
                          seed, opts)
      .front();
}

}  // namespace tlflr
