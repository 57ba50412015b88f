#include "tlflr/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>

#include "tlflr/parallel.hpp"
#include "tlflr/rng.hpp"

namespace tlflr {

namespace {

/// Common grid plus the delta-slope between an estimate and the truth.
struct RiskDelta {
  VectorXd grid, weights, delta_beta;
  double delta_alpha;
};

RiskDelta make_delta(const BetaEstimate& est_beta, double est_alpha,
                     const BetaEstimate& true_beta, double true_alpha) {
  RiskDelta d;
  d.grid = true_beta.grid;
  d.weights = quad_weights(d.grid);
  VectorXd est =
      (est_beta.grid.size() == true_beta.grid.size() &&
       est_beta.grid == true_beta.grid)
          ? est_beta.values
          : interp_linear(est_beta, d.grid);
  d.delta_beta = est - true_beta.values;
  d.delta_alpha = est_alpha - true_alpha;
  return d;
}

}  // namespace

double excess_risk_mc(const BetaEstimate& est_beta, double est_alpha,
                      const BetaEstimate& true_beta, double true_alpha,
                      const PredictorLaw& law, int n_mc, Rng& rng) {
  if (n_mc < 1) throw ArgumentError("excess_risk_mc: n_mc >= 1");
  RiskDelta d = make_delta(est_beta, est_alpha, true_beta, true_alpha);

  MatrixXd c = kernel_matrix(law.cov, d.grid, d.grid);
  c = ((c + c.transpose()) * 0.5).eval();
  const double maxdiag = std::max(c.diagonal().maxCoeff(), 1.0);
  double jitter = 1e-10 * maxdiag;
  Eigen::LLT<MatrixXd> llt;
  for (;;) {
    MatrixXd a = c;
    a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
    if (jitter > 1e-6 * maxdiag * 1.000001)
      throw NumericalError("excess_risk_mc: covariance factorization failed");
  }

  const VectorXd mu = mean_values(law.mean, d.grid);
  const VectorXd wdb = d.weights.cwiseProduct(d.delta_beta);
  const double base = d.delta_alpha + mu.dot(wdb);
  // <X, db>_w = base + (L' w.*db) . z for X = mu + L z.
  const VectorXd u = MatrixXd(llt.matrixL()).transpose() * wdb;

  double acc = 0.0;
  VectorXd z(d.grid.size());
  for (int i = 0; i < n_mc; ++i) {
    for (Eigen::Index g = 0; g < z.size(); ++g) z[g] = rng.normal();
    const double e = base + u.dot(z);
    acc += e * e;
  }
  return acc / n_mc;
}

double excess_risk_analytic(const BetaEstimate& est_beta, double est_alpha,
                            const BetaEstimate& true_beta, double true_alpha,
                            const PredictorLaw& law) {
  RiskDelta d = make_delta(est_beta, est_alpha, true_beta, true_alpha);
  MatrixXd c = kernel_matrix(law.cov, d.grid, d.grid);
  const VectorXd mu = mean_values(law.mean, d.grid);
  const VectorXd wdb = d.weights.cwiseProduct(d.delta_beta);
  const double mean_term = d.delta_alpha + mu.dot(wdb);
  return wdb.dot(c * wdb) + mean_term * mean_term;
}

double relative_excess_risk(double method_risk, double baseline_risk) {
  if (!(baseline_risk > 0))
    throw ArgumentError("relative_excess_risk: baseline must be positive");
  return method_risk / baseline_risk;
}

namespace {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

std::string hash_config(const ExperimentConfig& c, const std::string& tag) {
  std::ostringstream os;
  os << tag << '|' << c.scenario.beta_scenario << '|' << c.scenario.h << '|'
     << c.scenario.L << '|' << c.scenario.n0 << '|' << c.scenario.nl << '|'
     << c.scenario.grid_points << '|' << c.scenario.noise_sd << '|'
     << kernel_name(c.kernel) << '|' << c.n_mc << '|' << c.reps << '|'
     << c.M << '|' << c.temperature << '|' << c.seed;
  std::uint64_t h = hash_str(os.str());
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

PredictorLaw target_law(const ScenarioConfig& sc) {
  return {MeanFn::SinPi, sc.target_cov};
}

}  // namespace

ExperimentResult run_heatmap_experiment(const std::vector<double>& h_values,
                                        const std::vector<int>& s_sizes,
                                        const ExperimentConfig& config) {
  if (h_values.empty() || s_sizes.empty())
    throw ArgumentError("heatmap: empty condition grid");
  ExperimentResult result;
  result.experiment = "heatmap";
  result.seed = config.seed;
  result.config_hash = hash_config(config, "heatmap");

  struct Cell {
    double h;
    int s;
    std::vector<double> oflr, tlflr, ratio;
  };
  std::vector<Cell> cells;
  for (double h : h_values)
    for (int s : s_sizes) cells.push_back({h, s, {}, {}, {}});
  for (auto& cell : cells) {
    cell.oflr.resize(config.reps);
    cell.tlflr.resize(config.reps);
    cell.ratio.resize(config.reps);
  }

  struct Job {
    int cell, rep;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int r = 0; r < config.reps; ++r) jobs.push_back({c, r});

  parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int j) {
    const auto [ci, rep] = jobs[j];
    auto& cell = cells[ci];
    ScenarioConfig sc = config.scenario;
    sc.h = cell.h;
    sc.L = cell.s;
    sc.transferable_ids.clear();
    for (int l = 1; l <= cell.s; ++l) sc.transferable_ids.push_back(l);
    std::ostringstream label;
    label << "heatmap|" << cell.h << '|' << cell.s;
    sc.seed = derive_seed(config.seed, label.str(),
                          static_cast<std::uint64_t>(rep));
    GeneratedScenario gen = generate_scenario(sc);

    std::vector<const TaskDataset*> sources;
    for (const auto& s : gen.sources) sources.push_back(&s);
    const int n_pooled = sc.n0 + sc.L * sc.nl;
    const auto [l1, l2] = lambdas_for(config.lambda_rule, n_pooled, sc.n0);

    FitOptions opts;
    opts.eval_grid = gen.true_target_beta.grid;
    RidgeFit oflr = fit_oflr(gen.target, config.kernel, l2, opts);
    TransferFit tl = fit_tlflr(gen.target, sources, config.kernel, l1, l2,
                               TransferMode::Full, opts);

    const std::uint64_t mc_seed = derive_seed(sc.seed, "mc_eval");
    Rng rng1(mc_seed), rng2(mc_seed);
    const PredictorLaw law = target_law(sc);
    const double r_oflr =
        excess_risk_mc(oflr.beta_on_grid, oflr.intercept, gen.true_target_beta,
                       0.0, law, config.n_mc, rng1);
    const double r_tl =
        excess_risk_mc(tl.combined_beta, tl.combined_intercept,
                       gen.true_target_beta, 0.0, law, config.n_mc, rng2);
    cell.oflr[rep] = r_oflr;
    cell.tlflr[rep] = r_tl;
    cell.ratio[rep] = relative_excess_risk(r_tl, r_oflr);
  });

  for (const auto& cell : cells) {
    const MeanSe mo = mean_se(cell.oflr), mt = mean_se(cell.tlflr),
                 mr = mean_se(cell.ratio);
    result.rows.push_back(
        {cell.h, cell.s, -1, "oflr", mo.mean, mo.se, config.reps});
    result.rows.push_back(
        {cell.h, cell.s, -1, "tlflr", mt.mean, mt.se, config.reps});
    result.rows.push_back({cell.h, cell.s, -1, "relative_excess_risk",
                           mr.mean, mr.se, config.reps});
  }
  return result;
}

ExperimentResult run_mixture_experiment(const std::vector<int>& s_sizes,
                                        const std::vector<std::string>& methods,
                                        const ExperimentConfig& config) {
  if (s_sizes.empty()) throw ArgumentError("mixture: empty |S| list");
  for (const auto& m : methods)
    if (m != "oflr" && m != "tlflr_true_s" && m != "atlflr_star" &&
        m != "atlflr_ew")
      throw ArgumentError("mixture: unknown method " + m);

  ExperimentResult result;
  result.experiment = "mixture";
  result.seed = config.seed;
  result.config_hash = hash_config(config, "mixture");

  struct Cell {
    int s;
    std::map<std::string, std::vector<double>> risks;
  };
  std::vector<Cell> cells;
  for (int s : s_sizes) {
    Cell c;
    c.s = s;
    for (const auto& m : methods) c.risks[m].resize(config.reps);
    cells.push_back(std::move(c));
  }

  struct Job {
    int cell, rep;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int r = 0; r < config.reps; ++r) jobs.push_back({c, r});

  std::atomic<int> star_violations{0};
  parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int j) {
    const auto [ci, rep] = jobs[j];
    auto& cell = cells[ci];
    ScenarioConfig sc = config.scenario;
    if (static_cast<int>(cell.s) > sc.L)
      throw ArgumentError("mixture: |S| exceeds L");
    std::ostringstream label;
    label << "mixture|" << cell.s;
    sc.seed = derive_seed(config.seed, label.str(),
                          static_cast<std::uint64_t>(rep));
    sc.h = config.scenario.h;

    // Random transferable subset of the requested size.
    {
      std::vector<int> ids(sc.L);
      for (int l = 0; l < sc.L; ++l) ids[l] = l + 1;
      Rng rng(derive_seed(sc.seed, "subset"));
      rng.shuffle(ids);
      sc.transferable_ids.assign(ids.begin(), ids.begin() + cell.s);
      std::sort(sc.transferable_ids.begin(), sc.transferable_ids.end());
    }
    GeneratedScenario gen = generate_scenario(sc);

    std::vector<const TaskDataset*> sources;
    for (const auto& s : gen.sources) sources.push_back(&s);
    std::vector<const TaskDataset*> true_s;
    for (int id : sc.transferable_ids) true_s.push_back(sources[id - 1]);

    const PredictorLaw law = target_law(sc);
    const std::uint64_t mc_seed = derive_seed(sc.seed, "mc_eval");
    auto risk_of = [&](const BetaEstimate& beta, double alpha) {
      Rng rng(mc_seed);
      return excess_risk_mc(beta, alpha, gen.true_target_beta, 0.0, law,
                            config.n_mc, rng);
    };

    FitOptions opts;
    opts.eval_grid = gen.true_target_beta.grid;

    std::vector<AggregationResult> agg;
    const bool want_star =
        cell.risks.count("atlflr_star") > 0;
    const bool want_ew = cell.risks.count("atlflr_ew") > 0;
    if (want_star || want_ew) {
      std::vector<AggregationMethod> ms;
      if (want_star) ms.push_back({AggregationMethod::Kind::SparseStar, 0.0});
      if (want_ew)
        ms.push_back({AggregationMethod::Kind::ExpWeights, config.temperature});
      AggregateOptions aopts;
      aopts.M = config.M;
      aopts.eig_grid_size = config.eig_grid_size;
      aopts.eval_grid = gen.true_target_beta.grid;
      agg = fit_atlflr_multi(gen.target, sources, config.kernel,
                             config.lambda_rule, ms,
                             derive_seed(sc.seed, "atlflr"), aopts);
      if (want_star &&
          agg[0].aggregate_holdout_risk >
              agg[0].holdout_risks.minCoeff() + 1e-12)
        star_violations.fetch_add(1);
    }

    for (auto& [name, values] : cell.risks) {
      if (name == "oflr") {
        const auto [l1, l2] = lambdas_for(config.lambda_rule, sc.n0, sc.n0);
        (void)l1;
        RidgeFit f = fit_oflr(gen.target, config.kernel, l2, opts);
        values[rep] = risk_of(f.beta_on_grid, f.intercept);
      } else if (name == "tlflr_true_s") {
        const int n_pooled =
            sc.n0 + static_cast<int>(true_s.size()) * sc.nl;
        const auto [l1, l2] = lambdas_for(config.lambda_rule, n_pooled, sc.n0);
        TransferFit f = fit_tlflr(gen.target, true_s, config.kernel, l1, l2,
                                  TransferMode::Full, opts);
        values[rep] = risk_of(f.combined_beta, f.combined_intercept);
      } else if (name == "atlflr_star") {
        values[rep] =
            risk_of(agg[0].aggregated_beta, agg[0].aggregated_intercept);
      } else {  // atlflr_ew
        const auto& r = agg[want_star ? 1 : 0];
        values[rep] = risk_of(r.aggregated_beta, r.aggregated_intercept);
      }
    }
  });

  result.star_oracle_violations = star_violations.load();
  for (const auto& cell : cells) {
    for (const auto& m : methods) {
      const MeanSe ms = mean_se(cell.risks.at(m));
      result.rows.push_back(
          {config.scenario.h, cell.s, -1, m, ms.mean, ms.se, config.reps});
    }
  }
  return result;
}

double slope_loglog(const std::vector<double>& ns,
                    const std::vector<double>& risks) {
  if (ns.size() != risks.size() || ns.size() < 2)
    throw ArgumentError("slope_loglog: need >= 2 points");
  const double n = static_cast<double>(ns.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(ns[i]), y = std::log(risks[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

ExperimentResult run_rate_slope_experiment(const std::vector<int>& n_values,
                                           const ExperimentConfig& config) {
  if (n_values.size() < 2)
    throw ArgumentError("rate_slope: need >= 2 sample sizes");
  ExperimentResult result;
  result.experiment = "rate_slope";
  result.seed = config.seed;
  result.config_hash = hash_config(config, "rate_slope");

  std::vector<std::vector<double>> risks(n_values.size());
  for (auto& r : risks) r.resize(config.reps);

  struct Job {
    int cell, rep;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < static_cast<int>(n_values.size()); ++c)
    for (int r = 0; r < config.reps; ++r) jobs.push_back({c, r});

  parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int j) {
    const auto [ci, rep] = jobs[j];
    ScenarioConfig sc = config.scenario;
    sc.L = 0;
    sc.transferable_ids.clear();
    sc.n0 = n_values[ci];
    std::ostringstream label;
    label << "rate|" << n_values[ci];
    sc.seed = derive_seed(config.seed, label.str(),
                          static_cast<std::uint64_t>(rep));
    GeneratedScenario gen = generate_scenario(sc);
    const auto [l1, l2] = lambdas_for(config.lambda_rule, sc.n0, sc.n0);
    (void)l1;
    FitOptions opts;
    opts.eval_grid = gen.true_target_beta.grid;
    RidgeFit f = fit_oflr(gen.target, config.kernel, l2, opts);
    Rng rng(derive_seed(sc.seed, "mc_eval"));
    risks[ci][rep] =
        excess_risk_mc(f.beta_on_grid, f.intercept, gen.true_target_beta, 0.0,
                       target_law(sc), config.n_mc, rng);
  });

  std::vector<double> ns, means;
  for (std::size_t c = 0; c < n_values.size(); ++c) {
    const MeanSe ms = mean_se(risks[c]);
    result.rows.push_back(
        {std::nan(""), -1, n_values[c], "oflr", ms.mean, ms.se, config.reps});
    ns.push_back(static_cast<double>(n_values[c]));
    means.push_back(ms.mean);
  }
  result.slope = slope_loglog(ns, means);
  return result;
}

}  // namespace tlflr
