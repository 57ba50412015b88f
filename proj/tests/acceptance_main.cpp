// Acceptance suite: one pass/fail line per criterion. Run with no arguments
// for the full battery, `--criterion N` for a single one, `--list` to see
// names. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "tlflr/io.hpp"
#include "tlflr/parallel.hpp"
#include "tlflr/risk.hpp"

using namespace tlflr;

namespace {

constexpr double kPi = 3.141592653589793;

KernelSpec paper_kernel() { return {EigenExpansionKernel{2.0, 50}, {}}; }

ExperimentConfig paper_config(std::uint64_t seed) {
  ExperimentConfig ec;
  ec.scenario.beta_scenario = 2;
  ec.scenario.n0 = 150;
  ec.scenario.nl = 100;
  ec.scenario.grid_points = 50;
  ec.scenario.noise_sd = 0.25;
  ec.kernel = paper_kernel();
  ec.lambda_rule.kind = LambdaRule::Kind::Theorem1;
  ec.lambda_rule.r = 2.0;
  ec.lambda_rule.pre_c1 = 0.2;
  ec.lambda_rule.pre_c2 = 0.2;
  ec.n_mc = 1000;
  ec.threads = static_cast<int>(default_threads());
  ec.M = 20;
  ec.eig_grid_size = 256;
  ec.seed = seed;
  return ec;
}

TaskDataset random_task(Rng& rng, int n, const std::string& id, int d = 20) {
  VectorXd g = linspace(0.0, 1.0, d);
  TaskDataset task;
  task.task_id = id;
  task.responses.resize(n);
  for (int i = 0; i < n; ++i) {
    VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = rng.uniform(-1.0, 1.0);
    task.curves.push_back({g, v});
    task.responses[i] = rng.uniform(-1.0, 1.0);
  }
  return task;
}

/// Joint quadratic solve of the ridge objective in (alpha, c).
std::pair<double, VectorXd> qp_oracle(const MatrixXd& sigma, const VectorXd& y,
                                      double lambda) {
  const Eigen::Index n = y.size();
  MatrixXd b(n, n + 1);
  b.col(0) = VectorXd::Ones(n);
  b.rightCols(n) = sigma;
  MatrixXd q = b.transpose() * b / static_cast<double>(n);
  q.bottomRightCorner(n, n) += lambda * sigma;
  VectorXd theta = q.fullPivLu().solve(b.transpose() * y /
                                       static_cast<double>(n));
  return {theta[0], theta.tail(n)};
}

// ---- criterion bodies --------------------------------------------------

bool criterion_oracle_equivalence(std::ostream& log) {
  Rng rng(1001);
  KernelSpec k{MaternKernel{MaternNu::Half, 1.0}, {}};
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const bool pooled = rep % 2 == 1;
    TaskDataset target = random_task(rng, 2 + static_cast<int>(rng.below(2)),
                                     "t");
    const double lambda = 0.05 + rng.uniform01() * 0.4;
    MatrixXd sigma;
    VectorXd y;
    double alpha_fit;
    VectorXd coef_fit;
    if (pooled) {
      TaskDataset src = random_task(
          rng, 2 + static_cast<int>(rng.below(2)), "s");
      sigma = rkhs_gram({&target, &src}, k);
      y.resize(target.size() + src.size());
      y << target.responses, src.responses;
      TransferFit fit = fit_tlflr(target, {&src}, k, lambda, 0.1);
      alpha_fit = fit.transfer_fit.intercept;
      coef_fit = fit.transfer_fit.coef;
    } else {
      sigma = rkhs_gram(target, k);
      y = target.responses;
      RidgeFit fit = fit_oflr(target, k, lambda);
      alpha_fit = fit.intercept;
      coef_fit = fit.coef;
    }
    auto [alpha_star, c_star] = qp_oracle(sigma, y, lambda);
    worst = std::max(worst, std::abs(alpha_fit - alpha_star));
    worst = std::max(worst, (coef_fit - c_star).cwiseAbs().maxCoeff());
  }
  log << "max |fit - oracle| = " << worst << " over 20 instances";
  return worst < 1e-6;
}

bool criterion_debias_equivalence(std::ostream& log) {
  Rng rng(1002);
  KernelSpec k{MaternKernel{MaternNu::Half, 1.0}, {}};
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    TaskDataset target = random_task(rng, 4 + static_cast<int>(rng.below(4)),
                                     "t");
    TaskDataset src = random_task(rng, 3 + static_cast<int>(rng.below(4)),
                                  "s");
    const double l1 = 0.05 + rng.uniform01() * 0.2;
    const double l2 = 0.05 + rng.uniform01() * 0.2;
    TransferFit fit = fit_tlflr(target, {&src}, k, l1, l2);
    const Eigen::Index n0 = target.size();

    VectorXd p_s = predict_batch(fit.transfer_fit, target.curves).array() -
                   fit.transfer_fit.intercept;
    MatrixXd sigma00 = rkhs_gram(target, k);
    MatrixXd b(n0, n0 + 1);
    b.col(0) = VectorXd::Ones(n0);
    b.rightCols(n0) = sigma00;
    MatrixXd q = b.transpose() * b / static_cast<double>(n0);
    q.bottomRightCorner(n0, n0) += l2 * sigma00;
    VectorXd theta =
        q.fullPivLu().solve(b.transpose() * (target.responses - p_s) /
                            static_cast<double>(n0));

    RidgeFit reform;
    reform.coef = theta.tail(n0);
    reform.curves = std::make_shared<const std::vector<Curve>>(target.curves);
    reform.kernel = k;
    BetaEstimate delta = evaluate_beta(reform, fit.combined_beta.grid);
    BetaEstimate bs = evaluate_beta(fit.transfer_fit, fit.combined_beta.grid);
    worst = std::max(worst, (fit.combined_beta.values - bs.values -
                             delta.values)
                                .cwiseAbs()
                                .maxCoeff());
    worst = std::max(worst, std::abs(fit.combined_intercept - theta[0]));
  }
  log << "max sup-norm gap = " << worst << " over 10 instances";
  return worst < 1e-6;
}

bool criterion_mc_vs_analytic(std::ostream& log) {
  PredictorLaw law{MeanFn::SinPi, {MaternKernel{MaternNu::Half, 1.0}, {}}};
  VectorXd grid = linspace(0.0, 1.0, 50);
  Rng maker(1003);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    VectorXd bv(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      bv[i] = maker.uniform(-1.0, 1.0);
    BetaEstimate est{grid, bv};
    BetaEstimate truth{grid, VectorXd::Zero(grid.size())};
    const double da = maker.uniform(-0.5, 0.5);
    const double analytic = excess_risk_analytic(est, da, truth, 0.0, law);
    Rng rng(2000 + rep);
    const double mc = excess_risk_mc(est, da, truth, 0.0, law, 100000, rng);
    worst = std::max(worst, std::abs(mc / analytic - 1.0));
  }
  log << "max relative gap = " << worst << " at n_mc = 1e5 over 5 instances";
  return worst < 0.01;
}

bool criterion_heatmap_corner(std::ostream& log) {
  ExperimentConfig ec = paper_config(42);
  ec.reps = 20;
  ExperimentResult res = run_heatmap_experiment({1.0, 40.0}, {1, 15}, ec);
  double good = std::nan(""), bad = std::nan("");
  for (const auto& r : res.rows) {
    if (r.method != "relative_excess_risk") continue;
    if (r.h == 1.0 && r.s_size == 15) good = r.mean;
    if (r.h == 40.0 && r.s_size == 1) bad = r.mean;
  }
  log << "rel risk (h=1,|S|=15) = " << good << ", (h=40,|S|=1) = " << bad;
  return good < 0.8 && good < bad;
}

bool criterion_atl_robustness(std::ostream& log) {
  ExperimentConfig ec = paper_config(43);
  ec.reps = 50;
  ec.scenario.L = 20;
  ec.scenario.h = 1.0;
  ExperimentResult res =
      run_mixture_experiment({0}, {"oflr", "atlflr_star"}, ec);
  double oflr = 0, star = 0;
  for (const auto& r : res.rows) {
    if (r.method == "oflr") oflr = r.mean;
    if (r.method == "atlflr_star") star = r.mean;
  }
  log << "S = {}: star = " << star << ", oflr = " << oflr
      << ", ratio = " << star / oflr;
  return star <= 1.2 * oflr && res.star_oracle_violations == 0;
}

bool criterion_atl_oracle_tracking(std::ostream& log) {
  ExperimentConfig ec = paper_config(44);
  ec.reps = 50;
  ec.scenario.L = 20;
  ec.scenario.h = 1.0;
  ExperimentResult res =
      run_mixture_experiment({20}, {"tlflr_true_s", "atlflr_star"}, ec);
  double tl = 0, star = 0;
  for (const auto& r : res.rows) {
    if (r.method == "tlflr_true_s") tl = r.mean;
    if (r.method == "atlflr_star") star = r.mean;
  }
  log << "|S| = 20: star = " << star << ", tlflr(true S) = " << tl
      << ", ratio = " << star / tl;
  return star <= 1.3 * tl && res.star_oracle_violations == 0;
}

bool criterion_candidate_consistency(std::ostream& log) {
  const int reps = 50;
  std::vector<int> hits(reps, 0);
  ExperimentConfig base = paper_config(45);
  parallel_for(reps, base.threads, [&](int rep) {
    ScenarioConfig sc = base.scenario;
    sc.L = 20;
    sc.h = 1.0;
    sc.negative_variant = NegativeVariant::OrnsteinUhlenbeck;
    sc.seed = derive_seed(base.seed, "consistency",
                          static_cast<std::uint64_t>(rep));
    {
      std::vector<int> ids(sc.L);
      for (int l = 0; l < sc.L; ++l) ids[l] = l + 1;
      Rng rng(derive_seed(sc.seed, "subset"));
      rng.shuffle(ids);
      sc.transferable_ids.assign(ids.begin(), ids.begin() + 10);
      std::sort(sc.transferable_ids.begin(), sc.transferable_ids.end());
    }
    GeneratedScenario gen = generate_scenario(sc);
    auto [half_i, half_ic] = split_target(gen.target,
                                          derive_seed(sc.seed, "atlflr"));
    (void)half_ic;
    std::vector<const TaskDataset*> sources;
    for (const auto& s : gen.sources) sources.push_back(&s);
    EigenSystem eig = mercer_eigensystem(base.kernel, base.eig_grid_size,
                                         base.M);
    CandidateSets cands = build_candidate_sets(half_i, sources, base.kernel,
                                               eig, base.M, base.lambda_rule);
    std::vector<int> truth;  // 0-based source indexes
    for (int id : sc.transferable_ids) truth.push_back(id - 1);
    for (const auto& set : cands.sets) {
      if (set == truth) {
        hits[rep] = 1;
        break;
      }
    }
  });
  int total = 0;
  for (int h : hits) total += h;
  log << "recovered S in " << total << "/" << reps << " replications";
  return total >= 45;  // >= 90%
}

bool criterion_star_oracle_inequality(std::ostream& log) {
  // Dedicated batch: small ATL-FLR fits plus random dictionaries.
  int violations = 0;
  ExperimentConfig base = paper_config(46);
  for (int rep = 0; rep < 25; ++rep) {
    ScenarioConfig sc = base.scenario;
    sc.n0 = 24;
    sc.nl = 14;
    sc.grid_points = 30;
    sc.L = 4;
    sc.h = 1.0;
    sc.transferable_ids = {1, 2};
    sc.seed = derive_seed(4600, "soi", static_cast<std::uint64_t>(rep));
    GeneratedScenario gen = generate_scenario(sc);
    std::vector<const TaskDataset*> sources;
    for (const auto& s : gen.sources) sources.push_back(&s);
    AggregateOptions opts;
    opts.M = 10;
    opts.eig_grid_size = 128;
    AggregationResult res =
        fit_atlflr(gen.target, sources, base.kernel, base.lambda_rule,
                   {AggregationMethod::Kind::SparseStar, 0.0}, sc.seed, opts);
    if (res.aggregate_holdout_risk > res.holdout_risks.minCoeff() + 1e-12)
      ++violations;
  }
  Rng rng(1008);
  VectorXd grid = linspace(0.0, 1.0, 5);
  for (int rep = 0; rep < 100; ++rep) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const int n = 3 + static_cast<int>(rng.below(12));
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.uniform(-2.0, 2.0);
    std::vector<DictionaryEntry> dict;
    for (int l = 0; l < m; ++l) {
      VectorXd p(n);
      for (int i = 0; i < n; ++i) p[i] = rng.uniform(-2.0, 2.0);
      dict.push_back({0.0, {grid, VectorXd::Zero(5)}, p});
    }
    AggregationResult res = sparse_aggregate_star(dict, y);
    if (res.aggregate_holdout_risk > res.holdout_risks.minCoeff() + 1e-12)
      ++violations;
  }
  log << violations << " violations over 125 aggregation runs";
  return violations == 0;
}

bool criterion_star_vs_exp_weights(std::ostream& log) {
  ExperimentConfig ec = paper_config(47);
  ec.reps = 50;
  ec.scenario.L = 20;
  ec.scenario.h = 1.0;
  ec.temperature = 10.0;
  ExperimentResult res =
      run_mixture_experiment({0, 2}, {"atlflr_star", "atlflr_ew"}, ec);
  double star0 = 0, ew0 = 0, star2 = 0, ew2 = 0;
  for (const auto& r : res.rows) {
    if (r.s_size == 0 && r.method == "atlflr_star") star0 = r.mean;
    if (r.s_size == 0 && r.method == "atlflr_ew") ew0 = r.mean;
    if (r.s_size == 2 && r.method == "atlflr_star") star2 = r.mean;
    if (r.s_size == 2 && r.method == "atlflr_ew") ew2 = r.mean;
  }
  log << "|S|=0: star " << star0 << " vs ew(T=10) " << ew0 << "; |S|=2: star "
      << star2 << " vs ew(T=10) " << ew2;
  return star0 <= ew0 && star2 <= ew2 && res.star_oracle_violations == 0;
}

bool criterion_rate_slope(std::ostream& log) {
  ExperimentConfig ec = paper_config(48);
  ec.reps = 30;
  ExperimentResult res = run_rate_slope_experiment({100, 200, 400, 800}, ec);
  log << "log-log slope = " << res.slope;
  return res.slope >= -1.0 && res.slope <= -0.4;
}

bool criterion_property_suites(std::ostream& log) {
  int failures = 0;
  std::ostringstream detail;

  std::vector<KernelSpec> menu = {
      paper_kernel(),
      {MaternKernel{MaternNu::Half, 1.0}, {}},
      {MaternKernel{MaternNu::ThreeHalves, 0.8}, {}},
      {MaternKernel{MaternNu::FiveHalves, 1.2}, {}},
      {GaussianKernel{0.7}, {}},
      {PeriodicKernel{1.0, 1.0}, {}},
      {OrnsteinUhlenbeckKernel{15.0}, {}},
      {WienerKernel{}, {}}};

  {  // Symmetry: >= 100 random pairs per kernel, exact.
    Rng rng(1101);
    int bad = 0;
    for (const auto& k : menu)
      for (int i = 0; i < 120; ++i) {
        const double s = rng.uniform01(), t = rng.uniform01();
        if (eval(k, s, t) != eval(k, t, s)) ++bad;
      }
    if (bad) detail << " symmetry=" << bad;
    failures += bad;
  }

  {  // PSD: >= 100 random grids across the menu.
    Rng rng(1102);
    int bad = 0;
    for (int i = 0; i < 112; ++i) {
      const auto& k = menu[i % menu.size()];
      const int n = 2 + static_cast<int>(rng.below(29));
      std::vector<double> pts(n);
      for (auto& p : pts) p = rng.uniform01();
      std::sort(pts.begin(), pts.end());
      for (int j = 1; j < n; ++j)
        if (pts[j] <= pts[j - 1]) pts[j] = std::min(pts[j - 1] + 1e-9, 1.0);
      VectorXd g(n);
      for (int j = 0; j < n; ++j) g[j] = pts[j];
      MatrixXd gram = gram_cross(k, g, g);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
      if (es.eigenvalues().minCoeff() < -1e-8 * gram.trace() - 1e-14) ++bad;
    }
    if (bad) detail << " psd=" << bad;
    failures += bad;
  }

  {  // Trapezoid convergence on 100 random smooth integrands.
    Rng rng(1103);
    int bad = 0;
    for (int c = 0; c < 100; ++c) {
      std::vector<double> coefs(4);
      for (auto& a : coefs) a = rng.uniform(-1.0, 1.0);
      auto f = [&](double t) {
        double acc = coefs[0];
        for (int j = 1; j < 4; ++j)
          acc += coefs[j] * std::cos(kPi * j * t);
        return acc + std::exp(0.5 * t);
      };
      auto quad = [&](int n) {
        VectorXd g = linspace(0.0, 1.0, n);
        VectorXd w = quad_weights(g);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += w[i] * f(g[i]);
        return acc;
      };
      const double ref = quad(20001);
      const double e1 = std::abs(quad(33) - ref);
      const double e2 = std::abs(quad(65) - ref);
      if (e1 / e2 < 3.0) ++bad;
    }
    if (bad) detail << " trapezoid=" << bad;
    failures += bad;
  }

  {  // Nystrom vs analytic eigenpairs across 100 random decays.
    Rng rng(1104);
    int bad = 0;
    for (int c = 0; c < 100; ++c) {
      const double decay = 1.5 + rng.uniform01() * 1.5;
      KernelSpec k{EigenExpansionKernel{decay, 50}, {}};
      EigenSystem nys = nystrom_eigensystem(k, 256, 5);
      if (nys.count < 5) {
        ++bad;
        continue;
      }
      for (int j = 0; j < 5; ++j) {
        const double ana = std::pow(static_cast<double>(j + 1), -decay);
        if (std::abs(nys.eigenvalues[j] / ana - 1.0) > 1e-3) ++bad;
      }
    }
    if (bad) detail << " nystrom=" << bad;
    failures += bad;
  }

  {  // Truncated-distance seminorm properties on 100 random pairs.
    Rng rng(1105);
    EigenSystem eig = mercer_eigensystem(paper_kernel(), 201, 20);
    int bad = 0;
    for (int c = 0; c < 100; ++c) {
      VectorXd va = VectorXd::Zero(eig.grid.size());
      VectorXd vb = VectorXd::Zero(eig.grid.size());
      for (int j = 1; j <= 10; ++j) {
        va += rng.uniform(-1.0, 1.0) * cosine_basis(j, eig.grid);
        vb += rng.uniform(-1.0, 1.0) * cosine_basis(j, eig.grid);
      }
      BetaEstimate a{eig.grid, va}, b{eig.grid, vb};
      BetaEstimate zero{eig.grid, VectorXd::Zero(eig.grid.size())};
      const double dab = truncated_rkhs_distance(a, b, eig, 20);
      const double dba = truncated_rkhs_distance(b, a, eig, 20);
      if (std::abs(dab - dba) > 1e-10 * (1.0 + dab)) ++bad;
      if (truncated_rkhs_distance(a, a, eig, 20) != 0.0) ++bad;
      BetaEstimate scaled{eig.grid, 3.0 * (va - vb)};
      const double dscaled = truncated_rkhs_distance(scaled, zero, eig, 20);
      if (std::abs(dscaled - 9.0 * dab) > 1e-8 * (1.0 + dscaled)) ++bad;
      double prev = 0.0;
      for (int m : {1, 5, 10, 20}) {
        const double d = truncated_rkhs_distance(a, b, eig, m);
        if (d < prev - 1e-12) ++bad;
        prev = d;
      }
    }
    if (bad) detail << " seminorm=" << bad;
    failures += bad;
  }

  {  // Simplex invariants for both aggregators on 100 random dictionaries.
    Rng rng(1106);
    VectorXd grid = linspace(0.0, 1.0, 4);
    int bad = 0;
    for (int c = 0; c < 100; ++c) {
      const int m = 1 + static_cast<int>(rng.below(7));
      const int n = 3 + static_cast<int>(rng.below(9));
      VectorXd y(n);
      for (int i = 0; i < n; ++i) y[i] = rng.uniform(-2.0, 2.0);
      std::vector<DictionaryEntry> dict;
      for (int l = 0; l < m; ++l) {
        VectorXd p(n);
        for (int i = 0; i < n; ++i) p[i] = rng.uniform(-2.0, 2.0);
        dict.push_back({0.0, {grid, VectorXd::Zero(4)}, p});
      }
      auto star = sparse_aggregate_star(dict, y);
      if (star.weights.minCoeff() < 0.0 ||
          std::abs(star.weights.sum() - 1.0) > 1e-12 ||
          star.support.size() > 2)
        ++bad;
      auto ew = exp_weights_aggregate(dict, y, 0.5 + rng.uniform01() * 5.0);
      if (ew.weights.minCoeff() < 0.0 ||
          std::abs(ew.weights.sum() - 1.0) > 1e-12)
        ++bad;
    }
    if (bad) detail << " simplex=" << bad;
    failures += bad;
  }

  log << (failures == 0 ? "all property batteries clean"
                        : "failures:" + detail.str());
  return failures == 0;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "oracle-equivalence", criterion_oracle_equivalence},
      {2, "debias-equivalence", criterion_debias_equivalence},
      {3, "analytic-vs-mc-risk", criterion_mc_vs_analytic},
      {4, "heatmap-corner-ordering", criterion_heatmap_corner},
      {5, "atlflr-robustness", criterion_atl_robustness},
      {6, "atlflr-oracle-tracking", criterion_atl_oracle_tracking},
      {7, "candidate-set-consistency", criterion_candidate_consistency},
      {8, "star-empirical-oracle-inequality", criterion_star_oracle_inequality},
      {9, "star-vs-exp-weights", criterion_star_vs_exp_weights},
      {10, "rate-slope-sanity", criterion_rate_slope},
      {11, "kernel-quadrature-invariants", criterion_property_suites},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = -1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : criteria())
        std::cout << c.id << " " << c.name << "\n";
      return 0;
    }
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[++i]);
  }

  int failures = 0;
  for (const auto& c : criteria()) {
    if (only > 0 && c.id != only) continue;
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(log);
    } catch (const std::exception& e) {
      log << "exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%2d] %s %s: %s (%.1f s)\n", c.id, ok ? "PASS" : "FAIL",
                c.name, log.str().c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
