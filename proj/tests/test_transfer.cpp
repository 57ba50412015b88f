#include <doctest.h>

#include <cmath>

#include "tlflr/risk.hpp"
#include "tlflr/rng.hpp"
#include "tlflr/transfer.hpp"

using namespace tlflr;

namespace {

KernelSpec test_kernel() { return {MaternKernel{MaternNu::Half, 1.0}, {}}; }

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

}  // namespace

TEST_CASE("default_lambdas: rate arithmetic") {
  auto [l1, l2] = default_lambdas(1000, 1000, 1.0, 1.0, 1.0);
  CHECK(l1 == doctest::Approx(1e-2).epsilon(1e-10));
  CHECK(l2 == doctest::Approx(1e-2).epsilon(1e-10));

  auto [s1, s2] = default_lambdas(1000, 1000, 1.0, 0.05, 0.05);
  CHECK(s1 == doctest::Approx(5e-4).epsilon(1e-10));
  (void)s2;

  auto [r1, r2] = default_lambdas(150, 150, 2.0, 1.0, 1.0);
  CHECK(r2 == doctest::Approx(std::pow(150.0, -0.8)).epsilon(1e-14));
  CHECK(r2 == doctest::Approx(0.0181541).epsilon(1e-4));
  (void)r1;

  CHECK_THROWS_AS(default_lambdas(0, 1, 1.0, 1.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(default_lambdas(1, 1, -1.0, 1.0, 1.0), ArgumentError);
}

TEST_CASE("fit_tlflr: zero responses everywhere give the zero estimator") {
  Rng rng(21);
  TaskDataset target = random_task(rng, 6, "target");
  TaskDataset src = random_task(rng, 5, "s1");
  target.responses.setZero();
  src.responses.setZero();
  TransferFit fit =
      fit_tlflr(target, {&src}, test_kernel(), 0.1, 0.1);
  CHECK(std::abs(fit.combined_intercept) < 1e-12);
  CHECK(fit.combined_beta.values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_tlflr: no sources plus huge debias penalty = transfer step") {
  Rng rng(22);
  TaskDataset target = random_task(rng, 10, "target");
  TransferFit fit = fit_tlflr(target, {}, test_kernel(), 0.08, 1e6);
  CHECK((fit.combined_beta.values - fit.transfer_fit.beta_on_grid.values)
            .cwiseAbs()
            .maxCoeff() < 1e-4);
  CHECK(fit.source_ids.empty());
}

TEST_CASE("fit_tlflr: transfer step matches the pooled quadratic oracle") {
  Rng rng(23);
  TaskDataset target = random_task(rng, 3, "target");
  TaskDataset src = random_task(rng, 3, "s1");
  KernelSpec k = test_kernel();
  const double l1 = 0.15;
  TransferFit fit = fit_tlflr(target, {&src}, k, l1, 0.1);

  MatrixXd sigma = rkhs_gram({&target, &src}, k);
  VectorXd y(6);
  y << target.responses, src.responses;
  MatrixXd b(6, 7);
  b.col(0) = VectorXd::Ones(6);
  b.rightCols(6) = sigma;
  MatrixXd q = b.transpose() * b / 6.0;
  q.bottomRightCorner(6, 6) += l1 * sigma;
  VectorXd theta = q.fullPivLu().solve(b.transpose() * y / 6.0);
  CHECK(std::abs(fit.transfer_fit.intercept - theta[0]) < 1e-6);
  CHECK((fit.transfer_fit.coef - theta.tail(6)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_tlflr: combined fields honor their definition") {
  Rng rng(24);
  TaskDataset target = random_task(rng, 8, "target");
  TaskDataset s1 = random_task(rng, 6, "s1");
  TaskDataset s2 = random_task(rng, 7, "s2");
  TransferFit fit = fit_tlflr(target, {&s1, &s2}, test_kernel(), 0.05, 0.08);

  BetaEstimate bt = evaluate_beta(fit.transfer_fit, fit.combined_beta.grid);
  BetaEstimate bd = evaluate_beta(fit.debias_fit, fit.combined_beta.grid);
  CHECK((fit.combined_beta.values - bt.values - bd.values)
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(fit.combined_intercept ==
        doctest::Approx(fit.transfer_fit.intercept +
                        fit.debias_fit.intercept));
  CHECK(fit.source_ids == std::vector<std::string>{"s1", "s2"});

  // Pooled-only mode zeroes the debias component.
  TransferFit pooled = fit_tlflr(target, {&s1, &s2}, test_kernel(), 0.05,
                                 0.08, TransferMode::PooledOnly);
  CHECK(pooled.debias_fit.coef.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pooled.combined_intercept == pooled.transfer_fit.intercept);
  CHECK((pooled.combined_beta.values -
         pooled.transfer_fit.beta_on_grid.values)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("debias equivalence: residual route equals the centered-penalty "
          "reformulation") {
  Rng rng(25);
  KernelSpec k = test_kernel();
  for (int rep = 0; rep < 3; ++rep) {
    TaskDataset target = random_task(rng, 4 + static_cast<int>(rng.below(3)),
                                     "target");
    TaskDataset src = random_task(rng, 5, "s1");
    const double l1 = 0.1, l2 = 0.07;
    TransferFit fit = fit_tlflr(target, {&src}, k, l1, l2);
    const Eigen::Index n0 = target.size();

    // Reformulated debias: minimize over (alpha, b)
    //   (1/n0)|y - alpha 1 - p_S - Sigma00 b|^2 + l2 b' Sigma00 b
    // with beta = beta_S + sum b_i <X_i, K_.>.
    VectorXd p_s = predict_batch(fit.transfer_fit, target.curves).array() -
                   fit.transfer_fit.intercept;
    MatrixXd sigma00 = rkhs_gram(target, k);
    MatrixXd b(n0, n0 + 1);
    b.col(0) = VectorXd::Ones(n0);
    b.rightCols(n0) = sigma00;
    MatrixXd q = b.transpose() * b / static_cast<double>(n0);
    q.bottomRightCorner(n0, n0) += l2 * sigma00;
    VectorXd rhs = b.transpose() * (target.responses - p_s) /
                   static_cast<double>(n0);
    VectorXd theta = q.fullPivLu().solve(rhs);

    RidgeFit reform;
    reform.coef = theta.tail(n0);
    reform.curves = std::make_shared<const std::vector<Curve>>(target.curves);
    reform.kernel = k;
    BetaEstimate delta = evaluate_beta(reform, fit.combined_beta.grid);
    BetaEstimate bs = evaluate_beta(fit.transfer_fit, fit.combined_beta.grid);
    CHECK((fit.combined_beta.values - bs.values - delta.values)
              .cwiseAbs()
              .maxCoeff() < 1e-6);
    CHECK(fit.combined_intercept == doctest::Approx(theta[0]).epsilon(1e-6));
  }
}

TEST_CASE("fit_tlflr: source order does not matter") {
  Rng rng(26);
  TaskDataset target = random_task(rng, 8, "target");
  TaskDataset s1 = random_task(rng, 5, "s1");
  TaskDataset s2 = random_task(rng, 6, "s2");
  TaskDataset s3 = random_task(rng, 4, "s3");
  TransferFit a = fit_tlflr(target, {&s1, &s2, &s3}, test_kernel(), 0.05, 0.08);
  TransferFit b = fit_tlflr(target, {&s3, &s1, &s2}, test_kernel(), 0.05, 0.08);
  CHECK((a.combined_beta.values - b.combined_beta.values)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK(a.combined_intercept == doctest::Approx(b.combined_intercept).epsilon(1e-12));
}

TEST_CASE("fit_tlflr: identical tasks stay finite and sane") {
  Rng rng(27);
  TaskDataset target = random_task(rng, 6, "target");
  TaskDataset copy1 = target;
  copy1.task_id = "s1";
  TaskDataset copy2 = target;
  copy2.task_id = "s2";
  TransferFit fit = fit_tlflr(target, {&copy1, &copy2}, test_kernel(), 0.05,
                              0.05);
  CHECK(fit.combined_beta.values.allFinite());
  CHECK(std::isfinite(fit.combined_intercept));
}

TEST_CASE("fit_tlflr: h=0 sources beat the target-only fit most of the time") {
  // Shared-slope sources, so transfer should win on most draws.
  const int reps = 50;
  int wins = 0;
  for (int rep = 0; rep < reps; ++rep) {
    ScenarioConfig sc;
    sc.beta_scenario = 2;
    sc.h = 0.0;
    sc.L = 3;
    sc.transferable_ids = {1, 2, 3};
    sc.n0 = 30;
    sc.nl = 30;
    sc.grid_points = 30;
    sc.noise_sd = 0.5;
    sc.seed = derive_seed(999, "h0", static_cast<std::uint64_t>(rep));
    GeneratedScenario gen = generate_scenario(sc);
    std::vector<const TaskDataset*> sources;
    for (const auto& s : gen.sources) sources.push_back(&s);

    KernelSpec k{EigenExpansionKernel{2.0, 50}, {}};
    const auto [l1, l2] = default_lambdas(sc.n0 + 3 * sc.nl, sc.n0, 2.0, 0.1, 0.1);
    FitOptions opts;
    opts.eval_grid = gen.true_target_beta.grid;
    RidgeFit oflr = fit_oflr(gen.target, k, l2, opts);
    TransferFit tl = fit_tlflr(gen.target, sources, k, l1, l2,
                               TransferMode::Full, opts);
    PredictorLaw law{MeanFn::SinPi, sc.target_cov};
    const double r0 = excess_risk_analytic(oflr.beta_on_grid, oflr.intercept,
                                           gen.true_target_beta, 0.0, law);
    const double rt = excess_risk_analytic(tl.combined_beta,
                                           tl.combined_intercept,
                                           gen.true_target_beta, 0.0, law);
    if (rt <= r0) ++wins;
  }
  CHECK(wins >= 40);  // >= 80% of 50
}
