#include "tlflr/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "tlflr/simd.hpp"

namespace tlflr {

namespace {
constexpr double kPi = 3.141592653589793;
constexpr double kSqrt12 = 3.4641016151377544;
}  // namespace

void validate_scenario(const ScenarioConfig& c) {
  if (c.beta_scenario < 1 || c.beta_scenario > 3)
    throw ArgumentError("beta_scenario must be 1, 2 or 3");
  if (c.h < 0) throw ArgumentError("h must be nonnegative");
  if (c.L < 0) throw ArgumentError("L must be nonnegative");
  if (static_cast<int>(c.transferable_ids.size()) > c.L)
    throw ArgumentError("|S| cannot exceed L");
  for (int id : c.transferable_ids)
    if (id < 1 || id > c.L) throw ArgumentError("transferable id out of range");
  if (c.n0 < 1 || c.nl < 1) throw ArgumentError("sample sizes must be >= 1");
  if (c.grid_points < 2) throw ArgumentError("grid_points must be >= 2");
  if (!(c.noise_sd >= 0)) throw ArgumentError("noise_sd must be >= 0");
  if (c.series_truncation < 1)
    throw ArgumentError("series_truncation must be >= 1");
  validate_kernel(c.target_cov);
  validate_kernel(c.source_cov);
}

VectorXd mean_values(MeanFn mean, const VectorXd& grid) {
  switch (mean) {
    case MeanFn::Zero:
      return VectorXd::Zero(grid.size());
    case MeanFn::SinPi: {
      VectorXd v = grid * kPi;
      simd::sin_inplace(v.data(), static_cast<std::size_t>(v.size()));
      return v;
    }
    default: {
      VectorXd v = grid * (2.0 * kPi);
      simd::cos_inplace(v.data(), static_cast<std::size_t>(v.size()));
      return v;
    }
  }
}

std::vector<Curve> sample_gp(MeanFn mean, const KernelSpec& cov,
                             const VectorXd& grid, int n, Rng& rng,
                             double amplitude) {
  if (n < 1) throw ArgumentError("sample_gp: n >= 1");
  if (amplitude < 0) throw ArgumentError("sample_gp: amplitude >= 0");
  MatrixXd c = kernel_matrix(cov, grid, grid) * amplitude;
  c = ((c + c.transpose()) * 0.5).eval();

  const double maxdiag = c.diagonal().maxCoeff();
  const double base = 1e-10 * std::max(maxdiag, 1.0);
  double jitter = base;
  Eigen::LLT<MatrixXd> llt;
  for (;;) {
    MatrixXd a = c;
    a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
    if (jitter > 1e-6 * std::max(maxdiag, 1.0) * 1.000001)
      throw NumericalError("sample_gp: covariance factorization failed");
  }
  MatrixXd l = llt.matrixL();

  VectorXd mu = mean_values(mean, grid);
  std::vector<Curve> draws;
  draws.reserve(n);
  VectorXd z(grid.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index g = 0; g < z.size(); ++g) z[g] = rng.normal();
    draws.push_back({grid, mu + l * z});
  }
  return draws;
}

BetaEstimate target_beta(int scenario, const VectorXd& grid, int truncation) {
  if (scenario < 1 || scenario > 3)
    throw ArgumentError("target_beta: scenario must be 1, 2 or 3");
  VectorXd values;
  switch (scenario) {
    case 1: {
      values = VectorXd::Zero(grid.size());
      double sign = 1.0;
      for (int k = 1; k <= truncation; ++k) {
        const double coef = 4.0 * std::sqrt(2.0) * sign / (k * k);
        simd::axpy(coef, cosine_basis(k, grid).data(), values.data(),
                   static_cast<std::size_t>(grid.size()));
        sign = -sign;
      }
      break;
    }
    case 2: {
      values = grid * (3.0 * kPi);
      simd::cos_inplace(values.data(), static_cast<std::size_t>(values.size()));
      values *= 4.0;
      break;
    }
    default: {
      VectorXd c = grid * (3.0 * kPi);
      VectorXd s = c;
      simd::cos_inplace(c.data(), static_cast<std::size_t>(c.size()));
      simd::sin_inplace(s.data(), static_cast<std::size_t>(s.size()));
      values = 4.0 * (c + s);
    }
  }
  return {grid, values};
}

VectorXd source_perturbation(const VectorXd& grid, double h,
                             const VectorXd& u_values) {
  VectorXd out = VectorXd::Zero(grid.size());
  for (Eigen::Index k = 1; k <= u_values.size(); ++k) {
    const double coef = u_values[k - 1] * kSqrt12 * h / (kPi * k * k);
    simd::axpy(coef, cosine_basis(static_cast<int>(k), grid).data(),
               out.data(), static_cast<std::size_t>(grid.size()));
  }
  return out;
}

BetaEstimate transferable_source_beta(const BetaEstimate& target, double h,
                                      Rng& rng, int truncation) {
  if (h < 0) throw ArgumentError("transferable_source_beta: h >= 0");
  VectorXd u(truncation);
  for (int k = 0; k < truncation; ++k) u[k] = rng.uniform(-1.0, 1.0);
  return {target.grid, target.values + source_perturbation(target.grid, h, u)};
}

GeneratedScenario generate_scenario(const ScenarioConfig& config) {
  validate_scenario(config);
  GeneratedScenario out;
  out.config = config;
  const VectorXd grid = linspace(0.0, 1.0, config.grid_points);
  const VectorXd w = quad_weights(grid);
  out.true_target_beta =
      target_beta(config.beta_scenario, grid, config.series_truncation);

  auto make_task = [&](const std::string& id, const KernelSpec& cov,
                       const BetaEstimate& beta, int n, Rng& rng) {
    TaskDataset task;
    task.task_id = id;
    task.curves = sample_gp(MeanFn::SinPi, cov, grid, n, rng);
    task.responses.resize(n);
    for (int i = 0; i < n; ++i)
      task.responses[i] =
          l2_inner_on_grid(task.curves[i].values, beta.values, w) +
          config.noise_sd * rng.normal();
    return task;
  };

  {
    Rng rng(derive_seed(config.seed, "target"));
    out.target = make_task("target", config.target_cov, out.true_target_beta,
                           config.n0, rng);
  }

  const KernelSpec negative_cov =
      config.negative_variant == NegativeVariant::OrnsteinUhlenbeck
          ? KernelSpec{OrnsteinUhlenbeckKernel{15.0}, {}}
          : KernelSpec{WienerKernel{}, {}};

  for (int l = 1; l <= config.L; ++l) {
    Rng rng(derive_seed(config.seed, "source", static_cast<std::uint64_t>(l)));
    const bool transferable =
        std::find(config.transferable_ids.begin(),
                  config.transferable_ids.end(),
                  l) != config.transferable_ids.end();
    BetaEstimate beta_l;
    if (transferable) {
      beta_l = transferable_source_beta(out.true_target_beta, config.h, rng,
                                        config.series_truncation);
    } else {
      beta_l = {grid, sample_gp(MeanFn::Cos2Pi, negative_cov, grid, 1, rng)
                          .front()
                          .values};
    }
    out.sources.push_back(make_task("source_" + std::to_string(l),
                                    config.source_cov, beta_l, config.nl,
                                    rng));
    out.true_source_betas.push_back(std::move(beta_l));
  }
  return out;
}

}  // namespace tlflr
