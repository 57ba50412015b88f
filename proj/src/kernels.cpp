#include "tlflr/kernels.hpp"

#include <cmath>

#include "tlflr/fda.hpp"
#include "tlflr/simd.hpp"

namespace tlflr {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;
constexpr double kPi = 3.141592653589793;

void check_domain(const KernelSpec& k, double t) {
  if (!k.domain.contains(t))
    throw DomainError("kernel argument outside the domain");
}

void check_grid(const KernelSpec& k, const VectorXd& g, const char* which) {
  if (g.size() == 0) throw ArgumentError(std::string(which) + ": empty grid");
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (i > 0 && !(g[i] > g[i - 1]))
      throw ArgumentError(std::string(which) + ": grid not ascending");
    check_domain(k, g[i]);
  }
}

}  // namespace

void validate_kernel(const KernelSpec& k) {
  if (!(k.domain.hi > k.domain.lo))
    throw ArgumentError("kernel domain must have positive length");
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EigenExpansionKernel>) {
          if (!(v.decay > 0)) throw ArgumentError("decay must be positive");
          if (v.truncation < 1) throw ArgumentError("truncation must be >= 1");
        } else if constexpr (std::is_same_v<T, MaternKernel>) {
          if (!(v.rho > 0)) throw ArgumentError("rho must be positive");
        } else if constexpr (std::is_same_v<T, GaussianKernel>) {
          if (!(v.rho > 0)) throw ArgumentError("rho must be positive");
        } else if constexpr (std::is_same_v<T, PeriodicKernel>) {
          if (!(v.lengthscale > 0) || !(v.period > 0))
            throw ArgumentError("periodic parameters must be positive");
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckKernel>) {
          if (!(v.rate > 0)) throw ArgumentError("rate must be positive");
        }
      },
      k.variant);
}

std::string kernel_name(const KernelSpec& k) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EigenExpansionKernel>)
          return "eigen_expansion";
        else if constexpr (std::is_same_v<T, MaternKernel>)
          return "matern";
        else if constexpr (std::is_same_v<T, GaussianKernel>)
          return "gaussian";
        else if constexpr (std::is_same_v<T, PeriodicKernel>)
          return "periodic";
        else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckKernel>)
          return "ou";
        else
          return "wiener";
      },
      k.variant);
}

VectorXd cosine_basis(int k, const VectorXd& grid) {
  VectorXd v = grid * (kPi * k);
  simd::cos_inplace(v.data(), static_cast<std::size_t>(v.size()));
  return v * kSqrt2;
}

namespace {

// The eigen-expansion basis mapped onto the kernel domain, orthonormal in
// L2(domain); identical to cosine_basis on the default [0,1].
VectorXd eigexp_basis(int k, const VectorXd& grid, const Interval& dom) {
  const double len = dom.length();
  VectorXd v = (grid.array() - dom.lo) * (kPi * k / len);
  simd::cos_inplace(v.data(), static_cast<std::size_t>(v.size()));
  return v * (kSqrt2 / std::sqrt(len));
}

double eigexp_basis1(int k, double t, const Interval& dom) {
  const double len = dom.length();
  return kSqrt2 / std::sqrt(len) * std::cos(kPi * k * (t - dom.lo) / len);
}

}  // namespace

double eval(const KernelSpec& kernel, double s, double t) {
  check_domain(kernel, s);
  check_domain(kernel, t);
  const double d = std::abs(s - t);
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EigenExpansionKernel>) {
          double acc = 0.0;
          for (int k = 1; k <= v.truncation; ++k)
            acc += std::pow(static_cast<double>(k), -v.decay) *
                   (eigexp_basis1(k, s, kernel.domain) *
                    eigexp_basis1(k, t, kernel.domain));
          return acc;
        } else if constexpr (std::is_same_v<T, MaternKernel>) {
          switch (v.nu) {
            case MaternNu::Half:
              return std::exp(-d / v.rho);
            case MaternNu::ThreeHalves: {
              const double u = kSqrt3 * d / v.rho;
              return (1.0 + u) * std::exp(-u);
            }
            default: {
              const double u = kSqrt5 * d / v.rho;
              return (1.0 + u + u * u / 3.0) * std::exp(-u);
            }
          }
        } else if constexpr (std::is_same_v<T, GaussianKernel>) {
          return std::exp(-d * d / (2.0 * v.rho * v.rho));
        } else if constexpr (std::is_same_v<T, PeriodicKernel>) {
          const double sn = std::sin(kPi * d / v.period);
          return std::exp(-2.0 * sn * sn / (v.lengthscale * v.lengthscale));
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckKernel>) {
          return std::exp(-v.rate * d);
        } else {
          return std::min(s, t);
        }
      },
      kernel.variant);
}

MatrixXd gram_cross(const KernelSpec& kernel, const VectorXd& grid_a,
                    const VectorXd& grid_b) {
  check_grid(kernel, grid_a, "grid_a");
  check_grid(kernel, grid_b, "grid_b");
  MatrixXd out(grid_a.size(), grid_b.size());
  for (Eigen::Index q = 0; q < grid_b.size(); ++q)
    for (Eigen::Index p = 0; p < grid_a.size(); ++p)
      out(p, q) = eval(kernel, grid_a[p], grid_b[q]);
  return out;
}

namespace {

// Column-major fill of f(|a_p - b_q|) with one vectorized transform pass per
// column buffer.
template <typename Fill>
MatrixXd fill_columns(const VectorXd& a, const VectorXd& b, Fill&& fill) {
  MatrixXd out(a.size(), b.size());
  for (Eigen::Index q = 0; q < b.size(); ++q)
    fill(b[q], out.col(q));
  return out;
}

}  // namespace

MatrixXd kernel_matrix(const KernelSpec& kernel, const VectorXd& grid_a,
                       const VectorXd& grid_b) {
  check_grid(kernel, grid_a, "grid_a");
  check_grid(kernel, grid_b, "grid_b");
  const auto n = static_cast<std::size_t>(grid_a.size());
  return std::visit(
      [&](const auto& v) -> MatrixXd {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EigenExpansionKernel>) {
          // Psi' D Psi via cosine tables and one GEMM.
          MatrixXd psi_a(grid_a.size(), v.truncation);
          MatrixXd psi_b(grid_b.size(), v.truncation);
          VectorXd tau(v.truncation);
          for (int k = 1; k <= v.truncation; ++k) {
            psi_a.col(k - 1) = eigexp_basis(k, grid_a, kernel.domain);
            psi_b.col(k - 1) = eigexp_basis(k, grid_b, kernel.domain);
            tau[k - 1] = std::pow(static_cast<double>(k), -v.decay);
          }
          return psi_a * tau.asDiagonal() * psi_b.transpose();
        } else if constexpr (std::is_same_v<T, MaternKernel>) {
          const double scale = v.nu == MaternNu::Half ? 1.0 / v.rho
                               : v.nu == MaternNu::ThreeHalves
                                   ? kSqrt3 / v.rho
                                   : kSqrt5 / v.rho;
          const MaternNu nu = v.nu;
          return fill_columns(grid_a, grid_b, [&](double t, auto col) {
            VectorXd u = (grid_a.array() - t).abs() * scale;
            VectorXd e = -u;
            simd::exp_inplace(e.data(), n);
            switch (nu) {
              case MaternNu::Half:
                col = e;
                break;
              case MaternNu::ThreeHalves:
                col = (1.0 + u.array()) * e.array();
                break;
              default:
                col = (1.0 + u.array() + u.array().square() / 3.0) * e.array();
            }
          });
        } else if constexpr (std::is_same_v<T, GaussianKernel>) {
          const double inv = -0.5 / (v.rho * v.rho);
          return fill_columns(grid_a, grid_b, [&](double t, auto col) {
            VectorXd e = (grid_a.array() - t).square() * inv;
            simd::exp_inplace(e.data(), n);
            col = e;
          });
        } else if constexpr (std::is_same_v<T, PeriodicKernel>) {
          const double freq = kPi / v.period;
          const double inv = -2.0 / (v.lengthscale * v.lengthscale);
          return fill_columns(grid_a, grid_b, [&](double t, auto col) {
            VectorXd sn = (grid_a.array() - t).abs() * freq;
            simd::sin_inplace(sn.data(), n);
            VectorXd e = sn.array().square() * inv;
            simd::exp_inplace(e.data(), n);
            col = e;
          });
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckKernel>) {
          const double rate = v.rate;
          return fill_columns(grid_a, grid_b, [&](double t, auto col) {
            VectorXd e = (grid_a.array() - t).abs() * (-rate);
            simd::exp_inplace(e.data(), n);
            col = e;
          });
        } else {
          return fill_columns(grid_a, grid_b, [&](double t, auto col) {
            col = grid_a.array().min(t);
          });
        }
      },
      kernel.variant);
}

EigenSystem nystrom_eigensystem(const KernelSpec& kernel, int grid_size,
                                int M) {
  if (M < 1 || grid_size < M)
    throw ArgumentError("need grid_size >= M >= 1");
  EigenSystem sys;
  sys.requested = M;
  sys.grid = linspace(kernel.domain.lo, kernel.domain.hi, grid_size);
  sys.quad_weights = quad_weights(sys.grid);

  MatrixXd K = kernel_matrix(kernel, sys.grid, sys.grid);
  K = ((K + K.transpose()) * 0.5).eval();
  VectorXd wsqrt = sys.quad_weights.array().sqrt();
  MatrixXd A = wsqrt.asDiagonal() * K * wsqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed in Nystrom route");

  // Eigen sorts ascending; walk from the top, dropping values under the PSD
  // floor (they sit in denominators downstream).
  const VectorXd& vals = es.eigenvalues();
  const double floor = 1e-10 * std::max(vals[grid_size - 1], 0.0);
  for (int j = 0; j < M; ++j) {
    const int idx = grid_size - 1 - j;
    if (!(vals[idx] > floor)) break;
    sys.eigenvalues.conservativeResize(j + 1);
    sys.eigenvalues[j] = vals[idx];
    sys.eigenfunctions.push_back(
        (es.eigenvectors().col(idx).array() / wsqrt.array()).matrix());
  }
  sys.count = static_cast<int>(sys.eigenfunctions.size());
  sys.truncated_below_request = sys.count < M;
  return sys;
}

EigenSystem mercer_eigensystem(const KernelSpec& kernel, int grid_size,
                               int M) {
  if (M < 1 || grid_size < M)
    throw ArgumentError("need grid_size >= M >= 1");
  const auto* ee = std::get_if<EigenExpansionKernel>(&kernel.variant);
  if (ee == nullptr) return nystrom_eigensystem(kernel, grid_size, M);

  EigenSystem sys;
  sys.requested = M;
  sys.grid = linspace(kernel.domain.lo, kernel.domain.hi, grid_size);
  sys.quad_weights = quad_weights(sys.grid);
  const int avail = std::min(M, ee->truncation);
  sys.eigenvalues.resize(avail);
  for (int j = 1; j <= avail; ++j) {
    sys.eigenvalues[j - 1] = std::pow(static_cast<double>(j), -ee->decay);
    sys.eigenfunctions.push_back(eigexp_basis(j, sys.grid, kernel.domain));
  }
  sys.count = avail;
  sys.truncated_below_request = avail < M;
  return sys;
}

}  // namespace tlflr
