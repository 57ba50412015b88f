#pragma once

#include <variant>

#include "tlflr/types.hpp"

namespace tlflr {

// Reproducing-kernel menu. All kernels live on `domain` (default [0,1]).

/// K(s,t) = sum_{k<=truncation} k^{-decay} psi_k(s) psi_k(t),
/// psi_k(t) = sqrt(2) cos(pi k t).
struct EigenExpansionKernel {
  double decay = 2.0;
  int truncation = 50;
};

enum class MaternNu { Half, ThreeHalves, FiveHalves };

struct MaternKernel {
  MaternNu nu = MaternNu::Half;
  double rho = 1.0;
};

/// exp(-(s-t)^2 / (2 rho^2)); the Matern nu -> infinity limit.
struct GaussianKernel {
  double rho = 1.0;
};

/// exp(-2 sin^2(pi |s-t| / period) / lengthscale^2).
struct PeriodicKernel {
  double lengthscale = 1.0;
  double period = 1.0;
};

/// exp(-rate |s-t|).
struct OrnsteinUhlenbeckKernel {
  double rate = 15.0;
};

/// min(s, t).
struct WienerKernel {};

using KernelVariant =
    std::variant<EigenExpansionKernel, MaternKernel, GaussianKernel,
                 PeriodicKernel, OrnsteinUhlenbeckKernel, WienerKernel>;

struct KernelSpec {
  KernelVariant variant;
  Interval domain;
};

void validate_kernel(const KernelSpec& k);
std::string kernel_name(const KernelSpec& k);

/// Pointwise K(s,t). Throws DomainError outside the kernel domain.
double eval(const KernelSpec& kernel, double s, double t);

/// Entrywise kernel matrix G[p][q] = K(a[p], b[q]). This is the reference
/// route: entries are bitwise-identical to eval().
MatrixXd gram_cross(const KernelSpec& kernel, const VectorXd& grid_a,
                    const VectorXd& grid_b);

/// Fast kernel-matrix fill (SIMD maps + GEMM for the eigen-expansion); used
/// by Gram assembly, slope evaluation and GP covariances. Agrees with
/// gram_cross to reassociation-level rounding.
MatrixXd kernel_matrix(const KernelSpec& kernel, const VectorXd& grid_a,
                       const VectorXd& grid_b);

/// Mercer eigenpairs of K on a grid: eigenvalues nonincreasing,
/// eigenfunctions weighted-orthonormal under the trapezoid weights.
struct EigenSystem {
  VectorXd grid;
  VectorXd quad_weights;
  VectorXd eigenvalues;                  // nonincreasing, above the PSD floor
  std::vector<VectorXd> eigenfunctions;  // one vector per retained pair
  int count = 0;                         // retained pairs (M_max)
  int requested = 0;
  bool truncated_below_request = false;  // fewer pairs above the floor than asked
};

/// Analytic pairs for the eigen-expansion kernel, Nystrom approximation for
/// the rest. grid_size >= M >= 1.
EigenSystem mercer_eigensystem(const KernelSpec& kernel, int grid_size, int M);

/// Nystrom route regardless of kernel type (also used to cross-check the
/// analytic eigen-expansion pairs).
EigenSystem nystrom_eigensystem(const KernelSpec& kernel, int grid_size, int M);

/// sqrt(2) cos(pi k t) sampled on a grid.
VectorXd cosine_basis(int k, const VectorXd& grid);

}  // namespace tlflr
