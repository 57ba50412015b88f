#pragma once

#include "tlflr/kernels.hpp"
#include "tlflr/types.hpp"

namespace tlflr {

/// Trapezoid weights on an ascending grid; they sum to grid(d-1) - grid(0).
VectorXd quad_weights(const VectorXd& grid);

/// sum_m w_m a_m b_m.
double l2_inner_on_grid(const VectorXd& a, const VectorXd& b,
                        const VectorXd& weights);

/// Quadrature version of int X(s) K(s,t) ds.
double kernel_section_inner(const Curve& curve, const KernelSpec& kernel,
                            double t);

/// Curves bucketed by identical design grids; z-columns hold w .* x so that
/// Gram blocks become Z_a' K(grid_a, grid_b) Z_b.
struct CurveGroup {
  VectorXd grid;
  VectorXd weights;
  MatrixXd z;               // d x m, one column per curve
  std::vector<int> rows;    // positions in the original curve list
};

std::vector<CurveGroup> group_curves(const std::vector<Curve>& curves);

/// N x N matrix of double-quadrature inner products
/// Sigma_ij = x_i' diag(w_i) K(grid_i, grid_j) diag(w_j) x_j
/// over the concatenation of all curves in `tasks`. Exactly symmetric.
MatrixXd rkhs_gram(const std::vector<const TaskDataset*>& tasks,
                   const KernelSpec& kernel);
MatrixXd rkhs_gram(const TaskDataset& task, const KernelSpec& kernel);
MatrixXd rkhs_gram_curves(const std::vector<Curve>& curves,
                          const KernelSpec& kernel);

/// Cross Gram between query curves and training curves:
/// out[q][i] = x_q' diag(w_q) K(grid_q, grid_i) diag(w_i) x_i.
MatrixXd rkhs_cross_gram(const std::vector<Curve>& queries,
                         const std::vector<Curve>& training,
                         const KernelSpec& kernel);

}  // namespace tlflr
