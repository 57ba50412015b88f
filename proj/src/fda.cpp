#include "tlflr/fda.hpp"

#include "tlflr/simd.hpp"

namespace tlflr {

VectorXd quad_weights(const VectorXd& grid) {
  const Eigen::Index d = grid.size();
  if (d < 2) throw ArgumentError("quad_weights: grid needs >= 2 points");
  VectorXd w(d);
  w[0] = (grid[1] - grid[0]) / 2.0;
  w[d - 1] = (grid[d - 1] - grid[d - 2]) / 2.0;
  for (Eigen::Index m = 1; m < d - 1; ++m)
    w[m] = (grid[m + 1] - grid[m - 1]) / 2.0;
  return w;
}

double l2_inner_on_grid(const VectorXd& a, const VectorXd& b,
                        const VectorXd& weights) {
  if (a.size() != b.size() || a.size() != weights.size())
    throw ArgumentError("l2_inner_on_grid: length mismatch");
  return simd::wdot(weights.data(), a.data(), b.data(),
                    static_cast<std::size_t>(a.size()));
}

double kernel_section_inner(const Curve& curve, const KernelSpec& kernel,
                            double t) {
  if (!kernel.domain.contains(t))
    throw DomainError("kernel_section_inner: t outside the domain");
  VectorXd w = quad_weights(curve.grid);
  VectorXd kt = kernel_matrix(kernel, curve.grid, VectorXd::Constant(1, t));
  return simd::wdot(w.data(), curve.values.data(), kt.data(),
                    static_cast<std::size_t>(w.size()));
}

std::vector<CurveGroup> group_curves(const std::vector<Curve>& curves) {
  std::vector<CurveGroup> groups;
  std::vector<std::vector<int>> members;
  for (int i = 0; i < static_cast<int>(curves.size()); ++i) {
    const Curve& c = curves[i];
    int g = -1;
    for (int j = 0; j < static_cast<int>(groups.size()); ++j) {
      if (groups[j].grid.size() == c.grid.size() && groups[j].grid == c.grid) {
        g = j;
        break;
      }
    }
    if (g < 0) {
      groups.push_back({c.grid, quad_weights(c.grid), MatrixXd(), {}});
      members.emplace_back();
      g = static_cast<int>(groups.size()) - 1;
    }
    members[g].push_back(i);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& grp = groups[g];
    grp.rows = members[g];
    grp.z.resize(grp.grid.size(), static_cast<Eigen::Index>(grp.rows.size()));
    for (std::size_t c = 0; c < grp.rows.size(); ++c)
      grp.z.col(static_cast<Eigen::Index>(c)) =
          grp.weights.cwiseProduct(curves[grp.rows[c]].values);
  }
  return groups;
}

namespace {

void scatter_block(MatrixXd& sigma, const MatrixXd& block,
                   const std::vector<int>& rows_a,
                   const std::vector<int>& rows_b) {
  for (std::size_t j = 0; j < rows_b.size(); ++j)
    for (std::size_t i = 0; i < rows_a.size(); ++i)
      sigma(rows_a[i], rows_b[j]) = block(i, j);
}

}  // namespace

MatrixXd rkhs_gram_curves(const std::vector<Curve>& curves,
                          const KernelSpec& kernel) {
  if (curves.empty()) throw ArgumentError("rkhs_gram: no curves");
  for (const auto& c : curves) validate_curve(c, kernel.domain);
  const auto groups = group_curves(curves);
  const Eigen::Index n = static_cast<Eigen::Index>(curves.size());
  MatrixXd sigma(n, n);
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a; b < groups.size(); ++b) {
      MatrixXd K = kernel_matrix(kernel, groups[a].grid, groups[b].grid);
      MatrixXd block = groups[a].z.transpose() * (K * groups[b].z);
      if (a == b) {
        // Exact symmetry by construction: mirror the upper triangle.
        for (Eigen::Index j = 0; j < block.cols(); ++j)
          for (Eigen::Index i = j + 1; i < block.rows(); ++i)
            block(i, j) = block(j, i);
        scatter_block(sigma, block, groups[a].rows, groups[b].rows);
      } else {
        scatter_block(sigma, block, groups[a].rows, groups[b].rows);
        scatter_block(sigma, block.transpose(), groups[b].rows,
                      groups[a].rows);
      }
    }
  }
  return sigma;
}

MatrixXd rkhs_gram(const std::vector<const TaskDataset*>& tasks,
                   const KernelSpec& kernel) {
  std::vector<Curve> all;
  for (const auto* t : tasks) {
    if (t == nullptr) throw ArgumentError("rkhs_gram: null task");
    all.insert(all.end(), t->curves.begin(), t->curves.end());
  }
  return rkhs_gram_curves(all, kernel);
}

MatrixXd rkhs_gram(const TaskDataset& task, const KernelSpec& kernel) {
  return rkhs_gram_curves(task.curves, kernel);
}

MatrixXd rkhs_cross_gram(const std::vector<Curve>& queries,
                         const std::vector<Curve>& training,
                         const KernelSpec& kernel) {
  if (queries.empty() || training.empty())
    throw ArgumentError("rkhs_cross_gram: empty curve list");
  for (const auto& c : queries) validate_curve(c, kernel.domain);
  const auto gq = group_curves(queries);
  const auto gt = group_curves(training);
  MatrixXd out(static_cast<Eigen::Index>(queries.size()),
               static_cast<Eigen::Index>(training.size()));
  for (const auto& a : gq) {
    for (const auto& b : gt) {
      MatrixXd K = kernel_matrix(kernel, a.grid, b.grid);
      MatrixXd block = a.z.transpose() * (K * b.z);
      scatter_block(out, block, a.rows, b.rows);
    }
  }
  return out;
}

}  // namespace tlflr
