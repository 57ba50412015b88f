#include "tlflr/types.hpp"

#include <cmath>

namespace tlflr {

void validate_curve(const Curve& c, const Interval& domain) {
  if (c.grid.size() != c.values.size())
    throw ArgumentError("curve grid/value lengths differ");
  if (c.grid.size() < 2) throw ArgumentError("curve needs at least 2 points");
  for (Eigen::Index i = 0; i < c.grid.size(); ++i) {
    if (!std::isfinite(c.grid[i]) || !std::isfinite(c.values[i]))
      throw ArgumentError("curve contains non-finite entries");
    if (i > 0 && !(c.grid[i] > c.grid[i - 1]))
      throw ArgumentError("curve grid must be strictly ascending");
    if (!domain.contains(c.grid[i]))
      throw DomainError("curve grid point outside the domain");
  }
}

Curve make_curve(VectorXd grid, VectorXd values, const Interval& domain) {
  Curve c{std::move(grid), std::move(values)};
  validate_curve(c, domain);
  return c;
}

void validate_dataset(const TaskDataset& d) {
  if (d.curves.empty()) throw ArgumentError("dataset has no curves");
  if (static_cast<Eigen::Index>(d.curves.size()) != d.responses.size())
    throw ArgumentError("dataset curve/response counts differ");
  for (const auto& c : d.curves) validate_curve(c);
  if (!d.responses.allFinite())
    throw ArgumentError("dataset responses contain non-finite values");
}

double interp_linear(const VectorXd& grid, const VectorXd& values, double t) {
  const Eigen::Index d = grid.size();
  if (t <= grid[0]) return values[0];
  if (t >= grid[d - 1]) return values[d - 1];
  // first index with grid[hi] > t
  Eigen::Index lo = 0, hi = d - 1;
  while (hi - lo > 1) {
    Eigen::Index mid = (lo + hi) / 2;
    if (grid[mid] <= t)
      lo = mid;
    else
      hi = mid;
  }
  const double u = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + u * (values[hi] - values[lo]);
}

VectorXd interp_linear(const BetaEstimate& f, const VectorXd& query) {
  VectorXd out(query.size());
  for (Eigen::Index i = 0; i < query.size(); ++i)
    out[i] = interp_linear(f.grid, f.values, query[i]);
  return out;
}

VectorXd linspace(double lo, double hi, int n) {
  if (n < 2) throw ArgumentError("linspace needs n >= 2");
  VectorXd g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  g[n - 1] = hi;
  return g;
}

MatrixXd submatrix(const MatrixXd& m, const std::vector<int>& rows,
                   const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(i, j) = m(rows[i], cols[j]);
  return out;
}

}  // namespace tlflr
