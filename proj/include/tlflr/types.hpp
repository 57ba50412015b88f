#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlflr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Closed interval [lo, hi]; the default domain of every kernel and curve.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  bool contains(double t) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
    return t >= lo - slack && t <= hi + slack;
  }
};

/// One functional observation: values sampled on a strictly ascending grid.
struct Curve {
  VectorXd grid;
  VectorXd values;
};

Curve make_curve(VectorXd grid, VectorXd values, const Interval& domain = {});
void validate_curve(const Curve& c, const Interval& domain = {});

struct TaskDataset {
  std::vector<Curve> curves;
  VectorXd responses;
  std::string task_id;

  Eigen::Index size() const { return responses.size(); }
};

void validate_dataset(const TaskDataset& d);

/// A slope function sampled on an evaluation grid.
struct BetaEstimate {
  VectorXd grid;
  VectorXd values;
};

/// Piecewise-linear interpolation, clamped at the grid ends.
double interp_linear(const VectorXd& grid, const VectorXd& values, double t);
VectorXd interp_linear(const BetaEstimate& f, const VectorXd& query);

VectorXd linspace(double lo, double hi, int n);

MatrixXd submatrix(const MatrixXd& m, const std::vector<int>& rows,
                   const std::vector<int>& cols);

}  // namespace tlflr
