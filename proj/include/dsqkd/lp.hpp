#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace dsqkd::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min objective . x  subject to  lower <= coeffs . x <= upper per row
/// and var_lower <= x <= var_upper. Row bounds may be +-infinity on one
/// side; variable lower bounds must be finite.
struct LinearProgram {
  Eigen::VectorXd objective;
  struct Row {
    Eigen::VectorXd coeffs;
    double lower = -kInf;
    double upper = kInf;
  };
  std::vector<Row> constraints;
  Eigen::VectorXd var_lower;
  Eigen::VectorXd var_upper;

  void validate() const;
};

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  double value = 0.0;
  Eigen::VectorXd point;
};

/// Bounded-variable primal simplex with Bland's anti-cycling rule.
/// Sized for small dense programs (tens of variables); the attained
/// vertex is feasible to 1e-9 and the reported value is the objective
/// evaluated at that vertex.
Solution solve_min(const LinearProgram& lp);

} // namespace dsqkd::lp
