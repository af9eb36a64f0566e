#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mvi::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowType { LessEqual, GreaterEqual, Equal };
enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status status);

/// Dense linear program: optimize c'x + offset subject to row constraints and
/// per-variable bounds (either bound may be infinite).
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

  /// Returns the new variable's index. Variables must all be added before rows.
  int add_variable(double lower, double upper, double cost = 0.0);

  /// coeffs must have one entry per variable.
  void add_row(const Eigen::VectorXd& coeffs, RowType type, double rhs);

  void set_cost(int var, double cost) { cost_[var] = cost; }
  void set_offset(double offset) { offset_ = offset; }

  Sense sense() const noexcept { return sense_; }
  int num_variables() const noexcept { return static_cast<int>(cost_.size()); }
  int num_rows() const noexcept { return static_cast<int>(rows_.size()); }
  double offset() const noexcept { return offset_; }
  const std::vector<double>& cost() const noexcept { return cost_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  struct Row {
    Eigen::VectorXd coeffs;
    RowType type;
    double rhs;
  };
  const std::vector<Row>& rows() const noexcept { return rows_; }

  /// Objective value (including offset) at x.
  double objective_at(const Eigen::VectorXd& x) const;

  /// Largest constraint or bound violation at x.
  double max_violation(const Eigen::VectorXd& x) const;

  /// Plain-text dump for debugging.
  std::string to_debug_text() const;

 private:
  Sense sense_;
  double offset_ = 0.0;
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Row> rows_;
};

struct Options {
  /// Reduced-cost and feasibility tolerance.
  double tolerance = 1e-9;
  /// Smallest magnitude accepted as a pivot element.
  double pivot_tolerance = 1e-11;
  long max_iterations = 1'000'000;
  /// Consecutive non-improving pivots tolerated before switching from the
  /// steepest reduced cost rule to Bland's rule for the rest of the run.
  int degenerate_switch = 50;
};

struct Solution {
  Status status = Status::Infeasible;
  /// Objective value including offset; meaningful only when Optimal.
  double objective = 0.0;
  Eigen::VectorXd x;
  long iterations = 0;
};

/// Two-phase dense tableau simplex. Deterministic: identical input gives
/// identical output. Throws SolverFailure when the iteration cap is hit.
Solution solve(const LinearProgram& program, const Options& options = {});

}  // namespace mvi::lp
