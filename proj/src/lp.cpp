#include "mvi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvi/errors.hpp"

namespace mvi::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

int LinearProgram::add_variable(double lower, double upper, double cost) {
  if (!rows_.empty()) throw SolverFailure("lp", "variables must be added before rows");
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void LinearProgram::add_row(const Eigen::VectorXd& coeffs, RowType type, double rhs) {
  if (coeffs.size() != num_variables()) throw SolverFailure("lp", "row has wrong length");
  if (!coeffs.allFinite() || !std::isfinite(rhs)) throw SolverFailure("lp", "non-finite row");
  rows_.push_back({coeffs, type, rhs});
}

double LinearProgram::objective_at(const Eigen::VectorXd& x) const {
  double v = offset_;
  for (int j = 0; j < num_variables(); ++j) v += cost_[j] * x(j);
  return v;
}

double LinearProgram::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max({worst, lower_[j] - x(j), x(j) - upper_[j]});
  }
  for (const Row& row : rows_) {
    const double lhs = row.coeffs.dot(x);
    switch (row.type) {
      case RowType::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case RowType::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case RowType::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

std::string LinearProgram::to_debug_text() const {
  std::ostringstream os;
  os.precision(17);
  os << (sense_ == Sense::Minimize ? "minimize" : "maximize") << " offset " << offset_ << "\n";
  os << "cost";
  for (double c : cost_) os << ' ' << c;
  os << "\nbounds\n";
  for (int j = 0; j < num_variables(); ++j) os << "  x" << j << " in [" << lower_[j] << ", " << upper_[j] << "]\n";
  os << "rows\n";
  for (const Row& row : rows_) {
    os << ' ';
    for (int j = 0; j < row.coeffs.size(); ++j) os << ' ' << row.coeffs(j);
    os << (row.type == RowType::LessEqual ? " <= " : row.type == RowType::GreaterEqual ? " >= " : " = ")
       << row.rhs << "\n";
  }
  return os.str();
}

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// x_j = offset + plus_col - minus_col (either column may be absent, -1), with
// `flip` negating plus_col for variables bounded only from above.
struct VariableMap {
  double offset = 0.0;
  int plus_col = -1;
  int minus_col = -1;
  double plus_sign = 1.0;
};

struct StandardRow {
  Eigen::VectorXd coeffs;
  RowType type;
  double rhs;
};

class Simplex {
 public:
  Simplex(Tableau tableau, std::vector<int> basis, const Options& options)
      : t_(std::move(tableau)), basis_(std::move(basis)), options_(options) {}

  Tableau& tableau() { return t_; }
  std::vector<int>& basis() { return basis_; }
  long iterations() const { return iterations_; }

  void pivot(int row, int col) {
    const int rhs = static_cast<int>(t_.cols()) - 1;
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
    }
    cost_ -= cost_(col) * t_.row(row).transpose();
    for (int i = 0; i < t_.rows(); ++i) {
      if (t_(i, rhs) < 0.0 && t_(i, rhs) > -1e-13) t_(i, rhs) = 0.0;
    }
    basis_[row] = col;
  }

  /// Prices out the basis for the given column costs.
  void set_costs(const Eigen::VectorXd& costs) {
    cost_ = Eigen::VectorXd::Zero(t_.cols());
    cost_.head(costs.size()) = costs;
    for (int i = 0; i < t_.rows(); ++i) {
      const double cb = costs(basis_[i]);
      if (cb != 0.0) cost_ -= cb * t_.row(i).transpose();
    }
  }

  double objective() const { return -cost_(cost_.size() - 1); }

  /// Minimizes over the columns with allowed[j] true. Returns Optimal or Unbounded.
  Status run(const std::vector<bool>& allowed) {
    const int rhs = static_cast<int>(t_.cols()) - 1;
    bool bland = false;
    int stalled = 0;
    double last = objective();
    while (true) {
      int enter = -1;
      double best = -options_.tolerance;
      for (int j = 0; j < rhs; ++j) {
        if (!allowed[j]) continue;
        if (cost_(j) < best) {
          enter = j;
          if (bland) break;
          best = cost_(j);
        }
      }
      if (enter < 0) return Status::Optimal;

      int leave = -1;
      double min_ratio = 0.0;
      for (int i = 0; i < t_.rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= options_.pivot_tolerance) continue;
        const double ratio = std::max(t_(i, rhs), 0.0) / a;
        if (leave < 0 || ratio < min_ratio - 1e-12 * (1.0 + std::abs(min_ratio))) {
          leave = i;
          min_ratio = ratio;
        } else if (ratio <= min_ratio + 1e-12 * (1.0 + std::abs(min_ratio))) {
          const bool take = bland ? basis_[i] < basis_[leave]
                                  : a > t_(leave, enter);
          if (take) {
            leave = i;
            min_ratio = std::min(min_ratio, ratio);
          }
        }
      }
      if (leave < 0) return Status::Unbounded;

      pivot(leave, enter);
      if (++iterations_ > options_.max_iterations) {
        throw SolverFailure("lp", "simplex iteration cap exceeded");
      }
      const double now = objective();
      if (now < last - 1e-13 * (1.0 + std::abs(last))) {
        stalled = 0;
      } else if (++stalled > options_.degenerate_switch) {
        bland = true;
      }
      last = now;
    }
  }

 private:
  Tableau t_;
  std::vector<int> basis_;
  Eigen::VectorXd cost_;
  Options options_;
  long iterations_ = 0;
};

}  // namespace

Solution solve(const LinearProgram& program, const Options& options) {
  const int n = program.num_variables();
  Solution out;
  out.x = Eigen::VectorXd::Zero(n);

  // Map every variable onto nonnegative columns.
  std::vector<VariableMap> maps(n);
  std::vector<StandardRow> rows;
  int ncols = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = program.lower()[j];
    const double hi = program.upper()[j];
    if (lo > hi) return out;  // infeasible bounds
    VariableMap& m = maps[j];
    if (std::isfinite(lo)) {
      m.offset = lo;
      m.plus_col = ncols++;
    } else if (std::isfinite(hi)) {
      m.offset = hi;
      m.plus_col = ncols++;
      m.plus_sign = -1.0;
    } else {
      m.plus_col = ncols++;
      m.minus_col = ncols++;
    }
  }
  auto substitute = [&](const Eigen::VectorXd& coeffs, double& rhs) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(ncols);
    for (int j = 0; j < n; ++j) {
      const double c = coeffs(j);
      if (c == 0.0) continue;
      rhs -= c * maps[j].offset;
      row(maps[j].plus_col) += c * maps[j].plus_sign;
      if (maps[j].minus_col >= 0) row(maps[j].minus_col) -= c;
    }
    return row;
  };
  for (int j = 0; j < n; ++j) {
    const double lo = program.lower()[j];
    const double hi = program.upper()[j];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(ncols);
      row(maps[j].plus_col) = 1.0;
      rows.push_back({row, RowType::LessEqual, hi - lo});
    }
  }
  for (const auto& r : program.rows()) {
    double rhs = r.rhs;
    Eigen::VectorXd row = substitute(r.coeffs, rhs);
    rows.push_back({std::move(row), r.type, rhs});
  }
  for (auto& r : rows) {
    if (r.rhs < 0.0) {
      r.coeffs = -r.coeffs;
      r.rhs = -r.rhs;
      if (r.type == RowType::LessEqual) r.type = RowType::GreaterEqual;
      else if (r.type == RowType::GreaterEqual) r.type = RowType::LessEqual;
    }
  }

  const int m = static_cast<int>(rows.size());
  int n_slack = 0;
  int n_art = 0;
  for (const auto& r : rows) {
    if (r.type != RowType::Equal) ++n_slack;
    if (r.type != RowType::LessEqual) ++n_art;
  }
  const int total = ncols + n_slack + n_art;
  const int first_art = ncols + n_slack;
  Tableau t = Tableau::Zero(m, total + 1);
  std::vector<int> basis(m);
  {
    int slack = ncols;
    int art = first_art;
    for (int i = 0; i < m; ++i) {
      t.row(i).head(ncols) = rows[i].coeffs.transpose();
      t(i, total) = rows[i].rhs;
      switch (rows[i].type) {
        case RowType::LessEqual:
          t(i, slack) = 1.0;
          basis[i] = slack++;
          break;
        case RowType::GreaterEqual:
          t(i, slack++) = -1.0;
          t(i, art) = 1.0;
          basis[i] = art++;
          break;
        case RowType::Equal:
          t(i, art) = 1.0;
          basis[i] = art++;
          break;
      }
    }
  }
  const Tableau original = t;

  double scale = 1.0;
  for (const auto& r : rows) scale = std::max(scale, std::abs(r.rhs));

  Simplex simplex(std::move(t), std::move(basis), options);

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.tail(n_art).setOnes();
    simplex.set_costs(phase1);
    simplex.run(std::vector<bool>(total, true));
    if (simplex.objective() > 10.0 * options.tolerance * scale) {
      out.status = Status::Infeasible;
      out.iterations = simplex.iterations();
      return out;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and stay inert.
    Tableau& tab = simplex.tableau();
    for (int i = 0; i < m; ++i) {
      if (simplex.basis()[i] < first_art) continue;
      int best = -1;
      double best_abs = options.pivot_tolerance;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(tab(i, j)) > best_abs) {
          best_abs = std::abs(tab(i, j));
          best = j;
        }
      }
      if (best >= 0) simplex.pivot(i, best);
    }
  }

  // Phase 2.
  Eigen::VectorXd costs = Eigen::VectorXd::Zero(total);
  const double direction = program.sense() == Sense::Minimize ? 1.0 : -1.0;
  for (int j = 0; j < n; ++j) {
    const double c = direction * program.cost()[j];
    costs(maps[j].plus_col) += c * maps[j].plus_sign;
    if (maps[j].minus_col >= 0) costs(maps[j].minus_col) -= c;
  }
  simplex.set_costs(costs);
  std::vector<bool> allowed(total, true);
  for (int j = first_art; j < total; ++j) allowed[j] = false;
  const Status status = simplex.run(allowed);
  out.iterations = simplex.iterations();
  if (status == Status::Unbounded) {
    out.status = Status::Unbounded;
    return out;
  }

  // Read the basic solution, then polish it with a fresh solve of B y_B = b.
  const Tableau& tab = simplex.tableau();
  const std::vector<int>& basis_final = simplex.basis();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) y(basis_final[i]) = tab(i, total);
  if (m > 0) {
    Eigen::MatrixXd b_mat(m, m);
    for (int i = 0; i < m; ++i) b_mat.col(i) = original.col(basis_final[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b_mat);
    const Eigen::VectorXd yb = lu.solve(original.col(total));
    const double resid = (b_mat * yb - original.col(total)).lpNorm<Eigen::Infinity>();
    bool ok = std::isfinite(resid) && resid <= 1e-9 * scale;
    for (int i = 0; ok && i < m; ++i) {
      if (yb(i) < -options.tolerance * scale || std::abs(yb(i) - y(basis_final[i])) > 1e-6 * scale) ok = false;
    }
    if (ok) {
      for (int i = 0; i < m; ++i) y(basis_final[i]) = std::max(yb(i), 0.0);
    }
  }
  for (int j = 0; j < n; ++j) {
    double v = maps[j].offset + maps[j].plus_sign * y(maps[j].plus_col);
    if (maps[j].minus_col >= 0) v -= y(maps[j].minus_col);
    out.x(j) = v;
  }
  out.status = Status::Optimal;
  out.objective = program.objective_at(out.x);
  return out;
}

}  // namespace mvi::lp
