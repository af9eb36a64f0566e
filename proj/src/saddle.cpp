#include "mvi/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mvi/errors.hpp"
#include "mvi/rng.hpp"

namespace mvi {

double BiAffineLoss::value(const Vec& w, const Vec& q) const {
  return constant + nu.dot(q) + rho.dot(w) + w.dot(K * q);
}

void BiAffineLoss::check_shape() const {
  if (nu.size() != K.cols() || rho.size() != K.rows()) {
    throw DimensionMismatch("loss coefficients disagree in shape");
  }
}

BiAffineLoss build_exact_loss(const TabularMdp& mdp, const Policy& policy, const Vec& mu) {
  check_compatible(mdp, policy);
  const int n = mdp.n_pairs();
  if (mu.size() != n) throw DimensionMismatch("mu must have one entry per state-action pair");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw InvalidModel("mu must be a distribution over state-action pairs");
  }
  BiAffineLoss loss;
  loss.nu = initial_state_action(mdp, policy);
  loss.rho = mu.cwiseProduct(mdp.mean_reward());
  const Mat ppi = state_action_transition(mdp, policy);
  loss.K = mu.asDiagonal() * (mdp.gamma() * ppi - Mat::Identity(n, n));
  return loss;
}

BiAffineLoss w_side_loss(const BiAffineLoss& loss) {
  BiAffineLoss out = loss;
  out.rho.setZero();
  return out;
}

BiAffineLoss q_side_loss(const BiAffineLoss& loss) {
  BiAffineLoss out = loss;
  out.nu.setZero();
  return out;
}

const char* to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::LP: return "lp";
    case SolveMethod::Enumeration: return "enumeration";
    case SolveMethod::Grid: return "grid";
    case SolveMethod::Subgradient: return "subgradient";
  }
  return "unknown";
}

const char* to_string(RegularizerKind kind) {
  return kind == RegularizerKind::Quadratic ? "quadratic" : "shifted_quadratic";
}

double Regularizer::value(const Vec& w, const Vec& mu) const {
  if (lambda == 0.0) return 0.0;
  const Vec d = kind == RegularizerKind::Quadratic ? w : Vec(w.array() - 1.0);
  return lambda * mu.dot(d.cwiseAbs2());
}

Vec Regularizer::gradient(const Vec& w, const Vec& mu) const {
  const Vec d = kind == RegularizerKind::Quadratic ? w : Vec(w.array() - 1.0);
  return 2.0 * lambda * mu.cwiseProduct(d);
}

namespace {

// G(x, y) = c + a . x + b . y + x' M y with x the outer variable.
struct Game {
  double c = 0.0;
  Vec a;
  Vec b;
  Mat M;

  Game negated() const { return {-c, -a, -b, -M}; }
  Vec inner_coeff(const Vec& x) const { return b + M.transpose() * x; }
};

Game make_game(const BiAffineLoss& loss, Role outer_role) {
  loss.check_shape();
  if (outer_role == Role::W) return {loss.constant, loss.rho, loss.nu, loss.K};
  return {loss.constant, loss.nu, loss.rho, loss.K.transpose()};
}

void check_dimensions(const BiAffineLoss& loss, const FunctionClass& outer,
                      const FunctionClass& inner, Role outer_role) {
  const int w_dim = loss.w_dimension();
  const int q_dim = loss.q_dimension();
  const int outer_dim = outer_role == Role::W ? w_dim : q_dim;
  const int inner_dim = outer_role == Role::W ? q_dim : w_dim;
  if (outer.dimension() != outer_dim || inner.dimension() != inner_dim) {
    throw DimensionMismatch("class dimensions (" + std::to_string(outer.dimension()) + ", " +
                            std::to_string(inner.dimension()) + ") do not match the loss (" +
                            std::to_string(outer_dim) + ", " + std::to_string(inner_dim) + ")");
  }
}

struct Expr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;
};

// Collects variables and rows in any order, then materializes an LP.
class LpBuilder {
 public:
  int add_variable(double lower, double upper, double cost = 0.0) {
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    return static_cast<int>(cost_.size()) - 1;
  }
  void add_cost(int var, double c) { cost_[var] += c; }
  void add_row(std::vector<std::pair<int, double>> terms, lp::RowType type, double rhs) {
    rows_.push_back({std::move(terms), type, rhs});
  }
  lp::LinearProgram build(double offset) const {
    lp::LinearProgram program(lp::Sense::Minimize);
    for (std::size_t j = 0; j < cost_.size(); ++j) program.add_variable(lower_[j], upper_[j], cost_[j]);
    program.set_offset(offset);
    for (const auto& row : rows_) {
      Vec coeffs = Vec::Zero(static_cast<Eigen::Index>(cost_.size()));
      for (const auto& [var, c] : row.terms) coeffs(var) += c;
      program.add_row(coeffs, row.type, row.rhs);
    }
    return program;
  }

 private:
  struct PendingRow {
    std::vector<std::pair<int, double>> terms;
    lp::RowType type;
    double rhs;
  };
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<PendingRow> rows_;
};

// Adds the outer variable block (bounds plus polytope rows).
std::vector<int> add_outer_variables(LpBuilder& builder, const FunctionClass& outer) {
  std::vector<int> x(outer.dimension());
  for (int k = 0; k < outer.dimension(); ++k) {
    x[k] = builder.add_variable(outer.lower()(k), outer.upper()(k));
  }
  if (outer.variant() == FunctionClass::Variant::Polytope) {
    for (int r = 0; r < outer.ineq_lhs().rows(); ++r) {
      std::vector<std::pair<int, double>> terms;
      for (int k = 0; k < outer.dimension(); ++k) {
        if (outer.ineq_lhs()(r, k) != 0.0) terms.emplace_back(x[k], outer.ineq_lhs()(r, k));
      }
      builder.add_row(std::move(terms), lp::RowType::LessEqual, outer.ineq_rhs()(r));
    }
    for (int r = 0; r < outer.eq_lhs().rows(); ++r) {
      std::vector<std::pair<int, double>> terms;
      for (int k = 0; k < outer.dimension(); ++k) {
        if (outer.eq_lhs()(r, k) != 0.0) terms.emplace_back(x[k], outer.eq_lhs()(r, k));
      }
      builder.add_row(std::move(terms), lp::RowType::Equal, outer.eq_rhs()(r));
    }
  }
  return x;
}

// Linear-programming representation of sup_{y in Y} (b + M' x) . y as an
// expression over auxiliary variables, valid at the optimum of a minimization.
Expr add_sup_epigraph(LpBuilder& builder, const std::vector<int>& x, const Vec& b, const Mat& M,
                      const FunctionClass& inner) {
  Expr expr;
  const int nx = static_cast<int>(x.size());
  auto coupling = [&](const Vec& weights, double scale) {
    // terms of -scale * sum_k (M weights)_k x_k
    std::vector<std::pair<int, double>> terms;
    const Vec mw = M * weights;
    for (int k = 0; k < nx; ++k) {
      if (mw(k) != 0.0) terms.emplace_back(x[k], -scale * mw(k));
    }
    return terms;
  };
  switch (inner.variant()) {
    case FunctionClass::Variant::Box: {
      for (int i = 0; i < inner.dimension(); ++i) {
        const double lo = inner.lower()(i);
        const double hi = inner.upper()(i);
        if (M.col(i).isZero(0.0)) {
          expr.constant += std::max(lo * b(i), hi * b(i));
          continue;
        }
        const int t = builder.add_variable(-lp::kInf, lp::kInf);
        const Vec unit = Vec::Unit(inner.dimension(), i);
        for (const double bound : (lo == hi ? std::vector<double>{lo} : std::vector<double>{lo, hi})) {
          auto terms = coupling(unit, bound);
          terms.emplace_back(t, 1.0);
          builder.add_row(std::move(terms),
                          lo == hi ? lp::RowType::Equal : lp::RowType::GreaterEqual, bound * b(i));
        }
        expr.terms.emplace_back(t, 1.0);
      }
      break;
    }
    case FunctionClass::Variant::FiniteSet:
    case FunctionClass::Variant::Singleton: {
      const int z = builder.add_variable(-lp::kInf, lp::kInf);
      for (const Vec& y : inner.members()) {
        auto terms = coupling(y, 1.0);
        terms.emplace_back(z, 1.0);
        builder.add_row(std::move(terms), lp::RowType::GreaterEqual, b.dot(y));
      }
      expr.terms.emplace_back(z, 1.0);
      break;
    }
    case FunctionClass::Variant::Polytope: {
      // Dual of max g.y s.t. A y <= d, E y = e: min d.lambda + e.eta with
      // A' lambda + E' eta = g, lambda >= 0.
      const Mat& A = inner.ineq_lhs();
      const Mat& E = inner.eq_lhs();
      std::vector<int> lambda(A.rows());
      std::vector<int> eta(E.rows());
      for (int r = 0; r < A.rows(); ++r) {
        lambda[r] = builder.add_variable(0.0, lp::kInf);
        expr.terms.emplace_back(lambda[r], inner.ineq_rhs()(r));
      }
      for (int r = 0; r < E.rows(); ++r) {
        eta[r] = builder.add_variable(-lp::kInf, lp::kInf);
        expr.terms.emplace_back(eta[r], inner.eq_rhs()(r));
      }
      for (int i = 0; i < inner.dimension(); ++i) {
        auto terms = coupling(Vec::Unit(inner.dimension(), i), 1.0);
        for (int r = 0; r < A.rows(); ++r) {
          if (A(r, i) != 0.0) terms.emplace_back(lambda[r], A(r, i));
        }
        for (int r = 0; r < E.rows(); ++r) {
          if (E(r, i) != 0.0) terms.emplace_back(eta[r], E(r, i));
        }
        builder.add_row(std::move(terms), lp::RowType::Equal, b(i));
      }
      break;
    }
  }
  return expr;
}

lp::Solution solve_checked(const lp::LinearProgram& program) {
  lp::Solution sol = lp::solve(program);
  if (sol.status == lp::Status::Infeasible) {
    throw InfeasibleClass("saddle LP is infeasible; a class is empty");
  }
  if (sol.status == lp::Status::Unbounded) {
    throw UnboundedObjective("saddle LP is unbounded; a class is unbounded");
  }
  return sol;
}

Vec project_to_class(const FunctionClass& fc, Vec x) {
  if (fc.variant() == FunctionClass::Variant::Box) {
    x = x.cwiseMax(fc.lower()).cwiseMin(fc.upper());
  }
  return x;
}

double inner_max(const Game& g, const Vec& x, const FunctionClass& inner, Vec* arg) {
  AffineOptimum opt = vertex_optimum_affine(inner, g.inner_coeff(x), OptSense::Maximize);
  if (arg) *arg = std::move(opt.arg);
  return g.c + g.a.dot(x) + opt.value;
}

SaddleResult inf_sup(const Game& g, const FunctionClass& outer, const FunctionClass& inner) {
  SaddleResult result;
  if (!outer.is_convex() || outer.variant() == FunctionClass::Variant::Singleton) {
    result.method = SolveMethod::Enumeration;
    bool first = true;
    for (const Vec& x : outer.members()) {
      Vec arg;
      const double v = inner_max(g, x, inner, &arg);
      if (first || v < result.value) {
        first = false;
        result.value = v;
        result.outer_arg = x;
        result.inner_arg = std::move(arg);
      }
    }
    result.lp_objective = result.value;
    return result;
  }

  LpBuilder builder;
  const std::vector<int> x = add_outer_variables(builder, outer);
  for (int k = 0; k < outer.dimension(); ++k) builder.add_cost(x[k], g.a(k));
  const Expr expr = add_sup_epigraph(builder, x, g.b, g.M, inner);
  for (const auto& [var, c] : expr.terms) builder.add_cost(var, c);
  const lp::Solution sol = solve_checked(builder.build(g.c + expr.constant));

  result.method = SolveMethod::LP;
  result.lp_status = sol.status;
  result.lp_objective = sol.objective;
  result.lp_iterations = sol.iterations;
  result.outer_arg = project_to_class(outer, sol.x.head(outer.dimension()));
  result.value = inner_max(g, result.outer_arg, inner, &result.inner_arg);
  return result;
}

SaddleResult negate(SaddleResult r) {
  r.value = -r.value;
  r.lp_objective = -r.lp_objective;
  return r;
}

}  // namespace

AffineOptimum inner_optimum(const BiAffineLoss& loss, const Vec& outer_point,
                            const FunctionClass& inner, Role outer_role, OptSense sense) {
  const Game g = make_game(loss, outer_role);
  if (outer_point.size() != g.a.size() || inner.dimension() != g.b.size()) {
    throw DimensionMismatch("outer point or inner class does not match the loss");
  }
  AffineOptimum opt = vertex_optimum_affine(inner, g.inner_coeff(outer_point), sense);
  opt.value += g.c + g.a.dot(outer_point);
  return opt;
}

SaddleResult solve_saddle(const BiAffineLoss& loss, const FunctionClass& outer,
                          const FunctionClass& inner, Role outer_role, Order order) {
  check_dimensions(loss, outer, inner, outer_role);
  const Game g = make_game(loss, outer_role);
  if (order == Order::InfSup) return inf_sup(g, outer, inner);
  return negate(inf_sup(g.negated(), outer, inner));
}

SaddleResult solve_abs_saddle(const BiAffineLoss& loss, const FunctionClass& outer,
                              const FunctionClass& inner, Role outer_role) {
  check_dimensions(loss, outer, inner, outer_role);
  const Game g = make_game(loss, outer_role);
  const Game neg = g.negated();

  auto evaluate = [&](const Vec& x, Vec* arg) {
    Vec hi_arg;
    Vec lo_arg;
    const double hi = inner_max(g, x, inner, &hi_arg);
    const double lo = -inner_max(neg, x, inner, &lo_arg);
    if (hi >= -lo) {
      if (arg) *arg = std::move(hi_arg);
      return hi;
    }
    if (arg) *arg = std::move(lo_arg);
    return -lo;
  };

  SaddleResult result;
  if (!outer.is_convex() || outer.variant() == FunctionClass::Variant::Singleton) {
    result.method = SolveMethod::Enumeration;
    bool first = true;
    for (const Vec& x : outer.members()) {
      Vec arg;
      const double v = evaluate(x, &arg);
      if (first || v < result.value) {
        first = false;
        result.value = v;
        result.outer_arg = x;
        result.inner_arg = std::move(arg);
      }
    }
    result.lp_objective = result.value;
    return result;
  }

  LpBuilder builder;
  const std::vector<int> x = add_outer_variables(builder, outer);
  const int z = builder.add_variable(-lp::kInf, lp::kInf, 1.0);
  for (const Game* side : {&g, &neg}) {
    const Expr expr = add_sup_epigraph(builder, x, side->b, side->M, inner);
    // z >= c + a.x + expr
    std::vector<std::pair<int, double>> terms{{z, 1.0}};
    for (int k = 0; k < outer.dimension(); ++k) {
      if (side->a(k) != 0.0) terms.emplace_back(x[k], -side->a(k));
    }
    for (const auto& [var, c] : expr.terms) terms.emplace_back(var, -c);
    builder.add_row(std::move(terms), lp::RowType::GreaterEqual, side->c + expr.constant);
  }
  const lp::Solution sol = solve_checked(builder.build(0.0));
  result.method = SolveMethod::LP;
  result.lp_status = sol.status;
  result.lp_objective = sol.objective;
  result.lp_iterations = sol.iterations;
  result.outer_arg = project_to_class(outer, sol.x.head(outer.dimension()));
  result.value = evaluate(result.outer_arg, &result.inner_arg);
  return result;
}

SaddleResult solve_regularized_outer(const BiAffineLoss& loss, const FunctionClass& w_class,
                                     const FunctionClass& q_class, const Regularizer& reg,
                                     const Vec& mu, BoundSide side,
                                     const SubgradientOptions& options) {
  check_dimensions(loss, w_class, q_class, Role::W);
  if (mu.size() != w_class.dimension()) throw DimensionMismatch("mu has wrong length");
  if (reg.lambda < 0.0) throw InvalidModel("regularization weight must be nonnegative");
  if (w_class.variant() == FunctionClass::Variant::Polytope) {
    throw SolverFailure("regularized bounds support box, finite or singleton W classes only");
  }
  // Minimize F(w) = sign * (c + a.w + opt_q G(w, q)) + f(w); the bound is
  // sign * F at the best point.
  const Game g = make_game(loss, Role::W);
  const Game h = side == BoundSide::Upper ? g : g.negated();
  const double sign = side == BoundSide::Upper ? 1.0 : -1.0;

  auto objective = [&](const Vec& w, Vec* q_arg) {
    return inner_max(h, w, q_class, q_arg) + reg.value(w, mu);
  };

  SaddleResult best;
  best.method = w_class.variant() == FunctionClass::Variant::Box ? SolveMethod::Subgradient
                                                                 : SolveMethod::Enumeration;
  double best_f = 0.0;
  bool have_best = false;
  auto consider = [&](const Vec& w, bool converged) {
    Vec q_arg;
    const double f = objective(w, &q_arg);
    if (!have_best || f < best_f) {
      have_best = true;
      best_f = f;
      best.outer_arg = w;
      best.inner_arg = std::move(q_arg);
      best.converged = converged;
    }
  };

  if (w_class.variant() != FunctionClass::Variant::Box) {
    for (const Vec& w : w_class.members()) consider(w, true);
    best.value = sign * best_f;
    best.lp_objective = best.value;
    return best;
  }

  const int n = w_class.dimension();
  std::vector<Vec> starts;
  starts.push_back(solve_saddle(loss, w_class, q_class, Role::W,
                                side == BoundSide::Upper ? Order::InfSup : Order::SupInf)
                       .outer_arg);
  const double reg_min = reg.kind == RegularizerKind::Quadratic ? 0.0 : 1.0;
  starts.push_back(project_to_class(w_class, Vec::Constant(n, reg_min)));
  starts.push_back(0.5 * (w_class.lower() + w_class.upper()));
  for (int k = static_cast<int>(starts.size()); k < options.starts; ++k) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k)));
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.uniform(w_class.lower()(i), w_class.upper()(i));
    starts.push_back(std::move(w));
  }
  if (static_cast<int>(starts.size()) > options.starts) starts.resize(std::max(1, options.starts));

  const double width = (w_class.upper() - w_class.lower()).maxCoeff();
  for (const Vec& start : starts) {
    Vec current = start;
    Vec q_arg;
    double current_best = objective(current, &q_arg);
    Vec start_best = current;
    bool converged = false;
    double scale = width > 0.0 ? width : 0.0;
    for (int phase = 0; phase < options.max_phases && scale > 0.0; ++phase) {
      const double phase_start = current_best;
      current = start_best;
      for (int k = 1; k <= options.phase_steps; ++k) {
        objective(current, &q_arg);
        const Vec grad = h.a + h.M * q_arg + reg.gradient(current, mu);
        const double norm = grad.norm();
        if (norm == 0.0) break;
        current = project_to_class(w_class, current - (scale / std::sqrt(double(k))) * grad / norm);
        const double f = objective(current, nullptr);
        if (f < current_best) {
          current_best = f;
          start_best = current;
        }
      }
      if (phase + 1 >= options.min_phases && phase_start - current_best < options.stall_tolerance) {
        converged = true;
        break;
      }
      scale *= 0.5;
    }
    if (scale == 0.0) converged = true;
    consider(start_best, converged);
  }
  best.value = sign * best_f;
  best.lp_objective = best.value;
  return best;
}

}  // namespace mvi
