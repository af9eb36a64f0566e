#include "mvi/function_class.hpp"

#include <cmath>
#include <string>

#include "mvi/errors.hpp"
#include "mvi/lp.hpp"

namespace mvi {

const char* to_string(IndexSpace space) {
  return space == IndexSpace::StateAction ? "state_action" : "state";
}

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DimensionMismatch(std::string(what) + " has non-finite entries");
}

lp::LinearProgram polytope_program(const FunctionClass& fc, lp::Sense sense) {
  lp::LinearProgram program(sense);
  const int n = fc.dimension();
  for (int i = 0; i < n; ++i) program.add_variable(-lp::kInf, lp::kInf);
  for (int r = 0; r < fc.ineq_lhs().rows(); ++r) {
    program.add_row(fc.ineq_lhs().row(r).transpose(), lp::RowType::LessEqual, fc.ineq_rhs()(r));
  }
  for (int r = 0; r < fc.eq_lhs().rows(); ++r) {
    program.add_row(fc.eq_lhs().row(r).transpose(), lp::RowType::Equal, fc.eq_rhs()(r));
  }
  return program;
}

}  // namespace

FunctionClass FunctionClass::box(Vec lower, Vec upper, IndexSpace space) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionMismatch("box bounds must be nonempty and of equal length");
  }
  require_finite(lower, "box lower bound");
  require_finite(upper, "box upper bound");
  for (int i = 0; i < lower.size(); ++i) {
    if (lower(i) > upper(i)) {
      throw DimensionMismatch("box lower bound exceeds upper bound at coordinate " +
                              std::to_string(i));
    }
  }
  FunctionClass fc;
  fc.variant_ = Variant::Box;
  fc.space_ = space;
  fc.lower_ = std::move(lower);
  fc.upper_ = std::move(upper);
  fc.interior_point_ = 0.5 * (fc.lower_ + fc.upper_);
  return fc;
}

FunctionClass FunctionClass::polytope(Mat ineq_lhs, Vec ineq_rhs, Mat eq_lhs, Vec eq_rhs,
                                      IndexSpace space) {
  const Eigen::Index n = ineq_lhs.rows() > 0 ? ineq_lhs.cols() : eq_lhs.cols();
  if (n == 0) throw DimensionMismatch("polytope needs at least one row");
  if ((ineq_lhs.rows() > 0 && ineq_lhs.cols() != n) || (eq_lhs.rows() > 0 && eq_lhs.cols() != n) ||
      ineq_lhs.rows() != ineq_rhs.size() || eq_lhs.rows() != eq_rhs.size()) {
    throw DimensionMismatch("polytope rows and right-hand sides disagree in shape");
  }
  if (!ineq_lhs.allFinite() || !ineq_rhs.allFinite() || !eq_lhs.allFinite() ||
      !eq_rhs.allFinite()) {
    throw DimensionMismatch("polytope has non-finite entries");
  }
  FunctionClass fc;
  fc.variant_ = Variant::Polytope;
  fc.space_ = space;
  fc.ineq_lhs_ = ineq_lhs.rows() > 0 ? std::move(ineq_lhs) : Mat(0, n);
  fc.ineq_rhs_ = std::move(ineq_rhs);
  fc.eq_lhs_ = eq_lhs.rows() > 0 ? std::move(eq_lhs) : Mat(0, n);
  fc.eq_rhs_ = std::move(eq_rhs);
  fc.lower_ = Vec::Zero(n);
  fc.upper_ = Vec::Zero(n);

  lp::LinearProgram feasibility = polytope_program(fc, lp::Sense::Minimize);
  const lp::Solution point = lp::solve(feasibility);
  if (point.status != lp::Status::Optimal) throw InfeasibleClass("polytope class is empty");
  fc.interior_point_ = point.x;

  for (Eigen::Index i = 0; i < n; ++i) {
    for (const lp::Sense sense : {lp::Sense::Minimize, lp::Sense::Maximize}) {
      lp::LinearProgram probe = polytope_program(fc, sense);
      probe.set_cost(static_cast<int>(i), 1.0);
      const lp::Solution sol = lp::solve(probe);
      if (sol.status == lp::Status::Unbounded) {
        throw UnboundedObjective("polytope class is unbounded along coordinate " +
                                 std::to_string(i));
      }
      if (sol.status != lp::Status::Optimal) throw InfeasibleClass("polytope class is empty");
      (sense == lp::Sense::Minimize ? fc.lower_ : fc.upper_)(i) = sol.objective;
    }
  }
  return fc;
}

FunctionClass FunctionClass::finite_set(std::vector<Vec> members, IndexSpace space) {
  if (members.empty()) throw DimensionMismatch("finite class must have at least one member");
  const Eigen::Index n = members.front().size();
  if (n == 0) throw DimensionMismatch("finite class members must be nonempty vectors");
  for (const Vec& m : members) {
    if (m.size() != n) throw DimensionMismatch("finite class members differ in length");
    require_finite(m, "finite class member");
  }
  FunctionClass fc;
  fc.variant_ = Variant::FiniteSet;
  fc.space_ = space;
  fc.lower_ = members.front();
  fc.upper_ = members.front();
  for (const Vec& m : members) {
    fc.lower_ = fc.lower_.cwiseMin(m);
    fc.upper_ = fc.upper_.cwiseMax(m);
  }
  fc.interior_point_ = members.front();
  fc.members_ = std::move(members);
  return fc;
}

FunctionClass FunctionClass::singleton(Vec value, IndexSpace space) {
  if (value.size() == 0) throw DimensionMismatch("singleton class needs a nonempty vector");
  require_finite(value, "singleton member");
  FunctionClass fc;
  fc.variant_ = Variant::Singleton;
  fc.space_ = space;
  fc.lower_ = value;
  fc.upper_ = value;
  fc.interior_point_ = value;
  fc.members_ = {std::move(value)};
  return fc;
}

double FunctionClass::range_cap() const {
  return std::max(lower_.cwiseAbs().maxCoeff(), upper_.cwiseAbs().maxCoeff());
}

Vec FunctionClass::some_member() const { return interior_point_; }

bool contains(const FunctionClass& fc, const Vec& f, double tol) {
  if (f.size() != fc.dimension()) {
    throw DimensionMismatch("vector of length " + std::to_string(f.size()) +
                            " tested against class of dimension " +
                            std::to_string(fc.dimension()));
  }
  switch (fc.variant()) {
    case FunctionClass::Variant::Box:
      return ((fc.lower() - f).maxCoeff() <= tol) && ((f - fc.upper()).maxCoeff() <= tol);
    case FunctionClass::Variant::Polytope: {
      if (fc.ineq_lhs().rows() > 0 && (fc.ineq_lhs() * f - fc.ineq_rhs()).maxCoeff() > tol) {
        return false;
      }
      if (fc.eq_lhs().rows() > 0 &&
          (fc.eq_lhs() * f - fc.eq_rhs()).cwiseAbs().maxCoeff() > tol) {
        return false;
      }
      return true;
    }
    case FunctionClass::Variant::FiniteSet:
    case FunctionClass::Variant::Singleton:
      for (const Vec& m : fc.members()) {
        if ((m - f).cwiseAbs().maxCoeff() <= tol) return true;
      }
      return false;
  }
  return false;
}

bool hull_contains(const FunctionClass& fc, const Vec& f, double tol) {
  if (fc.variant() != FunctionClass::Variant::FiniteSet) return contains(fc, f, tol);
  if (f.size() != fc.dimension()) throw DimensionMismatch("hull query has wrong length");
  if (contains(fc, f, tol)) return true;
  const auto& members = fc.members();
  const int k = static_cast<int>(members.size());
  lp::LinearProgram program(lp::Sense::Minimize);
  for (int j = 0; j < k; ++j) program.add_variable(0.0, lp::kInf);
  program.add_row(Vec::Ones(k), lp::RowType::Equal, 1.0);
  for (int i = 0; i < fc.dimension(); ++i) {
    Vec row(k);
    for (int j = 0; j < k; ++j) row(j) = members[j](i);
    program.add_row(row, lp::RowType::LessEqual, f(i) + tol);
    program.add_row(row, lp::RowType::GreaterEqual, f(i) - tol);
  }
  return lp::solve(program).status == lp::Status::Optimal;
}

AffineOptimum vertex_optimum_affine(const FunctionClass& fc, const Vec& coeff, OptSense sense) {
  if (coeff.size() != fc.dimension()) throw DimensionMismatch("coefficient vector has wrong length");
  const double sign = sense == OptSense::Maximize ? 1.0 : -1.0;
  AffineOptimum out;
  switch (fc.variant()) {
    case FunctionClass::Variant::Box: {
      out.arg = fc.lower();
      for (int i = 0; i < fc.dimension(); ++i) {
        if (sign * coeff(i) > 0.0) out.arg(i) = fc.upper()(i);
      }
      out.value = coeff.dot(out.arg);
      return out;
    }
    case FunctionClass::Variant::FiniteSet:
    case FunctionClass::Variant::Singleton: {
      const auto& members = fc.members();
      int best = 0;
      double best_value = coeff.dot(members[0]);
      for (int j = 1; j < static_cast<int>(members.size()); ++j) {
        const double v = coeff.dot(members[j]);
        if (sign * v > sign * best_value) {
          best = j;
          best_value = v;
        }
      }
      out.arg = members[best];
      out.value = best_value;
      return out;
    }
    case FunctionClass::Variant::Polytope: {
      lp::LinearProgram program = polytope_program(
          fc, sense == OptSense::Maximize ? lp::Sense::Maximize : lp::Sense::Minimize);
      for (int i = 0; i < fc.dimension(); ++i) program.set_cost(i, coeff(i));
      const lp::Solution sol = lp::solve(program);
      if (sol.status == lp::Status::Unbounded) {
        throw UnboundedObjective("affine objective unbounded over polytope class");
      }
      if (sol.status != lp::Status::Optimal) throw InfeasibleClass("polytope class is empty");
      out.arg = sol.x;
      out.value = coeff.dot(out.arg);
      return out;
    }
  }
  return out;
}

std::pair<FunctionClass, FunctionClass> canonical_box_classes(const TabularMdp& mdp,
                                                              double w_cap) {
  if (!(w_cap > 0.0)) throw DimensionMismatch("w_cap must be positive");
  const int n = mdp.n_pairs();
  const double q_cap = mdp.r_max() / (1.0 - mdp.gamma());
  return {FunctionClass::box(Vec::Zero(n), Vec::Constant(n, q_cap)),
          FunctionClass::box(Vec::Zero(n), Vec::Constant(n, w_cap))};
}

double canonical_w_cap(int n_known_pairs, double gamma) {
  return static_cast<double>(n_known_pairs) / (1.0 - gamma);
}

}  // namespace mvi
