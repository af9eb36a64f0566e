#pragma once

#include <utility>
#include <vector>

#include "mvi/mdp.hpp"

namespace mvi {

enum class IndexSpace { StateAction, State };

enum class OptSense { Maximize, Minimize };

const char* to_string(IndexSpace space);

/// A set of real vectors used as the Q or W class. Polytopes are given by
/// inequality rows A x <= b plus optional equality rows E x = e.
class FunctionClass {
 public:
  enum class Variant { Box, Polytope, FiniteSet, Singleton };

  static FunctionClass box(Vec lower, Vec upper, IndexSpace space = IndexSpace::StateAction);
  /// Validates nonemptiness and boundedness with LP probes along +-e_i.
  static FunctionClass polytope(Mat ineq_lhs, Vec ineq_rhs, Mat eq_lhs, Vec eq_rhs,
                                IndexSpace space = IndexSpace::StateAction);
  static FunctionClass finite_set(std::vector<Vec> members,
                                  IndexSpace space = IndexSpace::StateAction);
  static FunctionClass singleton(Vec value, IndexSpace space = IndexSpace::StateAction);

  Variant variant() const noexcept { return variant_; }
  IndexSpace index_space() const noexcept { return space_; }
  int dimension() const noexcept { return static_cast<int>(lower_.size()); }

  /// Box bounds, or the tight coordinate ranges of the other variants.
  const Vec& lower() const noexcept { return lower_; }
  const Vec& upper() const noexcept { return upper_; }

  const Mat& ineq_lhs() const noexcept { return ineq_lhs_; }
  const Vec& ineq_rhs() const noexcept { return ineq_rhs_; }
  const Mat& eq_lhs() const noexcept { return eq_lhs_; }
  const Vec& eq_rhs() const noexcept { return eq_rhs_; }

  /// Members of a FiniteSet; the single vector of a Singleton.
  const std::vector<Vec>& members() const noexcept { return members_; }

  bool is_convex() const noexcept { return variant_ != Variant::FiniteSet; }

  /// Largest absolute coordinate value over the class.
  double range_cap() const;

  /// A deterministic member (box center, first member, or polytope LP point).
  Vec some_member() const;

 private:
  FunctionClass() = default;

  Variant variant_ = Variant::Box;
  IndexSpace space_ = IndexSpace::StateAction;
  Vec lower_;
  Vec upper_;
  Mat ineq_lhs_;
  Vec ineq_rhs_;
  Mat eq_lhs_;
  Vec eq_rhs_;
  std::vector<Vec> members_;
  Vec interior_point_;
};

inline constexpr double kContainsTolerance = 1e-9;

/// Membership up to infinity-norm slack tol. FiniteSet membership is an
/// exact match against some member within tol.
bool contains(const FunctionClass& fc, const Vec& f, double tol = kContainsTolerance);

/// Membership in the convex hull; for FiniteSet this solves a feasibility LP
/// over convex weights.
bool hull_contains(const FunctionClass& fc, const Vec& f, double tol = kContainsTolerance);

struct AffineOptimum {
  double value = 0.0;
  Vec arg;
};

/// Optimum of coeff . x over the class. Boxes use the sign rule with zero
/// coefficients resolved to the lower bound; finite sets break ties by the
/// lowest member index; polytopes are solved as an LP.
AffineOptimum vertex_optimum_affine(const FunctionClass& fc, const Vec& coeff, OptSense sense);

/// Q = [0, r_max/(1-gamma)] and W = [0, w_cap] on every state-action pair.
std::pair<FunctionClass, FunctionClass> canonical_box_classes(const TabularMdp& mdp,
                                                              double w_cap);

/// |known pairs| / (1 - gamma): the W cap that makes the uniform-on-known
/// data distribution's weights realizable.
double canonical_w_cap(int n_known_pairs, double gamma);

}  // namespace mvi
