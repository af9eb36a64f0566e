#pragma once

#include <string>

#include "mvi/function_class.hpp"
#include "mvi/lp.hpp"
#include "mvi/mdp.hpp"

namespace mvi {

/// L(w, q) = constant + nu . q + rho . w + w' K q, with w indexing rows of K
/// and q indexing its columns.
struct BiAffineLoss {
  double constant = 0.0;
  Vec nu;
  Vec rho;
  Mat K;

  int w_dimension() const noexcept { return static_cast<int>(K.rows()); }
  int q_dimension() const noexcept { return static_cast<int>(K.cols()); }
  double value(const Vec& w, const Vec& q) const;
  void check_shape() const;
};

/// Exact-expectation loss: nu = d0(s) pi(a|s), rho = mu R, K = diag(mu)(gamma P Pi - I).
BiAffineLoss build_exact_loss(const TabularMdp& mdp, const Policy& policy, const Vec& mu);

/// The two projections of the loss: L = rho . w + L_w and L = nu . q + L_q.
BiAffineLoss w_side_loss(const BiAffineLoss& loss);
BiAffineLoss q_side_loss(const BiAffineLoss& loss);

enum class Role { W, Q };
enum class Order { InfSup, SupInf };
enum class SolveMethod { LP, Enumeration, Grid, Subgradient };

const char* to_string(SolveMethod method);

struct SaddleResult {
  /// Exact loss value of the inner optimum at outer_arg.
  double value = 0.0;
  Vec outer_arg;
  Vec inner_arg;
  SolveMethod method = SolveMethod::LP;
  lp::Status lp_status = lp::Status::Optimal;
  /// Optimal value reported by the joint LP (equals value up to LP tolerance).
  double lp_objective = 0.0;
  long lp_iterations = 0;
  /// False only for subgradient solves that hit their step budget.
  bool converged = true;
};

/// inf over outer of sup over inner (InfSup) or sup-inf (SupInf) of the loss.
/// outer_role says whether the outer class holds w or q.
SaddleResult solve_saddle(const BiAffineLoss& loss, const FunctionClass& outer,
                          const FunctionClass& inner, Role outer_role, Order order);

/// min over outer of sup over inner of |L(w, q)|, the naive-interval half-width.
SaddleResult solve_abs_saddle(const BiAffineLoss& loss, const FunctionClass& outer,
                              const FunctionClass& inner, Role outer_role);

/// Value of the inner problem at a fixed outer point.
AffineOptimum inner_optimum(const BiAffineLoss& loss, const Vec& outer_point,
                            const FunctionClass& inner, Role outer_role, OptSense sense);

enum class RegularizerKind { Quadratic, ShiftedQuadratic };

const char* to_string(RegularizerKind kind);

/// f(w) = lambda w^2 (Quadratic) or lambda (w - 1)^2 (ShiftedQuadratic),
/// averaged under mu.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::Quadratic;
  double lambda = 0.0;

  double value(const Vec& w, const Vec& mu) const;
  Vec gradient(const Vec& w, const Vec& mu) const;
};

struct SubgradientOptions {
  int starts = 8;
  int phase_steps = 200;
  int min_phases = 8;
  int max_phases = 40;
  double stall_tolerance = 1e-7;
  unsigned long long seed = 0x5eed;
};

/// Regularized w-side bounds: Upper gives inf_w (sup_q L + E_mu[f(w)]),
/// Lower gives sup_w (inf_q L - E_mu[f(w)]). The W class (outer) must be a
/// Box, FiniteSet or Singleton. The value is the exact objective at the best
/// feasible point found, so it is a valid one-sided bound whether or not the
/// method converged.
enum class BoundSide { Upper, Lower };

SaddleResult solve_regularized_outer(const BiAffineLoss& loss, const FunctionClass& w_class,
                                     const FunctionClass& q_class, const Regularizer& reg,
                                     const Vec& mu, BoundSide side,
                                     const SubgradientOptions& options = {});

}  // namespace mvi
