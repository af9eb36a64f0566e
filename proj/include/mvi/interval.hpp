#pragma once

#include <string>

#include "mvi/function_class.hpp"
#include "mvi/mdp.hpp"
#include "mvi/saddle.hpp"

namespace mvi {

enum class BoundKind { UpperW, LowerW, UpperQ, LowerQ };
enum class LossMode { Exact, Empirical };
enum class Diagnosis { Consistent, WMisspecified, QMisspecified };

const char* to_string(BoundKind kind);
const char* to_string(LossMode mode);
const char* to_string(Diagnosis diagnosis);

/// Gap (in return units) beyond which the two sides of the unified interval
/// are considered ordered rather than tied.
inline constexpr double kReversalThreshold = 1e-8;
/// Maximum allowed gap between paired bounds for convex classes.
inline constexpr double kMinimaxTolerance = 1e-6;

struct BoundResult {
  BoundKind kind = BoundKind::UpperW;
  double value = 0.0;
  Vec w;
  Vec q;
  LossMode mode = LossMode::Exact;
  SaddleResult detail;
};

/// inf_w sup_q, sup_w inf_q, inf_q sup_w or sup_q inf_w of the loss.
BoundResult compute_bound(BoundKind kind, const BiAffineLoss& loss, const FunctionClass& q_class,
                          const FunctionClass& w_class, LossMode mode = LossMode::Exact);

struct ValueInterval {
  double low = 0.0;
  double high = 0.0;
  /// The w-side value (inf_w sup_q) fell below the q-side value (inf_q sup_w).
  bool reversed = false;
  Diagnosis diagnosis = Diagnosis::Consistent;
  BoundResult upper_w;
  BoundResult lower_w;
  BoundResult upper_q;
  BoundResult lower_q;

  double length() const { return high - low; }
  bool contains(double value, double tol = 0.0) const {
    return value >= low - tol && value <= high + tol;
  }
};

/// Computes all four bounds, sorts inf_w sup_q and inf_q sup_w into
/// [low, high] and diagnoses misspecification from their order. When both
/// classes are convex it also checks that the paired bounds agree and throws
/// SolverFailure if they do not.
ValueInterval unified_interval(const BiAffineLoss& loss, const FunctionClass& q_class,
                               const FunctionClass& w_class, LossMode mode = LossMode::Exact);

ValueInterval unified_interval(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                               const FunctionClass& q_class, const FunctionClass& w_class);

struct PointEstimate {
  double value = 0.0;
  double half_width = 0.0;
};

PointEstimate point_estimate(const ValueInterval& interval);

enum class NaiveStyle { MWL, MQL };

const char* to_string(NaiveStyle style);

/// center +- half_width, with the center taken at the minimizer of the
/// worst-case absolute projected loss.
struct NaiveInterval {
  NaiveStyle style = NaiveStyle::MWL;
  double center = 0.0;
  double half_width = 0.0;
  double low = 0.0;
  double high = 0.0;
  /// The minimizing w (MWL) or q (MQL).
  Vec arg;
  SaddleResult detail;
};

NaiveInterval naive_interval(NaiveStyle style, const BiAffineLoss& loss,
                             const FunctionClass& q_class, const FunctionClass& w_class);

struct RegularizedInterval {
  double low = 0.0;
  double high = 0.0;
  SaddleResult upper;
  SaddleResult lower;
  bool converged = true;
};

/// [sup_w (inf_q L - E_mu f(w)), inf_w (sup_q L + E_mu f(w))].
RegularizedInterval regularized_interval(const BiAffineLoss& loss, const FunctionClass& q_class,
                                         const FunctionClass& w_class, const Vec& mu,
                                         const Regularizer& reg,
                                         const SubgradientOptions& options = {});

/// State-indexed loss using known behavior action probabilities:
/// v(s0) + E_mu[w(s) (rho(s,a)(r + gamma v(s')) - v(s))] with
/// mu(s, a) = mu_state(s) pi_b(a|s). Throws UnsupportedAction when pi puts
/// mass on an action that pi_b never takes in a state with mu_state > 0.
BiAffineLoss build_behavior_aware_loss(const TabularMdp& mdp, const Policy& policy,
                                       const Policy& behavior, const Vec& mu_state);

/// Unified interval over state-indexed V and W classes.
ValueInterval behavior_aware_bounds(const TabularMdp& mdp, const Policy& policy,
                                    const Policy& behavior, const Vec& mu_state,
                                    const FunctionClass& v_class, const FunctionClass& w_class);

/// Average-reward loss E_w[r + q(s', pi) - q(s, a)]: nu = 0 and
/// K = diag(mu)(P Pi - I).
BiAffineLoss build_average_reward_loss(const TabularMdp& mdp, const Policy& policy,
                                       const Vec& mu);

/// Unified interval for the long-run average reward. Throws NonErgodicChain
/// if the chain induced by the policy is not ergodic.
ValueInterval average_reward_bounds(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                                    const FunctionClass& q_class, const FunctionClass& w_class);

}  // namespace mvi
