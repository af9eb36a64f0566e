#include "mvi/interval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvi/errors.hpp"

namespace mvi {

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::UpperW: return "UB_w";
    case BoundKind::LowerW: return "LB_w";
    case BoundKind::UpperQ: return "UB_q";
    case BoundKind::LowerQ: return "LB_q";
  }
  return "unknown";
}

const char* to_string(LossMode mode) { return mode == LossMode::Exact ? "exact" : "empirical"; }

const char* to_string(Diagnosis diagnosis) {
  switch (diagnosis) {
    case Diagnosis::Consistent: return "consistent";
    case Diagnosis::WMisspecified: return "w_class_suspected_misspecified";
    case Diagnosis::QMisspecified: return "q_class_suspected_misspecified";
  }
  return "unknown";
}

const char* to_string(NaiveStyle style) { return style == NaiveStyle::MWL ? "MWL" : "MQL"; }

BoundResult compute_bound(BoundKind kind, const BiAffineLoss& loss, const FunctionClass& q_class,
                          const FunctionClass& w_class, LossMode mode) {
  BoundResult result;
  result.kind = kind;
  result.mode = mode;
  const bool w_outer = kind == BoundKind::UpperW || kind == BoundKind::LowerW;
  const Order order =
      (kind == BoundKind::UpperW || kind == BoundKind::UpperQ) ? Order::InfSup : Order::SupInf;
  if (w_outer) {
    result.detail = solve_saddle(loss, w_class, q_class, Role::W, order);
    result.w = result.detail.outer_arg;
    result.q = result.detail.inner_arg;
  } else {
    result.detail = solve_saddle(loss, q_class, w_class, Role::Q, order);
    result.q = result.detail.outer_arg;
    result.w = result.detail.inner_arg;
  }
  result.value = result.detail.value;
  if (!std::isfinite(result.value)) throw SolverFailure("bound value is not finite");
  return result;
}

ValueInterval unified_interval(const BiAffineLoss& loss, const FunctionClass& q_class,
                               const FunctionClass& w_class, LossMode mode) {
  ValueInterval out;
  out.upper_w = compute_bound(BoundKind::UpperW, loss, q_class, w_class, mode);
  out.lower_w = compute_bound(BoundKind::LowerW, loss, q_class, w_class, mode);
  out.upper_q = compute_bound(BoundKind::UpperQ, loss, q_class, w_class, mode);
  out.lower_q = compute_bound(BoundKind::LowerQ, loss, q_class, w_class, mode);

  const double w_side = out.upper_w.value;
  const double q_side = out.upper_q.value;
  out.low = std::min(w_side, q_side);
  out.high = std::max(w_side, q_side);
  out.reversed = w_side < q_side - kReversalThreshold;
  if (out.reversed) {
    out.diagnosis = Diagnosis::QMisspecified;
  } else if (w_side > q_side + kReversalThreshold) {
    out.diagnosis = Diagnosis::WMisspecified;
  } else {
    out.diagnosis = Diagnosis::Consistent;
  }

  if (q_class.is_convex() && w_class.is_convex()) {
    const double gap1 = std::abs(out.upper_w.value - out.lower_q.value);
    const double gap2 = std::abs(out.upper_q.value - out.lower_w.value);
    if (gap1 > kMinimaxTolerance || gap2 > kMinimaxTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "paired bounds disagree for convex classes: |UB_w - LB_q| = " << gap1
         << ", |UB_q - LB_w| = " << gap2;
      throw SolverFailure("interval-engine", os.str());
    }
  }
  return out;
}

ValueInterval unified_interval(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                               const FunctionClass& q_class, const FunctionClass& w_class) {
  return unified_interval(build_exact_loss(mdp, policy, mu), q_class, w_class, LossMode::Exact);
}

PointEstimate point_estimate(const ValueInterval& interval) {
  return {0.5 * (interval.low + interval.high), 0.5 * (interval.high - interval.low)};
}

NaiveInterval naive_interval(NaiveStyle style, const BiAffineLoss& loss,
                             const FunctionClass& q_class, const FunctionClass& w_class) {
  NaiveInterval out;
  out.style = style;
  if (style == NaiveStyle::MWL) {
    out.detail = solve_abs_saddle(w_side_loss(loss), w_class, q_class, Role::W);
    out.arg = out.detail.outer_arg;
    out.center = loss.rho.dot(out.arg);
  } else {
    out.detail = solve_abs_saddle(q_side_loss(loss), q_class, w_class, Role::Q);
    out.arg = out.detail.outer_arg;
    out.center = loss.nu.dot(out.arg);
  }
  out.half_width = out.detail.value;
  out.low = out.center - out.half_width;
  out.high = out.center + out.half_width;
  return out;
}

RegularizedInterval regularized_interval(const BiAffineLoss& loss, const FunctionClass& q_class,
                                         const FunctionClass& w_class, const Vec& mu,
                                         const Regularizer& reg,
                                         const SubgradientOptions& options) {
  RegularizedInterval out;
  out.upper = solve_regularized_outer(loss, w_class, q_class, reg, mu, BoundSide::Upper, options);
  out.lower = solve_regularized_outer(loss, w_class, q_class, reg, mu, BoundSide::Lower, options);
  out.high = out.upper.value;
  out.low = out.lower.value;
  out.converged = out.upper.converged && out.lower.converged;
  return out;
}

BiAffineLoss build_behavior_aware_loss(const TabularMdp& mdp, const Policy& policy,
                                       const Policy& behavior, const Vec& mu_state) {
  check_compatible(mdp, policy);
  check_compatible(mdp, behavior);
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  if (mu_state.size() != ns) throw DimensionMismatch("state distribution has wrong length");
  if ((mu_state.array() < 0.0).any() || std::abs(mu_state.sum() - 1.0) > 1e-9) {
    throw InvalidModel("state distribution must be a distribution");
  }
  for (int s = 0; s < ns; ++s) {
    if (mu_state(s) <= 0.0) continue;
    for (int a = 0; a < na; ++a) {
      if (policy(s, a) > 0.0 && behavior(s, a) <= 0.0) {
        throw UnsupportedAction("target policy takes action " + std::to_string(a) + " in state " +
                                std::to_string(s) + " where the behavior policy never does");
      }
    }
  }
  // E over (s, a) ~ mu_state pi_b of rho(s, a) g(s, a) equals
  // mu_state(s) sum_a pi(a|s) g(s, a) once the support condition holds.
  BiAffineLoss loss;
  loss.nu = mdp.initial();
  loss.rho = Vec::Zero(ns);
  loss.K = Mat::Zero(ns, ns);
  const Mat p_pi = state_transition(mdp, policy);
  for (int s = 0; s < ns; ++s) {
    double reward = 0.0;
    for (int a = 0; a < na; ++a) reward += policy(s, a) * mdp.reward(s, a);
    loss.rho(s) = mu_state(s) * reward;
    loss.K.row(s) = mu_state(s) * mdp.gamma() * p_pi.row(s);
    loss.K(s, s) -= mu_state(s);
  }
  return loss;
}

ValueInterval behavior_aware_bounds(const TabularMdp& mdp, const Policy& policy,
                                    const Policy& behavior, const Vec& mu_state,
                                    const FunctionClass& v_class, const FunctionClass& w_class) {
  if (v_class.index_space() != IndexSpace::State || w_class.index_space() != IndexSpace::State) {
    throw DimensionMismatch("behavior-aware bounds need state-indexed classes");
  }
  return unified_interval(build_behavior_aware_loss(mdp, policy, behavior, mu_state), v_class,
                          w_class, LossMode::Exact);
}

BiAffineLoss build_average_reward_loss(const TabularMdp& mdp, const Policy& policy,
                                       const Vec& mu) {
  check_compatible(mdp, policy);
  const int n = mdp.n_pairs();
  if (mu.size() != n) throw DimensionMismatch("mu must have one entry per state-action pair");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw InvalidModel("mu must be a distribution over state-action pairs");
  }
  BiAffineLoss loss;
  loss.nu = Vec::Zero(n);
  loss.rho = mu.cwiseProduct(mdp.mean_reward());
  loss.K = mu.asDiagonal() * (state_action_transition(mdp, policy) - Mat::Identity(n, n));
  return loss;
}

ValueInterval average_reward_bounds(const TabularMdp& mdp, const Policy& policy, const Vec& mu,
                                    const FunctionClass& q_class, const FunctionClass& w_class) {
  stationary_distribution(mdp, policy);  // ergodicity check
  return unified_interval(build_average_reward_loss(mdp, policy, mu), q_class, w_class,
                          LossMode::Exact);
}

}  // namespace mvi
