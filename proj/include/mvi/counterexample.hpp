#pragma once

#include "mvi/function_class.hpp"
#include "mvi/mdp.hpp"

namespace mvi {

/// Three-state, two-action deterministic MDP where a non-convex Q class makes
/// the q-side interval invalid. s0 -a0-> s0 pays 1, s0 -a1-> s1,
/// s1 -a0-> s1, s1 -a1-> s2, and s2 is absorbing with zero reward. Target
/// and data distributions are uniform.
struct Counterexample {
  TabularMdp mdp;
  Policy policy;
  Vec mu;
  Vec q_pi;
  /// {Q^pi + eps I[s = s1], Q^pi - eps I[s = s1]}.
  FunctionClass q_class;
  /// {w >= 0 : E_mu[w] = 1 / (1 - gamma)}.
  FunctionClass w_class;
};

Counterexample make_counterexample(double epsilon, double gamma);

}  // namespace mvi
