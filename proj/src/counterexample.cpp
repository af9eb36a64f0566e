#include "mvi/counterexample.hpp"

#include "mvi/errors.hpp"

namespace mvi {

Counterexample make_counterexample(double epsilon, double gamma) {
  if (!(epsilon > 0.0)) throw InvalidModel("epsilon must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidModel("gamma must lie in (0, 1)");
  constexpr int kStates = 3;
  constexpr int kActions = 2;
  constexpr int kPairs = kStates * kActions;
  Mat p = Mat::Zero(kPairs, kStates);
  p(0 * kActions + 0, 0) = 1.0;
  p(0 * kActions + 1, 1) = 1.0;
  p(1 * kActions + 0, 1) = 1.0;
  p(1 * kActions + 1, 2) = 1.0;
  p(2 * kActions + 0, 2) = 1.0;
  p(2 * kActions + 1, 2) = 1.0;
  Vec r = Vec::Zero(kPairs);
  r(0) = 1.0;

  TabularMdp mdp(kStates, kActions, std::move(p), std::move(r), 1.0, gamma, 0);
  Policy policy = Policy::uniform(kStates, kActions);
  const Vec mu = Vec::Constant(kPairs, 1.0 / kPairs);
  const Vec q_pi = solve_q_pi(mdp, policy);

  Vec bump = Vec::Zero(kPairs);
  bump(1 * kActions + 0) = epsilon;
  bump(1 * kActions + 1) = epsilon;
  FunctionClass q_class = FunctionClass::finite_set({q_pi + bump, q_pi - bump});

  const Mat nonneg = -Mat::Identity(kPairs, kPairs);
  Mat normalization = mu.transpose();
  FunctionClass w_class = FunctionClass::polytope(nonneg, Vec::Zero(kPairs), normalization,
                                                  Vec::Constant(1, 1.0 / (1.0 - gamma)));
  return {std::move(mdp), std::move(policy), mu, q_pi, std::move(q_class), std::move(w_class)};
}

}  // namespace mvi
