#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mvi/function_class.hpp"
#include "mvi/mdp.hpp"

namespace mvi::testing {

/// Single state, n_actions actions each paying `reward`, gamma given.
inline TabularMdp single_state(double reward, double gamma, int n_actions = 1) {
  return TabularMdp(1, n_actions, Mat::Ones(n_actions, 1), Vec::Constant(n_actions, reward),
                    std::max(1.0, reward), gamma, 0);
}

inline Vec random_vector(std::mt19937_64& gen, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(gen);
  return v;
}

/// Box of half-width h around center.
inline FunctionClass box_around(const Vec& center, double h, IndexSpace space = IndexSpace::StateAction) {
  return FunctionClass::box(center.array() - h, center.array() + h, space);
}

/// One randomized suite instance: sizes, discount and distributions drawn
/// from the seed.
struct Instance {
  TabularMdp mdp;
  Policy policy;
  Vec mu;
  Vec q_pi;
  Vec w_pi;
  double j = 0.0;
};

inline Instance random_instance(std::uint64_t seed, int min_states = 2, int max_states = 8) {
  std::mt19937_64 gen(seed);
  const int ns = std::uniform_int_distribution<int>(min_states, max_states)(gen);
  const int na = std::uniform_int_distribution<int>(2, 3)(gen);
  const double gammas[] = {0.5, 0.9, 0.99};
  const double gamma = gammas[std::uniform_int_distribution<int>(0, 2)(gen)];
  TabularMdp mdp = generate_random_mdp(seed * 31 + 1, ns, na, gamma);
  Policy policy = random_policy(seed * 31 + 2, ns, na);
  Vec mu = random_distribution(seed * 31 + 3, ns * na, 0.5);
  Vec q = solve_q_pi(mdp, policy);
  Vec w = importance_weights(solve_d_pi(mdp, policy), mu, na);
  const double j = j_pi(mdp, policy);
  return {std::move(mdp), std::move(policy), std::move(mu), std::move(q), std::move(w), j};
}

}  // namespace mvi::testing
