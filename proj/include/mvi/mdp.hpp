#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace mvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Finite MDP with mean rewards. State-action vectors are flattened with
/// index(s, a) = s * n_actions + a throughout the library.
class TabularMdp {
 public:
  /// transition has one row per (s, a) pair and one column per next state;
  /// mean_reward has one entry per pair; initial is a distribution over states.
  TabularMdp(int n_states, int n_actions, Mat transition, Vec mean_reward, double r_max,
             double gamma, Vec initial);

  /// Same as above with a deterministic initial state.
  TabularMdp(int n_states, int n_actions, Mat transition, Vec mean_reward, double r_max,
             double gamma, int initial_state);

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }
  int n_pairs() const noexcept { return n_states_ * n_actions_; }
  int index(int s, int a) const noexcept { return s * n_actions_ + a; }

  const Mat& transition() const noexcept { return transition_; }
  const Vec& mean_reward() const noexcept { return mean_reward_; }
  const Vec& initial() const noexcept { return initial_; }
  double r_max() const noexcept { return r_max_; }
  double gamma() const noexcept { return gamma_; }

  double p(int s, int a, int next) const { return transition_(index(s, a), next); }
  double reward(int s, int a) const { return mean_reward_(index(s, a)); }

  bool operator==(const TabularMdp& other) const;

 private:
  void validate() const;

  int n_states_;
  int n_actions_;
  Mat transition_;
  Vec mean_reward_;
  double r_max_;
  double gamma_;
  Vec initial_;
};

/// Row-stochastic action distribution per state.
class Policy {
 public:
  explicit Policy(Mat action_probs);

  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(const std::vector<int>& actions, int n_actions);
  /// Every deterministic policy, enumerated with state 0 as the least
  /// significant digit.
  static std::vector<Policy> all_deterministic(int n_states, int n_actions);

  int n_states() const noexcept { return static_cast<int>(probs_.rows()); }
  int n_actions() const noexcept { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Mat& probs() const noexcept { return probs_; }

  bool operator==(const Policy& other) const { return probs_ == other.probs_; }

 private:
  Mat probs_;
};

void check_compatible(const TabularMdp& mdp, const Policy& policy);

/// State-action transition matrix under a policy:
/// (P Pi)[(s,a), (s',a')] = P(s'|s,a) pi(a'|s').
Mat state_action_transition(const TabularMdp& mdp, const Policy& policy);

/// State transition matrix P_pi[s, s'] = sum_a pi(a|s) P(s'|s,a).
Mat state_transition(const TabularMdp& mdp, const Policy& policy);

/// Coefficients of q(s0, pi): d0(s) pi(a|s), the initial state-action measure.
Vec initial_state_action(const TabularMdp& mdp, const Policy& policy);

/// Q^pi by a dense LU solve of (I - gamma P Pi) Q = R.
Vec solve_q_pi(const TabularMdp& mdp, const Policy& policy);

/// V^pi(s) = sum_a pi(a|s) Q^pi(s, a).
Vec solve_v_pi(const TabularMdp& mdp, const Policy& policy);

/// Discounted state-action occupancy; total mass 1/(1 - gamma).
Vec solve_d_pi(const TabularMdp& mdp, const Policy& policy);

/// Discounted state occupancy d^pi(s) = sum_a d^pi(s, a).
Vec state_occupancy(const TabularMdp& mdp, const Policy& policy);

/// Expected discounted return Q^pi(s0, pi).
double j_pi(const TabularMdp& mdp, const Policy& policy);

/// Pointwise d_pi / mu. Throws UnsupportedOccupancy listing every pair with
/// mu = 0 < d_pi. Pairs with both zero get weight 0.
Vec importance_weights(const Vec& d_pi, const Vec& mu, int n_actions);

/// Unknown states become absorbing self-loops paying r_max (Rmax) or 0 (Rmin).
TabularMdp build_rmax(const TabularMdp& mdp, const std::set<int>& known_states);
TabularMdp build_rmin(const TabularMdp& mdp, const std::set<int>& known_states);

/// Stationary state-action distribution of an ergodic (unichain with every
/// state recurrent) chain. Throws NonErgodicChain otherwise.
Vec stationary_distribution(const TabularMdp& mdp, const Policy& policy);

/// Long-run average reward E_{d^pi}[r] under the stationary distribution.
double average_reward(const TabularMdp& mdp, const Policy& policy);

/// Differential action-value function h with h = r - J + P Pi h, normalized so
/// that E_{d^pi}[h] = 0.
Vec differential_q(const TabularMdp& mdp, const Policy& policy);

/// Random MDP: flat-Dirichlet transition rows, rewards uniform in [0, r_max],
/// initial state 0.
TabularMdp generate_random_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma,
                               double r_max = 1.0);

/// Chain of `length` states starting at 0. Action 1 moves right (left with
/// probability slip_prob), action 0 moves left. Reward 0.1 for action 0 at
/// the left end, 1.0 for action 1 at the right end. length 1 is a single
/// absorbing state.
TabularMdp generate_chain(int length, double slip_prob, double gamma);

/// Random stochastic policy with flat-Dirichlet rows.
Policy random_policy(std::uint64_t seed, int n_states, int n_actions);

/// Random distribution over n points: mixture of `floor` uniform mass and a
/// flat-Dirichlet draw. floor = 1 gives the uniform distribution.
Vec random_distribution(std::uint64_t seed, int n, double floor);

}  // namespace mvi
