#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mvi/function_class.hpp"
#include "mvi/interval.hpp"
#include "mvi/mdp.hpp"
#include "mvi/saddle.hpp"

namespace mvi {

enum class PolicyObjective { LowerW, UpperW, LowerQ };

const char* to_string(PolicyObjective objective);

struct OptimizationOutcome {
  PolicyObjective objective = PolicyObjective::LowerW;
  int chosen_index = 0;
  /// Bound value for every policy in the class, in list order.
  std::vector<double> objective_values;
};

/// Builds the loss of a candidate policy (exact or empirical).
using LossBuilder = std::function<BiAffineLoss(const Policy&)>;

/// argmax over the explicit policy list of the chosen bound; ties go to the
/// lowest index.
OptimizationOutcome optimize_policy(PolicyObjective objective, const LossBuilder& loss_for,
                                    const std::vector<Policy>& policies,
                                    const FunctionClass& q_class, const FunctionClass& w_class);

/// Exact-expectation convenience wrappers.
OptimizationOutcome mlb_po(const TabularMdp& mdp, const Vec& mu,
                           const std::vector<Policy>& policies, const FunctionClass& q_class,
                           const FunctionClass& w_class);
OptimizationOutcome mub_po(const TabularMdp& mdp, const Vec& mu,
                           const std::vector<Policy>& policies, const FunctionClass& q_class,
                           const FunctionClass& w_class);
OptimizationOutcome mlb_po_qside(const TabularMdp& mdp, const Vec& mu,
                                 const std::vector<Policy>& policies,
                                 const FunctionClass& q_class, const FunctionClass& w_class);

struct IpmReport {
  /// sup over policies pi and q in the box of
  /// |E_{w mu}[T^pi q - q] - E_{d^pi_hat}[T^pi q - q]|.
  double ipm = 0.0;
  int maximizing_policy = 0;
  /// || w mu - d^pi_hat ||_1.
  double l1 = 0.0;
  /// 2 r_max / (1 - gamma) times l1; bounds ipm when the Q box lies within
  /// [-r_max/(1-gamma), r_max/(1-gamma)].
  double holder_bound = 0.0;
};

IpmReport ipm_diagnostic(const TabularMdp& mdp, const Vec& w, const Vec& mu, const Policy& pi_hat,
                         const FunctionClass& q_box, const std::vector<Policy>& policies);

struct RmaxCheckReport {
  std::vector<double> lower_w;
  std::vector<double> upper_w;
  std::vector<double> j_min;
  std::vector<double> j_max;
  double max_lower_deviation = 0.0;
  double max_upper_deviation = 0.0;
  int mlb_choice = 0;
  int mub_choice = 0;
  bool mlb_attains_max = false;
  bool mub_attains_max = false;
  /// Policies whose bounds deviate from the Rmin/Rmax values by more than the tolerance.
  std::vector<int> violations;
  bool passed = false;
};

/// Emulates the known-states data regime exactly (mu uniform over known
/// pairs, canonical box classes) and compares LB_w with J in the Rmin MDP
/// and UB_w with J in the Rmax MDP for every policy.
RmaxCheckReport rmax_equivalence_check(const TabularMdp& mdp, const std::set<int>& known_states,
                                       const std::vector<Policy>& policies,
                                       double tolerance = 1e-6);

/// Uniform distribution over the state-action pairs of the known states.
Vec uniform_on_states(const TabularMdp& mdp, const std::set<int>& states);

}  // namespace mvi
