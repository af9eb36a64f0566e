#include "mvi/policy_opt.hpp"

#include <algorithm>
#include <cmath>

#include "mvi/errors.hpp"

namespace mvi {

const char* to_string(PolicyObjective objective) {
  switch (objective) {
    case PolicyObjective::LowerW: return "MLB-PO";
    case PolicyObjective::UpperW: return "MUB-PO";
    case PolicyObjective::LowerQ: return "MLB-PO-qside";
  }
  return "unknown";
}

OptimizationOutcome optimize_policy(PolicyObjective objective, const LossBuilder& loss_for,
                                    const std::vector<Policy>& policies,
                                    const FunctionClass& q_class, const FunctionClass& w_class) {
  if (policies.empty()) throw InvalidModel("policy class must be nonempty");
  const BoundKind kind = objective == PolicyObjective::LowerW   ? BoundKind::LowerW
                         : objective == PolicyObjective::UpperW ? BoundKind::UpperW
                                                                : BoundKind::LowerQ;
  OptimizationOutcome out;
  out.objective = objective;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const double v = compute_bound(kind, loss_for(policies[i]), q_class, w_class).value;
    out.objective_values.push_back(v);
    if (v > out.objective_values[out.chosen_index]) out.chosen_index = static_cast<int>(i);
  }
  return out;
}

namespace {

OptimizationOutcome exact_optimize(PolicyObjective objective, const TabularMdp& mdp,
                                   const Vec& mu, const std::vector<Policy>& policies,
                                   const FunctionClass& q_class, const FunctionClass& w_class) {
  return optimize_policy(
      objective, [&](const Policy& pi) { return build_exact_loss(mdp, pi, mu); }, policies,
      q_class, w_class);
}

}  // namespace

OptimizationOutcome mlb_po(const TabularMdp& mdp, const Vec& mu,
                           const std::vector<Policy>& policies, const FunctionClass& q_class,
                           const FunctionClass& w_class) {
  return exact_optimize(PolicyObjective::LowerW, mdp, mu, policies, q_class, w_class);
}

OptimizationOutcome mub_po(const TabularMdp& mdp, const Vec& mu,
                           const std::vector<Policy>& policies, const FunctionClass& q_class,
                           const FunctionClass& w_class) {
  return exact_optimize(PolicyObjective::UpperW, mdp, mu, policies, q_class, w_class);
}

OptimizationOutcome mlb_po_qside(const TabularMdp& mdp, const Vec& mu,
                                 const std::vector<Policy>& policies,
                                 const FunctionClass& q_class, const FunctionClass& w_class) {
  return exact_optimize(PolicyObjective::LowerQ, mdp, mu, policies, q_class, w_class);
}

IpmReport ipm_diagnostic(const TabularMdp& mdp, const Vec& w, const Vec& mu, const Policy& pi_hat,
                         const FunctionClass& q_box, const std::vector<Policy>& policies) {
  const int n = mdp.n_pairs();
  if (w.size() != n || mu.size() != n || q_box.dimension() != n) {
    throw DimensionMismatch("IPM inputs must be indexed by state-action pairs");
  }
  if (policies.empty()) throw InvalidModel("policy class must be nonempty");
  const Vec nu = w.cwiseProduct(mu) - solve_d_pi(mdp, pi_hat);
  IpmReport report;
  report.l1 = nu.lpNorm<1>();
  report.holder_bound = 2.0 * mdp.r_max() / (1.0 - mdp.gamma()) * report.l1;
  report.ipm = -1.0;
  const Mat identity = Mat::Identity(n, n);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    // E_nu[T^pi q - q] = nu . R + ((gamma P Pi - I)' nu) . q
    const double c = nu.dot(mdp.mean_reward());
    const Vec g = (mdp.gamma() * state_action_transition(mdp, policies[i]) - identity).transpose() * nu;
    const double hi = c + vertex_optimum_affine(q_box, g, OptSense::Maximize).value;
    const double lo = c + vertex_optimum_affine(q_box, g, OptSense::Minimize).value;
    const double v = std::max(hi, -lo);
    if (v > report.ipm) {
      report.ipm = v;
      report.maximizing_policy = static_cast<int>(i);
    }
  }
  return report;
}

Vec uniform_on_states(const TabularMdp& mdp, const std::set<int>& states) {
  if (states.empty()) throw InvalidModel("state set must be nonempty");
  Vec mu = Vec::Zero(mdp.n_pairs());
  for (int s : states) {
    if (s < 0 || s >= mdp.n_states()) throw InvalidModel("state out of range");
    for (int a = 0; a < mdp.n_actions(); ++a) mu(mdp.index(s, a)) = 1.0;
  }
  return mu / mu.sum();
}

RmaxCheckReport rmax_equivalence_check(const TabularMdp& mdp, const std::set<int>& known_states,
                                       const std::vector<Policy>& policies, double tolerance) {
  if (policies.empty()) throw InvalidModel("policy class must be nonempty");
  bool initial_known = true;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.initial()(s) > 0.0 && !known_states.count(s)) initial_known = false;
  }
  if (!initial_known) throw InvalidModel("initial states must be known");

  const Vec mu = uniform_on_states(mdp, known_states);
  const int known_pairs = static_cast<int>(known_states.size()) * mdp.n_actions();
  const auto [q_class, w_class] =
      canonical_box_classes(mdp, canonical_w_cap(known_pairs, mdp.gamma()));
  const TabularMdp m_max = build_rmax(mdp, known_states);
  const TabularMdp m_min = build_rmin(mdp, known_states);

  RmaxCheckReport report;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const BiAffineLoss loss = build_exact_loss(mdp, policies[i], mu);
    const double lb = compute_bound(BoundKind::LowerW, loss, q_class, w_class).value;
    const double ub = compute_bound(BoundKind::UpperW, loss, q_class, w_class).value;
    const double jmin = j_pi(m_min, policies[i]);
    const double jmax = j_pi(m_max, policies[i]);
    report.lower_w.push_back(lb);
    report.upper_w.push_back(ub);
    report.j_min.push_back(jmin);
    report.j_max.push_back(jmax);
    const double dl = std::abs(lb - jmin);
    const double du = std::abs(ub - jmax);
    report.max_lower_deviation = std::max(report.max_lower_deviation, dl);
    report.max_upper_deviation = std::max(report.max_upper_deviation, du);
    if (dl > tolerance || du > tolerance) report.violations.push_back(static_cast<int>(i));
  }
  auto argmax = [](const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  report.mlb_choice = argmax(report.lower_w);
  report.mub_choice = argmax(report.upper_w);
  const double best_min = *std::max_element(report.j_min.begin(), report.j_min.end());
  const double best_max = *std::max_element(report.j_max.begin(), report.j_max.end());
  report.mlb_attains_max = report.j_min[report.mlb_choice] >= best_min - tolerance;
  report.mub_attains_max = report.j_max[report.mub_choice] >= best_max - tolerance;
  report.passed = report.violations.empty() && report.mlb_attains_max && report.mub_attains_max;
  return report;
}

}  // namespace mvi
