#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvi/function_class.hpp"
#include "mvi/interval.hpp"
#include "mvi/mdp.hpp"
#include "mvi/saddle.hpp"

namespace mvi {

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;

  bool operator==(const Transition&) const = default;
};

/// Weighted (s, a, r, s') tuples. Weights are nonnegative and sum to 1.
struct Dataset {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Transition> tuples;
  std::vector<double> weights;
  std::optional<Vec> source_mu;
  std::uint64_t seed = 0;

  int size() const noexcept { return static_cast<int>(tuples.size()); }
  /// Throws EmptyDataset or InvalidModel on violated invariants.
  void validate() const;
};

/// n i.i.d. tuples with (s, a) ~ mu, s' ~ P(s, a) and reward equal to the
/// mean reward plus uniform noise on [-noise_half_width, noise_half_width],
/// clipped to [0, r_max]. Weights are uniform.
Dataset sample_dataset(const TabularMdp& mdp, const Vec& mu, int n, std::uint64_t seed,
                       double noise_half_width = 0.0);

/// One tuple per (s, a, s') with mu(s, a) P(s'|s, a) > 0, weighted by that
/// probability and carrying the mean reward: the empirical loss of this
/// dataset equals the exact loss.
Dataset exhaustive_dataset(const TabularMdp& mdp, const Vec& mu);

/// Empirical loss q(s0, pi) + sum_j weight_j w(s_j, a_j)(r_j + gamma q(s'_j, pi) - q(s_j, a_j)).
BiAffineLoss build_empirical_loss(const Dataset& data, const Policy& policy, const Vec& initial,
                                  double gamma);

/// Resamples size() tuples with replacement, proportionally to the weights;
/// the result has uniform weights.
Dataset resample(const Dataset& data, std::uint64_t seed);

struct ConfidenceReport {
  ValueInterval raw;
  double adjusted_low = 0.0;
  double adjusted_high = 0.0;
  std::string method;
  // bootstrap
  int B = 0;
  int k = 0;
  std::vector<double> resample_lows;
  std::vector<double> resample_highs;
  // rademacher
  double delta = 0.0;
  int n_sigma = 0;
  double rademacher = 0.0;
  double l_max = 0.0;
  double addend = 0.0;
  bool heuristic = false;
};

/// Unified interval on B resamples; the adjusted interval runs from the k-th
/// smallest low to the k-th largest high. Resample b uses derive_seed(seed, b);
/// jobs > 1 evaluates resamples on worker threads with identical results.
ConfidenceReport bootstrap_interval(const Dataset& data, const Policy& policy, const Vec& initial,
                                    double gamma, const FunctionClass& q_class,
                                    const FunctionClass& w_class, int B = 20, int k = 1,
                                    std::uint64_t seed = 0, int jobs = 1);

/// C_Q + C_W / (1 - gamma) (1 + (1 + gamma) C_Q).
double loss_range_bound(double c_q, double c_w, double gamma);

/// 2 R + 6 L_max sqrt(log(2 / delta) / (2 n)).
double rademacher_addend(double rademacher, double l_max, double delta, int n);

struct RademacherEstimate {
  double value = 0.0;
  std::vector<double> per_draw;
  /// The inner supremum is a bilinear maximization approximated by
  /// alternating ascent, so the estimate is heuristic.
  bool heuristic = true;
};

/// Average over n_sigma sign draws of sup over W x Q of
/// sum_j weight_j sigma_j l_j(w, q), with l_j the per-tuple loss including
/// the q(s0, pi) term.
RademacherEstimate estimate_rademacher(const Dataset& data, const Policy& policy,
                                       const Vec& initial, double gamma,
                                       const FunctionClass& q_class, const FunctionClass& w_class,
                                       int n_sigma = 100, std::uint64_t seed = 0, int starts = 8);

/// Raw empirical interval widened by the Rademacher addend on both sides.
/// The complexity estimate enters the addend clipped at zero.
ConfidenceReport rademacher_bound(const Dataset& data, const Policy& policy, const Vec& initial,
                                  double gamma, const FunctionClass& q_class,
                                  const FunctionClass& w_class, double delta, int n_sigma = 100,
                                  std::uint64_t seed = 0);

}  // namespace mvi
