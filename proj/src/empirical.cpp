#include "mvi/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "mvi/errors.hpp"
#include "mvi/rng.hpp"

namespace mvi {

void Dataset::validate() const {
  if (tuples.empty()) throw EmptyDataset("dataset has no tuples");
  if (n_states <= 0 || n_actions <= 0) throw InvalidModel("dataset sizes must be positive");
  if (weights.size() != tuples.size()) throw InvalidModel("dataset needs one weight per tuple");
  double total = 0.0;
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    const Transition& t = tuples[j];
    if (t.s < 0 || t.s >= n_states || t.s_next < 0 || t.s_next >= n_states || t.a < 0 ||
        t.a >= n_actions) {
      throw InvalidModel("dataset tuple " + std::to_string(j) + " has an index out of range");
    }
    if (!std::isfinite(t.r)) throw InvalidModel("dataset tuple " + std::to_string(j) + " has a non-finite reward");
    if (!(weights[j] >= 0.0)) throw InvalidModel("dataset weights must be nonnegative");
    total += weights[j];
  }
  if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(tuples.size()) + 1e-12) {
    throw InvalidModel("dataset weights must sum to 1");
  }
}

namespace {

// Inverse-CDF draw; never returns an index with zero probability.
int draw_index(const Vec& probs, double u) {
  double cumulative = 0.0;
  int last = -1;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    last = i;
    cumulative += probs(i);
    if (u < cumulative) return i;
  }
  return last;
}

BiAffineLoss weighted_loss(const Dataset& data, const Policy& policy, const Vec& initial,
                           double gamma, const std::vector<double>& weights, double nu_scale) {
  const int ns = data.n_states;
  const int na = data.n_actions;
  if (policy.n_states() != ns || policy.n_actions() != na) {
    throw DimensionMismatch("policy shape does not match the dataset");
  }
  if (initial.size() != ns) throw DimensionMismatch("initial distribution has wrong length");
  const int n = ns * na;
  BiAffineLoss loss;
  loss.nu = Vec::Zero(n);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) loss.nu(s * na + a) = nu_scale * initial(s) * policy(s, a);
  }
  loss.rho = Vec::Zero(n);
  loss.K = Mat::Zero(n, n);
  for (std::size_t j = 0; j < data.tuples.size(); ++j) {
    const Transition& t = data.tuples[j];
    const double wj = weights[j];
    if (wj == 0.0) continue;
    const int row = t.s * na + t.a;
    loss.rho(row) += wj * t.r;
    for (int a2 = 0; a2 < na; ++a2) {
      loss.K(row, t.s_next * na + a2) += wj * gamma * policy(t.s_next, a2);
    }
    loss.K(row, row) -= wj;
  }
  return loss;
}

}  // namespace

Dataset sample_dataset(const TabularMdp& mdp, const Vec& mu, int n, std::uint64_t seed,
                       double noise_half_width) {
  if (n < 1) throw EmptyDataset("sample size must be at least 1");
  if (mu.size() != mdp.n_pairs()) throw DimensionMismatch("mu has wrong length");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw InvalidModel("mu must be a distribution");
  }
  if (noise_half_width < 0.0) throw InvalidModel("noise width must be nonnegative");
  Rng rng(seed);
  Dataset data;
  data.n_states = mdp.n_states();
  data.n_actions = mdp.n_actions();
  data.source_mu = mu;
  data.seed = seed;
  data.tuples.reserve(n);
  for (int j = 0; j < n; ++j) {
    const int pair = draw_index(mu, rng.uniform());
    const int s = pair / mdp.n_actions();
    const int a = pair % mdp.n_actions();
    const int next = draw_index(mdp.transition().row(pair).transpose(), rng.uniform());
    double r = mdp.mean_reward()(pair);
    if (noise_half_width > 0.0) {
      r = std::clamp(r + rng.uniform(-noise_half_width, noise_half_width), 0.0, mdp.r_max());
    }
    data.tuples.push_back({s, a, r, next});
  }
  data.weights.assign(n, 1.0 / n);
  return data;
}

Dataset exhaustive_dataset(const TabularMdp& mdp, const Vec& mu) {
  if (mu.size() != mdp.n_pairs()) throw DimensionMismatch("mu has wrong length");
  Dataset data;
  data.n_states = mdp.n_states();
  data.n_actions = mdp.n_actions();
  data.source_mu = mu;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const int pair = mdp.index(s, a);
      if (mu(pair) <= 0.0) continue;
      for (int next = 0; next < mdp.n_states(); ++next) {
        const double p = mdp.p(s, a, next);
        if (p <= 0.0) continue;
        data.tuples.push_back({s, a, mdp.reward(s, a), next});
        data.weights.push_back(mu(pair) * p);
      }
    }
  }
  if (data.tuples.empty()) throw EmptyDataset("mu has no support");
  double total = 0.0;
  for (double w : data.weights) total += w;
  for (double& w : data.weights) w /= total;
  return data;
}

BiAffineLoss build_empirical_loss(const Dataset& data, const Policy& policy, const Vec& initial,
                                  double gamma) {
  data.validate();
  return weighted_loss(data, policy, initial, gamma, data.weights, 1.0);
}

Dataset resample(const Dataset& data, std::uint64_t seed) {
  data.validate();
  const int n = data.size();
  Vec probs = Eigen::Map<const Vec>(data.weights.data(), n);
  Rng rng(seed);
  Dataset out;
  out.n_states = data.n_states;
  out.n_actions = data.n_actions;
  out.source_mu = data.source_mu;
  out.seed = seed;
  out.tuples.reserve(n);
  for (int j = 0; j < n; ++j) out.tuples.push_back(data.tuples[draw_index(probs, rng.uniform())]);
  out.weights.assign(n, 1.0 / n);
  return out;
}

ConfidenceReport bootstrap_interval(const Dataset& data, const Policy& policy, const Vec& initial,
                                    double gamma, const FunctionClass& q_class,
                                    const FunctionClass& w_class, int B, int k,
                                    std::uint64_t seed, int jobs) {
  if (B < 1 || k < 1 || k > B) throw InvalidModel("bootstrap needs B >= 1 and 1 <= k <= B");
  ConfidenceReport report;
  report.method = "bootstrap";
  report.B = B;
  report.k = k;
  report.raw = unified_interval(build_empirical_loss(data, policy, initial, gamma), q_class,
                                w_class, LossMode::Empirical);
  report.resample_lows.assign(B, 0.0);
  report.resample_highs.assign(B, 0.0);
  std::vector<std::exception_ptr> errors(B);

  auto work = [&](int b) {
    try {
      const Dataset sample = resample(data, derive_seed(seed, static_cast<std::uint64_t>(b)));
      const ValueInterval iv = unified_interval(build_empirical_loss(sample, policy, initial, gamma),
                                                q_class, w_class, LossMode::Empirical);
      report.resample_lows[b] = iv.low;
      report.resample_highs[b] = iv.high;
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const int workers = std::max(1, std::min(jobs, B));
  if (workers == 1) {
    for (int b = 0; b < B; ++b) work(b);
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < workers; ++t) {
      threads.emplace_back([&, t] {
        for (int b = t; b < B; b += workers) work(b);
      });
    }
    for (auto& th : threads) th.join();
  }
  for (int b = 0; b < B; ++b) {
    if (!errors[b]) continue;
    try {
      std::rethrow_exception(errors[b]);
    } catch (const std::exception& e) {
      throw SolverFailure("empirical-layer",
                          "bootstrap resample " + std::to_string(b) + " failed: " + e.what());
    }
  }
  std::vector<double> lows = report.resample_lows;
  std::vector<double> highs = report.resample_highs;
  std::sort(lows.begin(), lows.end());
  std::sort(highs.begin(), highs.end(), std::greater<>());
  report.adjusted_low = lows[k - 1];
  report.adjusted_high = highs[k - 1];
  return report;
}

double loss_range_bound(double c_q, double c_w, double gamma) {
  return c_q + c_w / (1.0 - gamma) * (1.0 + (1.0 + gamma) * c_q);
}

double rademacher_addend(double rademacher, double l_max, double delta, int n) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidModel("delta must lie in (0, 1]");
  if (n < 1) throw EmptyDataset("sample size must be at least 1");
  return 2.0 * rademacher + 6.0 * l_max * std::sqrt(std::log(2.0 / delta) / (2.0 * n));
}

RademacherEstimate estimate_rademacher(const Dataset& data, const Policy& policy,
                                       const Vec& initial, double gamma,
                                       const FunctionClass& q_class, const FunctionClass& w_class,
                                       int n_sigma, std::uint64_t seed, int starts) {
  data.validate();
  if (n_sigma < 1) throw InvalidModel("n_sigma must be at least 1");
  RademacherEstimate out;
  out.heuristic = !(q_class.variant() == FunctionClass::Variant::Singleton &&
                    w_class.variant() == FunctionClass::Variant::Singleton);
  const int n = data.size();
  double total = 0.0;
  for (int m = 0; m < n_sigma; ++m) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<double> signed_weights(n);
    double nu_scale = 0.0;
    for (int j = 0; j < n; ++j) {
      signed_weights[j] = rng.sign() * data.weights[j];
      nu_scale += signed_weights[j];
    }
    const BiAffineLoss loss = weighted_loss(data, policy, initial, gamma, signed_weights, nu_scale);
    if (loss.q_dimension() != q_class.dimension() || loss.w_dimension() != w_class.dimension()) {
      throw DimensionMismatch("class dimensions do not match the dataset");
    }

    double best = -std::numeric_limits<double>::infinity();
    Rng start_rng(derive_seed(seed ^ 0xa5a5a5a5ULL, static_cast<std::uint64_t>(m)));
    for (int st = 0; st < starts; ++st) {
      Vec q;
      if (st == 0) {
        q = q_class.some_member();
      } else if (st == 1) {
        q = q_class.lower();
      } else if (st == 2) {
        q = q_class.upper();
      } else {
        q.resize(q_class.dimension());
        for (int i = 0; i < q.size(); ++i) {
          q(i) = start_rng.uniform(q_class.lower()(i), q_class.upper()(i));
        }
      }
      double value = -std::numeric_limits<double>::infinity();
      for (int iter = 0; iter < 200; ++iter) {
        const Vec w = vertex_optimum_affine(w_class, loss.rho + loss.K * q, OptSense::Maximize).arg;
        q = vertex_optimum_affine(q_class, loss.nu + loss.K.transpose() * w, OptSense::Maximize).arg;
        const double v = loss.value(w, q);
        if (v <= value + 1e-12 * (1.0 + std::abs(value))) {
          value = std::max(value, v);
          break;
        }
        value = v;
      }
      best = std::max(best, value);
    }
    out.per_draw.push_back(best);
    total += best;
  }
  out.value = total / n_sigma;
  return out;
}

ConfidenceReport rademacher_bound(const Dataset& data, const Policy& policy, const Vec& initial,
                                  double gamma, const FunctionClass& q_class,
                                  const FunctionClass& w_class, double delta, int n_sigma,
                                  std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidModel("delta must lie in (0, 1)");
  ConfidenceReport report;
  report.method = "rademacher";
  report.delta = delta;
  report.n_sigma = n_sigma;
  report.raw = unified_interval(build_empirical_loss(data, policy, initial, gamma), q_class,
                                w_class, LossMode::Empirical);
  const RademacherEstimate estimate =
      estimate_rademacher(data, policy, initial, gamma, q_class, w_class, n_sigma, seed);
  report.rademacher = estimate.value;
  report.heuristic = estimate.heuristic;
  report.l_max = loss_range_bound(q_class.range_cap(), w_class.range_cap(), gamma);
  report.addend = rademacher_addend(std::max(0.0, estimate.value), report.l_max, delta, data.size());
  report.adjusted_low = report.raw.low - report.addend;
  report.adjusted_high = report.raw.high + report.addend;
  return report;
}

}  // namespace mvi
