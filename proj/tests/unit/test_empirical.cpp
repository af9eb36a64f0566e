#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mvi/empirical.hpp"
#include "mvi/errors.hpp"
#include "mvi/rng.hpp"

using namespace mvi;
using mvi::testing::box_around;

namespace {

Vec initial_of(const TabularMdp& mdp) { return mdp.initial(); }

// Per-tuple loss written directly from the definition.
double tuple_loss(const Transition& t, const Vec& w, const Vec& q, const Policy& pi, const Vec& d0,
                  double gamma, int n_actions) {
  double q0 = 0.0;
  for (int s = 0; s < d0.size(); ++s) {
    for (int a = 0; a < n_actions; ++a) q0 += d0(s) * pi(s, a) * q(s * n_actions + a);
  }
  double next = 0.0;
  for (int a = 0; a < n_actions; ++a) next += pi(t.s_next, a) * q(t.s_next * n_actions + a);
  return q0 + w(t.s * n_actions + t.a) * (t.r + gamma * next - q(t.s * n_actions + t.a));
}

double direct_loss(const Dataset& data, const Vec& w, const Vec& q, const Policy& pi, const Vec& d0,
                   double gamma) {
  double total = 0.0;
  for (int j = 0; j < data.size(); ++j) {
    total += data.weights[j] * tuple_loss(data.tuples[j], w, q, pi, d0, gamma, data.n_actions);
  }
  return total;
}

}  // namespace

TEST_CASE("sampling is deterministic and matches mu") {
  const TabularMdp mdp = generate_random_mdp(5, 3, 2, 0.9);
  const Vec mu = random_distribution(6, 6, 0.5);
  const Dataset a = sample_dataset(mdp, mu, 1000, 42, 0.1);
  const Dataset b = sample_dataset(mdp, mu, 1000, 42, 0.1);
  CHECK(a.tuples == b.tuples);
  CHECK(a.weights == b.weights);
  CHECK_FALSE(sample_dataset(mdp, mu, 1000, 43, 0.1).tuples == a.tuples);

  const int n = 100000;
  const Dataset big = sample_dataset(mdp, mu, n, 7);
  Vec counts = Vec::Zero(6);
  for (const Transition& t : big.tuples) counts(t.s * 2 + t.a) += 1.0;
  for (int i = 0; i < 6; ++i) {
    const double sd = std::sqrt(n * mu(i) * (1.0 - mu(i)));
    CHECK(std::abs(counts(i) - n * mu(i)) <= 3.0 * sd);
  }
}

TEST_CASE("single-state single-tuple dataset") {
  const TabularMdp mdp = mvi::testing::single_state(1.0, 0.5);
  const Dataset d = sample_dataset(mdp, Vec::Ones(1), 1, 3);
  REQUIRE(d.size() == 1);
  CHECK(d.tuples[0] == Transition{0, 0, 1.0, 0});
  const BiAffineLoss loss = build_empirical_loss(d, Policy::uniform(1, 1), initial_of(mdp), 0.5);
  CHECK(loss.value(Vec::Ones(1), Vec::Zero(1)) == 1.0);
}

TEST_CASE("rewards stay inside the reward range under noise") {
  const TabularMdp mdp = generate_random_mdp(8, 3, 2, 0.9);
  const Dataset d = sample_dataset(mdp, Vec::Constant(6, 1.0 / 6.0), 5000, 1, 0.5);
  for (const Transition& t : d.tuples) {
    CHECK(t.r >= 0.0);
    CHECK(t.r <= mdp.r_max());
  }
}

TEST_CASE("exhaustive data reproduces the exact loss") {
  for (int seed = 1; seed <= 10; ++seed) {
    const auto inst = mvi::testing::random_instance(seed);
    const Dataset d = exhaustive_dataset(inst.mdp, inst.mu);
    const BiAffineLoss e = build_empirical_loss(d, inst.policy, initial_of(inst.mdp), inst.mdp.gamma());
    const BiAffineLoss x = build_exact_loss(inst.mdp, inst.policy, inst.mu);
    CHECK((e.nu - x.nu).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((e.rho - x.rho).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((e.K - x.K).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(std::abs(e.constant - x.constant) <= 1e-12);
  }
}

TEST_CASE("empirical loss equals the per-tuple average") {
  const TabularMdp mdp = generate_random_mdp(12, 4, 3, 0.9);
  const Policy pi = random_policy(13, 4, 3);
  const Dataset d = sample_dataset(mdp, random_distribution(14, 12, 0.5), 300, 15, 0.2);
  const BiAffineLoss loss = build_empirical_loss(d, pi, initial_of(mdp), 0.9);
  std::mt19937_64 gen(16);
  for (int k = 0; k < 20; ++k) {
    const Vec w = mvi::testing::random_vector(gen, 12, 0.0, 3.0);
    const Vec q = mvi::testing::random_vector(gen, 12, -2.0, 8.0);
    CHECK(std::abs(loss.value(w, q) - direct_loss(d, w, q, pi, initial_of(mdp), 0.9)) <= 1e-12);
  }
}

TEST_CASE("empirical loss is within CLT scale of the exact loss") {
  const TabularMdp mdp = generate_random_mdp(20, 3, 2, 0.9);
  const Policy pi = random_policy(21, 3, 2);
  const Vec mu = random_distribution(22, 6, 0.5);
  const int n = 10000;
  const Dataset d = sample_dataset(mdp, mu, n, 23, 0.1);
  const BiAffineLoss emp = build_empirical_loss(d, pi, initial_of(mdp), 0.9);
  const BiAffineLoss exact = build_exact_loss(mdp, pi, mu);
  std::mt19937_64 gen(24);
  for (int k = 0; k < 20; ++k) {
    const Vec w = mvi::testing::random_vector(gen, 6, 0.0, 3.0);
    const Vec q = mvi::testing::random_vector(gen, 6, 0.0, 10.0);
    double mean = 0.0;
    double sq = 0.0;
    for (const Transition& t : d.tuples) {
      const double l = tuple_loss(t, w, q, pi, initial_of(mdp), 0.9, 2);
      mean += l / n;
      sq += l * l / n;
    }
    const double sd = std::sqrt(std::max(0.0, sq - mean * mean));
    CHECK(std::abs(emp.value(w, q) - exact.value(w, q)) <= 3.0 * sd / std::sqrt(double(n)));
  }
}

TEST_CASE("empty datasets are rejected") {
  Dataset d;
  d.n_states = 2;
  d.n_actions = 1;
  CHECK_THROWS_AS(build_empirical_loss(d, Policy::uniform(2, 1), Vec::Constant(2, 0.5), 0.9), EmptyDataset);
  CHECK_THROWS_AS(sample_dataset(mvi::testing::single_state(1.0, 0.5), Vec::Ones(1), 0, 1), EmptyDataset);
}

TEST_CASE("bootstrap") {
  const TabularMdp mdp = generate_random_mdp(30, 3, 2, 0.9);
  const Policy pi = random_policy(31, 3, 2);
  const Vec mu = Vec::Constant(6, 1.0 / 6.0);
  const Dataset d = sample_dataset(mdp, mu, 200, 32, 0.1);
  const FunctionClass q = box_around(solve_q_pi(mdp, pi), 0.5);
  const FunctionClass w = FunctionClass::box(Vec::Zero(6), Vec::Constant(6, 3.0));
  const Vec d0 = initial_of(mdp);

  SUBCASE("B = 1 equals the single resample") {
    const ConfidenceReport r = bootstrap_interval(d, pi, d0, 0.9, q, w, 1, 1, 99);
    const ValueInterval iv = unified_interval(build_empirical_loss(resample(d, derive_seed(99, 0)), pi, d0, 0.9), q, w,
                                              LossMode::Empirical);
    CHECK(r.adjusted_low == iv.low);
    CHECK(r.adjusted_high == iv.high);
  }
  SUBCASE("order statistics and determinism") {
    const ConfidenceReport a = bootstrap_interval(d, pi, d0, 0.9, q, w, 20, 2, 5, 1);
    const ConfidenceReport b = bootstrap_interval(d, pi, d0, 0.9, q, w, 20, 2, 5, 4);
    CHECK(a.resample_lows == b.resample_lows);
    CHECK(a.resample_highs == b.resample_highs);
    CHECK(a.adjusted_low == b.adjusted_low);
    CHECK(a.adjusted_high == b.adjusted_high);
    std::vector<double> lows = a.resample_lows;
    std::sort(lows.begin(), lows.end());
    std::vector<double> highs = a.resample_highs;
    std::sort(highs.begin(), highs.end());
    CHECK(a.adjusted_low == lows[1]);
    CHECK(a.adjusted_high == highs[18]);
    CHECK(a.adjusted_low >= lows.front());
    CHECK(a.adjusted_high <= highs.back());
  }
  SUBCASE("exhaustive weights resample from the same support") {
    const Dataset ex = exhaustive_dataset(mdp, mu);
    const Dataset r = resample(ex, 4);
    CHECK(r.size() == ex.size());
    for (const Transition& t : r.tuples) CHECK(std::find(ex.tuples.begin(), ex.tuples.end(), t) != ex.tuples.end());
  }
  SUBCASE("invalid order index") {
    CHECK_THROWS_AS(bootstrap_interval(d, pi, d0, 0.9, q, w, 5, 6), InvalidModel);
  }
}

TEST_CASE("resampling frequencies follow the weights") {
  Dataset d;
  d.n_states = 3;
  d.n_actions = 1;
  d.tuples = {{0, 0, 0.0, 0}, {1, 0, 0.0, 1}, {2, 0, 0.0, 2}};
  d.weights = {0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  int total = 0;
  for (int rep = 0; rep < 20000; ++rep) {
    for (const Transition& t : resample(d, derive_seed(1, rep)).tuples) {
      ++counts[t.s];
      ++total;
    }
  }
  for (int s = 0; s < 3; ++s) {
    const double p = d.weights[s];
    CHECK(std::abs(counts[s] - total * p) <= 3.0 * std::sqrt(total * p * (1.0 - p)));
  }
}

TEST_CASE("Rademacher addend formula") {
  CHECK(loss_range_bound(0.0, 0.0, 0.9) == 0.0);
  CHECK(loss_range_bound(2.0, 1.0, 0.5) == doctest::Approx(2.0 + 2.0 * (1.0 + 1.5 * 2.0)));
  CHECK(rademacher_addend(0.0, 0.0, 0.05, 100) == 0.0);
  const double scale = 6.0 * 3.0 * std::sqrt(1.0 / 200.0);
  CHECK(rademacher_addend(0.0, 3.0, 1.0, 100) == doctest::Approx(scale * std::sqrt(std::log(2.0))));
  CHECK(rademacher_addend(0.25, 1.0, 0.1, 50) == doctest::Approx(0.5 + 6.0 * std::sqrt(std::log(20.0) / 100.0)));
  double last = 1e300;
  for (int n : {1, 10, 100, 1000, 10000}) {
    const double v = rademacher_addend(0.1, 2.0, 0.05, n);
    CHECK(v < last);
    last = v;
  }
  CHECK(loss_range_bound(1.0, 2.0, 0.9) < loss_range_bound(1.5, 2.0, 0.9));
  CHECK(loss_range_bound(1.0, 2.0, 0.9) < loss_range_bound(1.0, 2.5, 0.9));
}

TEST_CASE("Rademacher estimate on singleton classes matches a direct sign average") {
  const TabularMdp mdp = generate_random_mdp(40, 3, 2, 0.9);
  const Policy pi = random_policy(41, 3, 2);
  const Dataset d = sample_dataset(mdp, Vec::Constant(6, 1.0 / 6.0), 50, 42, 0.1);
  std::mt19937_64 gen(43);
  const Vec w = mvi::testing::random_vector(gen, 6, 0.0, 2.0);
  const Vec q = mvi::testing::random_vector(gen, 6, 0.0, 5.0);
  const int n_sigma = 2000;
  const RademacherEstimate est = estimate_rademacher(d, pi, initial_of(mdp), 0.9, FunctionClass::singleton(q),
                                                     FunctionClass::singleton(w), n_sigma, 7);
  CHECK_FALSE(est.heuristic);
  std::vector<double> l(d.size());
  double sq = 0.0;
  for (int j = 0; j < d.size(); ++j) {
    l[j] = tuple_loss(d.tuples[j], w, q, pi, initial_of(mdp), 0.9, 2);
    sq += std::pow(d.weights[j] * l[j], 2);
  }
  for (int m = 0; m < n_sigma; ++m) {
    Rng rng(derive_seed(7, m));
    double v = 0.0;
    for (int j = 0; j < d.size(); ++j) v += rng.sign() * d.weights[j] * l[j];
    CHECK(std::abs(est.per_draw[m] - v) <= 1e-10);
  }
  // signed sums have mean zero
  CHECK(std::abs(est.value) <= 4.0 * std::sqrt(sq / n_sigma));
}

TEST_CASE("Rademacher bound widens the raw interval") {
  const TabularMdp mdp = generate_random_mdp(50, 3, 2, 0.9);
  const Policy pi = random_policy(51, 3, 2);
  const Dataset d = sample_dataset(mdp, Vec::Constant(6, 1.0 / 6.0), 100, 52, 0.1);
  const FunctionClass q = box_around(solve_q_pi(mdp, pi), 0.5);
  const FunctionClass w = FunctionClass::box(Vec::Zero(6), Vec::Constant(6, 3.0));
  const ConfidenceReport r = rademacher_bound(d, pi, initial_of(mdp), 0.9, q, w, 0.05, 20, 3);
  CHECK(r.heuristic);
  CHECK(r.rademacher > 0.0);
  CHECK(r.adjusted_low <= r.raw.low);
  CHECK(r.adjusted_high >= r.raw.high);
  CHECK(r.addend == doctest::Approx(rademacher_addend(r.rademacher, r.l_max, 0.05, 100)));
  CHECK(r.l_max == doctest::Approx(loss_range_bound(q.range_cap(), 3.0, 0.9)));

  const FunctionClass zero = FunctionClass::singleton(Vec::Zero(6));
  const ConfidenceReport z = rademacher_bound(d, pi, initial_of(mdp), 0.9, zero, zero, 0.05, 20, 3);
  CHECK(z.l_max == 0.0);
  CHECK(z.rademacher == 0.0);
  CHECK(z.addend == 0.0);
}

TEST_CASE("empirical upper bound converges as n grows") {
  const TabularMdp mdp = generate_random_mdp(60, 3, 2, 0.9);
  const Policy pi = random_policy(61, 3, 2);
  const Vec mu = Vec::Constant(6, 1.0 / 6.0);
  const FunctionClass q = box_around(solve_q_pi(mdp, pi), 0.5);
  const FunctionClass w = FunctionClass::box(Vec::Zero(6), Vec::Constant(6, 3.0));
  const double exact = unified_interval(build_exact_loss(mdp, pi, mu), q, w).upper_w.value;
  double last = 1e300;
  for (int n : {100, 1000, 10000}) {
    std::vector<double> errors;
    for (int seed = 0; seed < 20; ++seed) {
      const Dataset d = sample_dataset(mdp, mu, n, derive_seed(n, seed), 0.1);
      const ValueInterval iv =
          unified_interval(build_empirical_loss(d, pi, initial_of(mdp), 0.9), q, w, LossMode::Empirical);
      errors.push_back(std::abs(iv.upper_w.value - exact));
    }
    std::nth_element(errors.begin(), errors.begin() + 10, errors.end());
    CHECK(errors[10] <= last);
    last = errors[10];
  }
}
