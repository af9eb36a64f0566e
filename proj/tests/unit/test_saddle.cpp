#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "mvi/errors.hpp"
#include "mvi/saddle.hpp"
#include "oracles.hpp"

using namespace mvi;
using mvi::testing::random_game;
using mvi::testing::random_vector;
using mvi::testing::RandomGame;

TEST_CASE("exact loss coefficients and decomposition") {
  const TabularMdp mdp = generate_random_mdp(7, 4, 2, 0.9);
  const Policy pi = random_policy(8, 4, 2);
  const Vec mu = random_distribution(9, 8, 0.5);
  const BiAffineLoss loss = build_exact_loss(mdp, pi, mu);
  const Mat expected_k = mu.asDiagonal() * (0.9 * state_action_transition(mdp, pi) - Mat::Identity(8, 8));
  CHECK((loss.K - expected_k).cwiseAbs().maxCoeff() <= 1e-12);
  const Vec q_pi = solve_q_pi(mdp, pi);
  const Vec w_pi = importance_weights(solve_d_pi(mdp, pi), mu, 2);
  CHECK(std::abs(loss.value(w_pi, q_pi) - j_pi(mdp, pi)) <= 1e-9);

  const BiAffineLoss lw = w_side_loss(loss);
  const BiAffineLoss lq = q_side_loss(loss);
  std::mt19937_64 gen(1);
  for (int k = 0; k < 20; ++k) {
    const Vec w = random_vector(gen, 8, 0.0, 5.0);
    const Vec q = random_vector(gen, 8, 0.0, 10.0);
    CHECK(std::abs(loss.value(w, q) - (loss.rho.dot(w) + lw.value(w, q))) <= 1e-12 * (1 + std::abs(loss.value(w, q))));
    CHECK(std::abs(loss.value(w, q) - (loss.nu.dot(q) + lq.value(w, q))) <= 1e-12 * (1 + std::abs(loss.value(w, q))));
  }
}

TEST_CASE("single-state evaluation-error lemmas") {
  const TabularMdp mdp = mvi::testing::single_state(1.0, 0.5);
  const Policy pi = Policy::uniform(1, 1);
  const Vec mu = Vec::Ones(1);
  const BiAffineLoss loss = build_exact_loss(mdp, pi, mu);
  std::mt19937_64 gen(2);
  const Vec w_pi = Vec::Constant(1, 2.0);
  const Vec q_pi = Vec::Constant(1, 2.0);
  for (int k = 0; k < 10; ++k) {
    CHECK(loss.value(w_pi, random_vector(gen, 1, -10.0, 10.0)) == doctest::Approx(2.0));
    CHECK(loss.value(random_vector(gen, 1, -10.0, 10.0), q_pi) == doctest::Approx(2.0));
  }
}

TEST_CASE("singleton sides give the true value in either order") {
  const auto inst = mvi::testing::random_instance(3);
  const BiAffineLoss loss = build_exact_loss(inst.mdp, inst.policy, inst.mu);
  const FunctionClass w_single = FunctionClass::singleton(inst.w_pi);
  const FunctionClass q_box = mvi::testing::box_around(inst.q_pi, 1.0);
  CHECK(std::abs(solve_saddle(loss, w_single, q_box, Role::W, Order::InfSup).value - inst.j) <= 1e-8);
  const FunctionClass q_single = FunctionClass::singleton(inst.q_pi);
  const FunctionClass w_box = FunctionClass::box(Vec::Zero(inst.mdp.n_pairs()), Vec::Constant(inst.mdp.n_pairs(), 7.0));
  for (Order order : {Order::InfSup, Order::SupInf}) {
    CHECK(std::abs(solve_saddle(loss, w_box, q_single, Role::W, order).value - inst.j) <= 1e-8);
    CHECK(std::abs(solve_saddle(loss, q_single, w_box, Role::Q, order).value - inst.j) <= 1e-8);
  }
}

TEST_CASE("random games match the refined grid oracle") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const RandomGame rg = random_game(gen, trial % 2 == 0);
    const SaddleResult up = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, Order::InfSup);
    const oracle::GridResult gu = oracle::grid_saddle(rg.game, true, 1e-8);
    CHECK(up.value <= gu.best + 1e-9);
    CHECK(up.value >= gu.certified - 1e-9);
    CHECK(std::abs(up.value - gu.best) <= 1e-3);

    const SaddleResult lo = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, Order::SupInf);
    const oracle::GridResult gl = oracle::grid_saddle(rg.game, false, 1e-8);
    CHECK(lo.value >= gl.best - 1e-9);
    CHECK(lo.value <= gl.certified + 1e-9);
    CHECK(std::abs(lo.value - gl.best) <= 1e-3);
  }
}

TEST_CASE("certificates reproduce the value") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const RandomGame rg = random_game(gen, trial % 3 != 0);
    for (Order order : {Order::InfSup, Order::SupInf}) {
      const SaddleResult r = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, order);
      const OptSense sense = order == Order::InfSup ? OptSense::Maximize : OptSense::Minimize;
      const double again = rg.game.inner(r.outer_arg, sense == OptSense::Maximize);
      CHECK(std::abs(again - r.value) <= 1e-8);
      CHECK(contains(rg.outer, r.outer_arg, 1e-8));
      CHECK(std::abs(inner_optimum(rg.loss, r.outer_arg, rg.inner, Role::W, sense).value - r.value) <= 1e-8);
    }
  }
}

TEST_CASE("box games satisfy minimax equality when roles swap") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const RandomGame rg = random_game(gen, true);
    const double inf_w_sup_q = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, Order::InfSup).value;
    const double sup_q_inf_w = solve_saddle(rg.loss, rg.inner, rg.outer, Role::Q, Order::SupInf).value;
    const double sup_w_inf_q = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, Order::SupInf).value;
    const double inf_q_sup_w = solve_saddle(rg.loss, rg.inner, rg.outer, Role::Q, Order::InfSup).value;
    CHECK(std::abs(inf_w_sup_q - sup_q_inf_w) <= 1e-7);
    CHECK(std::abs(sup_w_inf_q - inf_q_sup_w) <= 1e-7);
    CHECK(sup_q_inf_w <= inf_w_sup_q + 1e-9);
    CHECK(sup_w_inf_q <= inf_q_sup_w + 1e-9);
  }
}

TEST_CASE("finite classes: weak duality and enumeration") {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 30; ++trial) {
    const RandomGame rg = random_game(gen, false);
    // finite outer (the inner finite set, playing q) against box w
    const double inf_sup = solve_saddle(rg.loss, rg.inner, rg.outer, Role::Q, Order::InfSup).value;
    const double sup_inf = solve_saddle(rg.loss, rg.outer, rg.inner, Role::W, Order::SupInf).value;
    CHECK(sup_inf <= inf_sup + 1e-9);
    double brute = 1e300;
    for (const Vec& q : rg.game.inner_members) {
      double best = rg.game.c + rg.game.b.dot(q);
      const Vec coeff = rg.game.a + rg.game.M * q;
      for (int i = 0; i < coeff.size(); ++i) best += std::max(coeff(i) * rg.game.outer_lo(i), coeff(i) * rg.game.outer_hi(i));
      brute = std::min(brute, best);
    }
    CHECK(std::abs(inf_sup - brute) <= 1e-9);
    const SaddleResult r = solve_saddle(rg.loss, rg.inner, rg.outer, Role::Q, Order::InfSup);
    CHECK(r.method == SolveMethod::Enumeration);
  }
}

TEST_CASE("polytope inner matches its vertex set") {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 20; ++trial) {
    const int dx = 1 + trial % 3;
    const int dy = 3;
    BiAffineLoss loss;
    loss.constant = 0.3;
    loss.rho = random_vector(gen, dx, -1.0, 1.0);
    loss.nu = random_vector(gen, dy, -1.0, 1.0);
    loss.K = Mat(dx, dy);
    for (int i = 0; i < dx; ++i) loss.K.row(i) = random_vector(gen, dy, -1.0, 1.0).transpose();
    const double scale = 1.0 + trial * 0.1;
    Mat eq = Mat::Ones(1, dy);
    const FunctionClass simplex = FunctionClass::polytope(-Mat::Identity(dy, dy), Vec::Zero(dy), eq, Vec::Constant(1, scale));
    std::vector<Vec> vertices;
    for (int j = 0; j < dy; ++j) vertices.push_back(Vec::Unit(dy, j) * scale);
    const FunctionClass vertex_set = FunctionClass::finite_set(vertices);
    const FunctionClass outer = FunctionClass::box(Vec::Constant(dx, -1.0), Vec::Constant(dx, 1.0));
    for (Order order : {Order::InfSup, Order::SupInf}) {
      const double a = solve_saddle(loss, outer, simplex, Role::W, order).value;
      const double b = solve_saddle(loss, outer, vertex_set, Role::W, order).value;
      CHECK(std::abs(a - b) <= 1e-8);
    }
    // box written as a polytope gives the box answer on the outer side
    Mat rows(2 * dx, dx);
    rows << Mat::Identity(dx, dx), -Mat::Identity(dx, dx);
    const FunctionClass outer_poly = FunctionClass::polytope(rows, Vec::Ones(2 * dx), Mat(0, dx), Vec(0));
    for (Order order : {Order::InfSup, Order::SupInf}) {
      const double a = solve_saddle(loss, outer_poly, simplex, Role::W, order).value;
      const double b = solve_saddle(loss, outer, simplex, Role::W, order).value;
      CHECK(std::abs(a - b) <= 1e-8);
    }
  }
}

TEST_CASE("absolute-value saddle matches grid search") {
  std::mt19937_64 gen(16);
  for (int trial = 0; trial < 20; ++trial) {
    RandomGame rg = random_game(gen, true);
    const SaddleResult r = solve_abs_saddle(rg.loss, rg.outer, rg.inner, Role::W);
    // grid over the outer box of max(sup, -inf)
    const oracle::Game& g = rg.game;
    const int d = static_cast<int>(g.a.size());
    long total = 1;
    for (int i = 0; i < d; ++i) total *= 17;
    double best = 1e300;
    for (long code = 0; code < total; ++code) {
      long rest = code;
      Vec x(d);
      for (int i = 0; i < d; ++i) {
        x(i) = g.outer_lo(i) + (g.outer_hi(i) - g.outer_lo(i)) * (rest % 17) / 16.0;
        rest /= 17;
      }
      best = std::min(best, std::max(g.inner(x, true), -g.inner(x, false)));
    }
    const double h = ((g.outer_hi - g.outer_lo) / 16.0).dot(g.lipschitz()) / 2.0;
    CHECK(r.value <= best + 1e-9);
    CHECK(r.value >= best - h - 1e-9);
    CHECK(r.value >= -1e-12);
  }
}

TEST_CASE("regularized bounds") {
  const auto inst = mvi::testing::random_instance(21, 2, 3);
  const BiAffineLoss loss = build_exact_loss(inst.mdp, inst.policy, inst.mu);
  const int n = inst.mdp.n_pairs();
  const FunctionClass q = mvi::testing::box_around(inst.q_pi, 0.5);
  const FunctionClass w = FunctionClass::box(Vec::Zero(n), Vec::Constant(n, inst.w_pi.maxCoeff() * 0.8));
  const double ub = solve_saddle(loss, w, q, Role::W, Order::InfSup).value;
  const double lb = solve_saddle(loss, w, q, Role::W, Order::SupInf).value;

  Regularizer zero{RegularizerKind::Quadratic, 0.0};
  CHECK(std::abs(solve_regularized_outer(loss, w, q, zero, inst.mu, BoundSide::Upper).value - ub) <= 1e-6);
  CHECK(std::abs(solve_regularized_outer(loss, w, q, zero, inst.mu, BoundSide::Lower).value - lb) <= 1e-6);
  for (RegularizerKind kind : {RegularizerKind::Quadratic, RegularizerKind::ShiftedQuadratic}) {
    for (double lambda : {0.01, 0.1, 1.0}) {
      const Regularizer reg{kind, lambda};
      CHECK(solve_regularized_outer(loss, w, q, reg, inst.mu, BoundSide::Upper).value >= ub - 1e-8);
      CHECK(solve_regularized_outer(loss, w, q, reg, inst.mu, BoundSide::Lower).value <= lb + 1e-8);
    }
  }

  const FunctionClass w_poly = FunctionClass::polytope(
      (Mat(2 * n, n) << Mat::Identity(n, n), -Mat::Identity(n, n)).finished(), Vec::Ones(2 * n), Mat(0, n), Vec(0));
  CHECK_THROWS_AS(solve_regularized_outer(loss, w_poly, q, Regularizer{RegularizerKind::Quadratic, 0.1}, inst.mu, BoundSide::Upper),
                  SolverFailure);
}

TEST_CASE("single-state regularized bound matches a dense 1-D grid") {
  const TabularMdp mdp = mvi::testing::single_state(1.0, 0.5);
  const Policy pi = Policy::uniform(1, 1);
  const Vec mu = Vec::Ones(1);
  const BiAffineLoss loss = build_exact_loss(mdp, pi, mu);
  const FunctionClass w = FunctionClass::box(Vec::Zero(1), Vec::Constant(1, 4.0));
  const FunctionClass q = FunctionClass::box(Vec::Constant(1, 1.0), Vec::Constant(1, 3.0));
  const Regularizer reg{RegularizerKind::Quadratic, 0.1};
  double grid_lower = -1e300;
  double grid_upper = 1e300;
  for (int i = 0; i <= 400000; ++i) {
    const Vec x = Vec::Constant(1, 4.0 * i / 400000.0);
    const double lo = std::min(loss.value(x, q.lower()), loss.value(x, q.upper()));
    const double hi = std::max(loss.value(x, q.lower()), loss.value(x, q.upper()));
    grid_lower = std::max(grid_lower, lo - reg.value(x, mu));
    grid_upper = std::min(grid_upper, hi + reg.value(x, mu));
  }
  CHECK(std::abs(solve_regularized_outer(loss, w, q, reg, mu, BoundSide::Lower).value - grid_lower) <= 1e-3);
  CHECK(std::abs(solve_regularized_outer(loss, w, q, reg, mu, BoundSide::Upper).value - grid_upper) <= 1e-3);
}

TEST_CASE("shape errors are reported") {
  BiAffineLoss loss;
  loss.nu = Vec::Zero(2);
  loss.rho = Vec::Zero(3);
  loss.K = Mat::Zero(3, 3);
  CHECK_THROWS_AS(loss.check_shape(), DimensionMismatch);
}
