#pragma once

#include <random>

#include "fixtures.hpp"
#include "mvi/function_class.hpp"
#include "mvi/lp.hpp"
#include "mvi/saddle.hpp"
#include "oracles.hpp"

namespace mvi::testing {

/// Random LP with box-bounded variables and a few mixed rows, feasible by
/// construction around a random interior point.
inline lp::LinearProgram random_lp(std::mt19937_64& gen, int n, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  lp::LinearProgram p(u(gen) > 0 ? lp::Sense::Maximize : lp::Sense::Minimize);
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) {
    const double lo = u(gen) * 2.0;
    const double hi = lo + 0.5 + std::abs(u(gen)) * 3.0;
    p.add_variable(lo, hi, u(gen));
    x0(i) = lo + (hi - lo) * (0.25 + 0.5 * std::abs(u(gen)));
  }
  for (int r = 0; r < m; ++r) {
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = u(gen);
    const double v = a.dot(x0);
    const int kind = static_cast<int>(std::abs(u(gen)) * 3.0);
    if (kind == 0) p.add_row(a, lp::RowType::LessEqual, v + std::abs(u(gen)));
    else if (kind == 1) p.add_row(a, lp::RowType::GreaterEqual, v - std::abs(u(gen)));
    else p.add_row(a, lp::RowType::Equal, v);
  }
  p.set_offset(u(gen));
  return p;
}

struct RandomGame {
  oracle::Game game;
  BiAffineLoss loss;
  FunctionClass outer;
  FunctionClass inner;
};

/// Random bi-affine game with w outside (rows of K) and q inside.
inline RandomGame random_game(std::mt19937_64& gen, bool inner_box) {
  std::uniform_int_distribution<int> dim_outer(1, 4);
  std::uniform_int_distribution<int> dim_inner(1, 5);
  const int dx = dim_outer(gen);
  const int dy = dim_inner(gen);
  oracle::Game g;
  g.c = random_vector(gen, 1, -1.0, 1.0)(0);
  g.a = random_vector(gen, dx, -1.0, 1.0);
  g.b = random_vector(gen, dy, -1.0, 1.0);
  g.M = Mat(dx, dy);
  for (int i = 0; i < dx; ++i) g.M.row(i) = random_vector(gen, dy, -1.0, 1.0).transpose();
  g.outer_lo = random_vector(gen, dx, -1.0, 0.0);
  g.outer_hi = g.outer_lo + random_vector(gen, dx, 0.2, 2.0);
  g.inner_is_box = inner_box;
  if (inner_box) {
    g.inner_lo = random_vector(gen, dy, -1.0, 0.0);
    g.inner_hi = g.inner_lo + random_vector(gen, dy, 0.2, 2.0);
  } else {
    for (int k = 0; k < 4; ++k) g.inner_members.push_back(random_vector(gen, dy, -1.0, 1.0));
  }
  BiAffineLoss loss;
  loss.constant = g.c;
  loss.rho = g.a;
  loss.nu = g.b;
  loss.K = g.M;
  FunctionClass outer = FunctionClass::box(g.outer_lo, g.outer_hi);
  FunctionClass inner = inner_box ? FunctionClass::box(g.inner_lo, g.inner_hi) : FunctionClass::finite_set(g.inner_members);
  return {std::move(g), std::move(loss), std::move(outer), std::move(inner)};
}

}  // namespace mvi::testing
