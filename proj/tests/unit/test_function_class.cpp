#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mvi/counterexample.hpp"
#include "mvi/errors.hpp"
#include "mvi/function_class.hpp"

using namespace mvi;

namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(values.size());
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("box membership and enlargement monotonicity") {
  const FunctionClass b = FunctionClass::box(Vec::Zero(3), Vec::Constant(3, 2.0));
  CHECK(contains(b, Vec::Zero(3)));
  CHECK_FALSE(contains(b, vec({0.0, 2.1, 0.0})));
  CHECK(contains(b, vec({0.0, 2.0 + 1e-10, 0.0})));
  std::mt19937_64 gen(3);
  for (int k = 0; k < 50; ++k) {
    const Vec f = mvi::testing::random_vector(gen, 3, -1.0, 3.0);
    const FunctionClass big = FunctionClass::box(Vec::Constant(3, -0.5), Vec::Constant(3, 2.5));
    if (contains(b, f)) CHECK(contains(big, f));
  }
  CHECK_THROWS_AS(contains(b, Vec::Zero(2)), DimensionMismatch);
  CHECK_THROWS_AS(FunctionClass::box(Vec::Ones(2), Vec::Zero(2)), DimensionMismatch);
}

TEST_CASE("finite set exact membership versus hull membership") {
  const FunctionClass f = FunctionClass::finite_set({vec({0.0, 0.0}), vec({2.0, 2.0})});
  CHECK(contains(f, vec({2.0, 2.0})));
  CHECK_FALSE(contains(f, vec({1.0, 1.0})));
  CHECK(hull_contains(f, vec({1.0, 1.0})));
  CHECK_FALSE(hull_contains(f, vec({1.0, 0.0})));
  CHECK_THROWS_AS(FunctionClass::finite_set({}), DimensionMismatch);
}

TEST_CASE("counterexample class contains the truth only in its hull") {
  const Counterexample cx = make_counterexample(0.1, 0.9);
  CHECK(hull_contains(cx.q_class, cx.q_pi));
  CHECK_FALSE(contains(cx.q_class, cx.q_pi));
}

TEST_CASE("polytope validation probes") {
  // {w >= 0} alone is unbounded
  CHECK_THROWS_AS(FunctionClass::polytope(-Mat::Identity(2, 2), Vec::Zero(2), Mat(0, 2), Vec(0)),
                  UnboundedObjective);
  // w >= 0, w1 + w2 = 2 is a bounded segment
  Mat eq(1, 2);
  eq << 1.0, 1.0;
  const FunctionClass seg = FunctionClass::polytope(-Mat::Identity(2, 2), Vec::Zero(2), eq, vec({2.0}));
  CHECK(seg.lower()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(seg.upper()(0) == doctest::Approx(2.0));
  CHECK(contains(seg, vec({0.5, 1.5})));
  CHECK_FALSE(contains(seg, vec({0.5, 1.0})));
  // empty
  Mat a(2, 1);
  a << 1.0, -1.0;
  CHECK_THROWS_AS(FunctionClass::polytope(a, vec({0.0, -1.0}), Mat(0, 1), Vec(0)), InfeasibleClass);
}

TEST_CASE("affine optimum sign rule and ties") {
  const FunctionClass b = FunctionClass::box(Vec::Zero(3), Vec::Ones(3));
  const AffineOptimum mx = vertex_optimum_affine(b, vec({1.0, -1.0, 0.0}), OptSense::Maximize);
  CHECK(mx.value == 1.0);
  CHECK(mx.arg == vec({1.0, 0.0, 0.0}));
  const AffineOptimum mn = vertex_optimum_affine(b, vec({1.0, -1.0, 0.0}), OptSense::Minimize);
  CHECK(mn.value == -1.0);
  CHECK(mn.arg == vec({0.0, 1.0, 0.0}));

  const FunctionClass s = FunctionClass::singleton(vec({2.0, -1.0}));
  CHECK(vertex_optimum_affine(s, vec({1.0, 1.0}), OptSense::Maximize).value == 1.0);
  CHECK(vertex_optimum_affine(s, vec({1.0, 1.0}), OptSense::Minimize).value == 1.0);

  const FunctionClass f = FunctionClass::finite_set({vec({1.0, 0.0}), vec({0.0, 1.0}), vec({1.0, 0.0})});
  const AffineOptimum tie = vertex_optimum_affine(f, vec({1.0, 1.0}), OptSense::Maximize);
  CHECK(tie.value == 1.0);
  CHECK(tie.arg == vec({1.0, 0.0}));
}

TEST_CASE("box optimum matches grid enumeration and dominates members") {
  std::mt19937_64 gen(41);
  const Vec lo = mvi::testing::random_vector(gen, 4, -2.0, 0.0);
  const Vec hi = lo + mvi::testing::random_vector(gen, 4, 0.1, 3.0);
  const FunctionClass b = FunctionClass::box(lo, hi);
  for (int k = 0; k < 100; ++k) {
    const Vec c = mvi::testing::random_vector(gen, 4, -1.0, 1.0);
    double grid_max = -1e300;
    double grid_min = 1e300;
    for (int code = 0; code < 9 * 9 * 9 * 9; ++code) {
      int rest = code;
      Vec x(4);
      for (int i = 0; i < 4; ++i) {
        x(i) = lo(i) + (hi(i) - lo(i)) * (rest % 9) / 8.0;
        rest /= 9;
      }
      grid_max = std::max(grid_max, c.dot(x));
      grid_min = std::min(grid_min, c.dot(x));
    }
    CHECK(vertex_optimum_affine(b, c, OptSense::Maximize).value == doctest::Approx(grid_max).epsilon(1e-12));
    CHECK(vertex_optimum_affine(b, c, OptSense::Minimize).value == doctest::Approx(grid_min).epsilon(1e-12));
    const Vec member = lo + (hi - lo).cwiseProduct(mvi::testing::random_vector(gen, 4, 0.0, 1.0));
    CHECK(vertex_optimum_affine(b, c, OptSense::Maximize).value >= c.dot(member) - 1e-12);
    CHECK(vertex_optimum_affine(b, c, OptSense::Minimize).value <= c.dot(member) + 1e-12);
  }
}

TEST_CASE("polytope affine optimum through the LP path") {
  Mat eq(1, 3);
  eq << 1.0, 1.0, 1.0;
  const FunctionClass simplex = FunctionClass::polytope(-Mat::Identity(3, 3), Vec::Zero(3), eq, vec({1.0}));
  const AffineOptimum mx = vertex_optimum_affine(simplex, vec({0.2, 0.7, -0.1}), OptSense::Maximize);
  CHECK(mx.value == doctest::Approx(0.7));
  CHECK(mx.arg(1) == doctest::Approx(1.0));
  const AffineOptimum mn = vertex_optimum_affine(simplex, vec({0.2, 0.7, -0.1}), OptSense::Minimize);
  CHECK(mn.value == doctest::Approx(-0.1));
}

TEST_CASE("canonical classes") {
  const TabularMdp mdp = generate_random_mdp(1, 3, 2, 0.9);
  const auto [q, w] = canonical_box_classes(mdp, canonical_w_cap(6, 0.5));
  CHECK(q.upper()(0) == doctest::Approx(10.0));
  CHECK(w.upper()(0) == doctest::Approx(12.0));
  for (int seed = 1; seed <= 20; ++seed) {
    const auto inst = mvi::testing::random_instance(seed);
    const auto [qc, wc] = canonical_box_classes(inst.mdp, 1.0);
    CHECK(contains(qc, inst.q_pi));
  }
  CHECK_THROWS_AS(canonical_box_classes(mdp, 0.0), DimensionMismatch);
}

TEST_CASE("range caps and members") {
  const FunctionClass b = FunctionClass::box(vec({-3.0, 0.0}), vec({1.0, 2.0}));
  CHECK(b.range_cap() == 3.0);
  CHECK(contains(b, b.some_member()));
  const FunctionClass f = FunctionClass::finite_set({vec({1.0, -4.0}), vec({0.0, 0.5})});
  CHECK(f.range_cap() == 4.0);
  CHECK_FALSE(f.is_convex());
  CHECK(b.is_convex());
}
