#include <doctest.h>

#include <cmath>
#include <random>

#include "mppi_dbas/safety.hpp"

using namespace mppi_dbas;

namespace
{

// brute-force minimum over the 8 x J grid, written independently of min_margin
double brute_min_margin(const VehicleState & s, const VehicleParams & p, const ConstraintSet & c)
{
  const double hl = p.length / 2;
  const double hw = p.width / 2;
  const double body[8][2] = {{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw},
    {hl, 0}, {0, -hw}, {-hl, 0}, {0, hw}};
  double best = INFINITY;
  for (const auto & b : body) {
    const double px = s.x + std::cos(s.theta) * b[0] - std::sin(s.theta) * b[1];
    const double py = s.y + std::sin(s.theta) * b[0] + std::cos(s.theta) * b[1];
    for (const auto & o : c.obstacles) {
      best = std::min(best, std::pow(px - o.center.x, 2) + std::pow(py - o.center.y, 2) -
          o.radius * o.radius);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("constraint_margin is squared distance minus squared radius")
{
  CHECK(constraint_margin({3, 4}, {{0, 0}, 2}) == 21.0);
  CHECK(constraint_margin({2, 0}, {{0, 0}, 2}) == 0.0);
  CHECK(constraint_margin({0, 0}, {{0, 0}, 2}) == -4.0);
}

TEST_CASE("min_margin over the shape-point / obstacle grid")
{
  const VehicleParams p;
  CHECK(std::isinf(min_margin({0, 0, 0, 0}, p, {})));
  CHECK(min_margin({0, 0, 0, 0}, p, {}) > 0);

  const ConstraintSet far{{{{30, 5}, 1.0}}};
  // nearest point is the front-left corner (2, 1.5)
  CHECK(min_margin({0, 0, 0, 0}, p, far) == doctest::Approx(28.0 * 28.0 + 3.5 * 3.5 - 1.0));

  const ConstraintSet inside{{{{1.9, 0.0}, 0.5}}};
  CHECK(min_margin({0, 0, 0, 0}, p, inside) < 0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    ConstraintSet c{{{{u(rng), u(rng)}, 0.5 + std::abs(u(rng)) / 5}, {{u(rng), u(rng)}, 1.0}}};
    const VehicleState s{u(rng), u(rng), u(rng), 0};
    CHECK(min_margin(s, p, c) == doctest::Approx(brute_min_margin(s, p, c)).epsilon(1e-12));
  }
}

TEST_CASE("inverse barrier values")
{
  const BarrierConfig cfg;
  CHECK(barrier(1.0, cfg) == 1.0);
  CHECK(barrier(0.25, cfg) == 4.0);
  CHECK(barrier(-0.1, cfg) == kUnsafe);
  CHECK(barrier(0.0, cfg) == kUnsafe);
}

TEST_CASE("barrier is continued linearly below epsilon_h")
{
  BarrierConfig cfg;
  cfg.epsilon_h = 1e-3;
  const double eps = cfg.epsilon_h;
  CHECK(barrier(eps, cfg) == doctest::Approx(1.0 / eps));
  // tangent line of 1/h at eps: 1/eps - (h - eps)/eps^2
  const double h = 0.25 * eps;
  CHECK(barrier(h, cfg) == doctest::Approx(1.0 / eps - (h - eps) / (eps * eps)));
  CHECK(std::isfinite(barrier(1e-300, cfg)));
}

TEST_CASE("barrier blows up monotonically as the margin shrinks")
{
  for (auto kind : {BarrierKind::Inverse, BarrierKind::ShiftedLog}) {
    BarrierConfig cfg;
    cfg.kind = kind;
    double previous = barrier(100.0, cfg);
    CHECK(previous >= 0.0);
    for (double h = 99.0; h > 1e-7; h *= 0.8) {
      const double b = barrier(h, cfg);
      CHECK(b > previous);
      previous = b;
    }
  }
}

TEST_CASE("shifted-log barrier is non-negative and vanishes far away")
{
  BarrierConfig cfg;
  cfg.kind = BarrierKind::ShiftedLog;
  CHECK(barrier(1.0, cfg) == doctest::Approx(std::log(2.0)));
  CHECK(barrier(1e9, cfg) < 1e-8);
  CHECK(barrier(-1.0, cfg) == kUnsafe);
}

TEST_CASE("barrier kind names round-trip")
{
  for (auto kind : {BarrierKind::Inverse, BarrierKind::ShiftedLog}) {
    CHECK(barrier_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(barrier_kind_from_string("quadratic"), std::invalid_argument);
}

TEST_CASE("BarrierConfig validation")
{
  BarrierConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma_bas = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon_h = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.beta_desired = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("dbas_step follows the barrier-state recursion")
{
  // a point-sized body: each obstacle contributes 8 identical terms
  VehicleParams p;
  p.length = 1e-12;
  p.width = 1e-12;
  // margin 4 at the origin, so B(h(next)) = 8 * 1/4 = 2
  const ConstraintSet c{{{{0.0, std::sqrt(5.0)}, 1.0}}};
  const VehicleState next{0, 0, 0, 0};
  BarrierConfig cfg;
  REQUIRE(fused_barrier(next, p, c, cfg) == doctest::Approx(2.0).epsilon(1e-9));

  SUBCASE("gain zero reduces to the fused barrier")
  {
    cfg.gamma_bas = 0.0;
    CHECK(dbas_step(0.3, next, p, c, cfg) == fused_barrier(next, p, c, cfg));
    CHECK(dbas_step(123.0, next, p, c, cfg) == fused_barrier(next, p, c, cfg));
  }
  SUBCASE("hand evaluation: 2 - 0.5 (0.1 - 0.3) = 2.1")
  {
    cfg.gamma_bas = 0.5;
    cfg.beta_desired = 0.1;
    CHECK(dbas_step(0.3, next, p, c, cfg) == doctest::Approx(2.1).epsilon(1e-9));
  }
  SUBCASE("unsafe propagates")
  {
    CHECK(dbas_step(kUnsafe, next, p, c, cfg) == kUnsafe);
    const ConstraintSet hit{{{{0.5, 0.0}, 1.0}}};
    CHECK(dbas_step(0.0, next, p, hit, cfg) == kUnsafe);
  }
}

TEST_CASE("multi-constraint fusion sums barrier values")
{
  // shrink the body to a point so each obstacle contributes 8 identical terms
  VehicleParams p;
  p.length = 1e-12;
  p.width = 1e-12;
  BarrierConfig cfg;
  cfg.gamma_bas = 0.0;
  // margins 8 and 4 give per-point barriers 1/8 and 1/4, so 8 points give 1 and 2
  const CircularObstacle a{{3.0, 0.0}, 1.0};
  const CircularObstacle b{{0.0, std::sqrt(5.0)}, 1.0};
  const VehicleState s{0, 0, 0, 0};
  CHECK(fused_barrier(s, p, {{a}}, cfg) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fused_barrier(s, p, {{b}}, cfg) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(dbas_step(0.7, s, p, {{a, b}}, cfg) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("fusion is additive over disjoint constraint sets")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20, 20);
  const VehicleParams p;
  BarrierConfig cfg;
  cfg.gamma_bas = 0.0;
  int checked = 0;
  while (checked < 200) {
    const ConstraintSet a{{{{u(rng), u(rng)}, 1.0}, {{u(rng), u(rng)}, 2.0}}};
    const ConstraintSet b{{{{u(rng), u(rng)}, 1.5}}};
    ConstraintSet both = a;
    both.obstacles.insert(both.obstacles.end(), b.obstacles.begin(), b.obstacles.end());
    const VehicleState s{u(rng) / 4, u(rng) / 4, u(rng), 0};
    const double sa = dbas_step(0.0, s, p, a, cfg);
    const double sb = dbas_step(0.0, s, p, b, cfg);
    if (!std::isfinite(sa) || !std::isfinite(sb)) {
      continue;
    }
    CHECK(std::abs(dbas_step(0.0, s, p, both, cfg) - (sa + sb)) <= 1e-12 * (sa + sb));
    ++checked;
  }
}

TEST_CASE("augmented_step leaves the nominal dynamics untouched")
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  const VehicleParams p;
  const ConstraintSet c{{{{8, 3}, 1.5}, {{-6, -2}, 2.0}}};
  const BarrierConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const AugmentedState s{{3 * u(rng), 3 * u(rng), 4 * u(rng), 5 + 3 * u(rng)}, std::abs(u(rng))};
    const VehicleControl ctrl{0.5 * u(rng), 3 * u(rng)};
    const auto next = augmented_step(s, ctrl, p, c, cfg);
    CHECK(next.nominal == step_vehicle(s.nominal, ctrl, p));
  }
}

TEST_CASE("augmented_step in free space")
{
  const VehicleParams p;
  BarrierConfig cfg;
  cfg.gamma_bas = 0.5;
  AugmentedState s = make_augmented({0, 0, 0, 5}, p, {}, cfg);
  CHECK(s.w == 0.0);
  for (int k = 0; k < 10; ++k) {
    s = augmented_step(s, {0.1, 0.2}, p, {}, cfg);
    CHECK(s.w == 0.0);
  }
  // any start value decays geometrically towards zero
  AugmentedState t{{0, 0, 0, 5}, 8.0};
  t = augmented_step(t, {}, p, {}, cfg);
  CHECK(t.w == 4.0);
}

TEST_CASE("augmented_step: finite w for safe states, unsafe on contact")
{
  const VehicleParams p;
  const BarrierConfig cfg;
  const ConstraintSet c{{{{10, 0}, 1.0}}};
  AugmentedState s = make_augmented({0, 0, 0, 5}, p, c, cfg);
  REQUIRE(std::isfinite(s.w));
  // drive straight into the obstacle
  bool hit = false;
  for (int k = 0; k < 30; ++k) {
    s = augmented_step(s, {}, p, c, cfg);
    const double margin = min_margin(s.nominal, p, c);
    hit = hit || margin <= 0;
    // once unsafe, w stays unsafe even after the body leaves the obstacle
    CHECK(std::isfinite(s.w) == !hit);
  }
  CHECK(hit);
}

TEST_CASE("finite barrier state along a rollout iff every visited state is safe")
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  const VehicleParams p;
  const BarrierConfig cfg;
  int safe_runs = 0;
  int unsafe_runs = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const ConstraintSet c{{{{6 + 3 * u(rng), 3 * u(rng)}, 1.0 + std::abs(u(rng))},
      {{12 + 3 * u(rng), 3 * u(rng)}, 1.0 + std::abs(u(rng))}}};
    AugmentedState s = make_augmented({0, 2 * u(rng), 0.5 * u(rng), 5 + 2 * u(rng)}, p, c, cfg);
    bool all_safe = brute_min_margin(s.nominal, p, c) > 0;
    bool all_finite = std::isfinite(s.w);
    for (int k = 0; k < 10; ++k) {
      s = augmented_step(s, {0.5 * u(rng), 3 * u(rng)}, p, c, cfg);
      all_safe = all_safe && brute_min_margin(s.nominal, p, c) > 0;
      all_finite = all_finite && std::isfinite(s.w);
    }
    CHECK(all_safe == all_finite);
    (all_safe ? safe_runs : unsafe_runs)++;
  }
  // both directions are exercised
  CHECK(safe_runs > 100);
  CHECK(unsafe_runs > 100);
}
