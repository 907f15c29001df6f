#include <doctest.h>

#include <random>

#include "rps/error.hpp"
#include "rps/smoothing.hpp"

using namespace rps;

TEST_CASE("wma examples") {
  const std::vector<Vec2> fixes = {Vec2(0, 0), Vec2(3, 0), Vec2(6, 0)};
  const std::vector<double> ramp = {1, 2, 3};
  const Vec2 s = wma(fixes, ramp);
  CHECK(s.x() == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s.y() == 0.0);

  const std::vector<double> flat = {1, 1, 1};
  CHECK(wma(fixes, flat) == Vec2(3, 0));
  CHECK(sma(fixes) == Vec2(3, 0));

  const std::vector<Vec2> same(3, Vec2(2.5, -7.25));
  CHECK(wma(same, ramp) == same[0]);

  CHECK_THROWS_AS((void)wma(std::span<const Vec2>{}, std::span<const double>{}), ContractError);
  CHECK_THROWS_AS((void)wma(fixes, std::vector<double>{1, 2}), ContractError);
  CHECK_THROWS_AS((void)wma(fixes, std::vector<double>{1, 0, 3}), ContractError);
}

TEST_CASE("equal weights reproduce the simple mean bit for bit") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  std::uniform_real_distribution<double> wv(0.01, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 16);
    std::vector<Vec2> fixes(n);
    for (auto& f : fixes) f = Vec2(u(rng), u(rng));
    const std::vector<double> w(n, wv(rng));
    const Vec2 a = wma(fixes, w);
    const Vec2 b = sma(fixes);
    CHECK(a.x() == b.x());
    CHECK(a.y() == b.y());
  }
}

TEST_CASE("output stays in the per-axis range and moves with translations") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  std::uniform_real_distribution<double> wv(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 9);
    std::vector<Vec2> fixes(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      fixes[i] = Vec2(u(rng), u(rng));
      w[i] = wv(rng);
    }
    const Vec2 s = wma(fixes, w);
    Vec2 lo = fixes[0], hi = fixes[0];
    for (const auto& f : fixes) {
      lo = lo.cwiseMin(f);
      hi = hi.cwiseMax(f);
    }
    CHECK(s.x() >= lo.x());
    CHECK(s.x() <= hi.x());
    CHECK(s.y() >= lo.y());
    CHECK(s.y() <= hi.y());

    const Vec2 t(u(rng), u(rng));
    std::vector<Vec2> moved = fixes;
    for (auto& f : moved) f += t;
    CHECK((wma(moved, w) - (s + t)).norm() < 1e-9);
  }
}

TEST_CASE("moving average warm-up and sliding") {
  MovingAverage m(SmootherConfig{});
  CHECK(m.push(Vec2(0, 0)) == Vec2(0, 0));
  // First two samples use the newest two ramp weights, renormalized.
  const Vec2 second = m.push(Vec2(3, 0));
  CHECK(second.x() == doctest::Approx(3.0 * 3.0 / 5.0).epsilon(1e-15));
  CHECK(m.push(Vec2(6, 0)).x() == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(m.push(Vec2(9, 0)).x() == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(m.history().size() == 3);

  SmootherConfig sc;
  sc.kind = SmootherKind::sma;
  sc.window = 2;
  MovingAverage s(sc);
  s.push(Vec2(1, 1));
  s.push(Vec2(3, 3));
  CHECK(s.push(Vec2(5, 5)) == Vec2(4, 4));
}

TEST_CASE("smoother config validation") {
  SmootherConfig c;
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.window = 3;
  c.weights = {1, 2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.weights = {1, -2, 3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.kind = SmootherKind::sma;
  c.weights = {1, 2, 3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.weights = {};
  CHECK(c.resolved_weights() == std::vector<double>{1, 1, 1});
  c.kind = SmootherKind::wma;
  CHECK(c.resolved_weights() == std::vector<double>{1, 2, 3});
}
