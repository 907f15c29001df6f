#include <doctest.h>

#include <cmath>

#include "rps/error.hpp"
#include "rps/pathloss.hpp"

using namespace rps;
using doctest::Approx;

TEST_CASE("free-space reference loss") {
  CHECK(free_space_pl0(900.0) == Approx(20.0 * std::log10(900.0) - 27.55).epsilon(1e-14));
  CHECK(free_space_pl0(900.0) == Approx(31.535).epsilon(1e-4));
  CHECK(free_space_pl0(1.0) == Approx(-27.55).epsilon(1e-14));
  CHECK(free_space_pl0(100.0) == Approx(12.45).epsilon(1e-14));
  CHECK(free_space_pl0(100.0, 10.0) == Approx(32.45).epsilon(1e-14));
  CHECK_THROWS_AS((void)free_space_pl0(0.0), DomainError);
  CHECK_THROWS_AS((void)free_space_pl0(-5.0), DomainError);
}

TEST_CASE("loss is transmit minus received power") {
  PathLossParams p;
  p.tx_power_dbm = 43.0;
  CHECK(path_loss(-68.535, p) == Approx(111.535).epsilon(1e-14));
  CHECK(path_loss(43.0, p) == 0.0);
  p.tx_power_dbm = 0.0;
  CHECK(path_loss(-50.0, p) == 50.0);
}

TEST_CASE("distance inversion") {
  PathLossParams p;
  p.n_pl = 2.8;
  CHECK(invert_distance(40.0, 40.0, p) == 1.0);
  CHECK(invert_distance(120.0, 40.0, p) == Approx(719.686).epsilon(1e-6));
  CHECK(invert_distance(68.0, 40.0, p) == Approx(10.0).epsilon(1e-14));
  p.d0_m = 2.0;
  CHECK(invert_distance(68.0, 40.0, p) == Approx(20.0).epsilon(1e-14));
}

TEST_CASE("rss to distance") {
  PathLossParams p;
  const double pl0 = 20.0 * std::log10(900.0) - 27.55;
  CHECK(rss_to_distance(43.0 - pl0, 900.0, p) == Approx(1.0).epsilon(1e-14));
  CHECK(rss_to_distance(-68.535, 900.0, p) == Approx(std::pow(10.0, (111.535 - pl0) / 28.0)).epsilon(1e-12));
  CHECK(rss_to_distance(-68.535, 900.0, p) == Approx(719.69).epsilon(1e-4));
  const double d = rss_to_distance(-70.0, 1800.0, p);
  CHECK(rss_to_distance(-70.0 - 28.0, 1800.0, p) == Approx(10.0 * d).epsilon(1e-13));
  CHECK(rss_at_distance(1.0, 900.0, p) == Approx(11.465).epsilon(1e-4));
}

TEST_CASE("distance decreases strictly with received power") {
  PathLossParams p;
  double prev = INFINITY;
  for (double theta = -150.0; theta <= 40.0; theta += 0.25) {
    const double d = rss_to_distance(theta, 2100.0, p);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("scale law") {
  PathLossParams p;
  for (double n : {1.5, 2.7, 2.8, 3.5, 6.0}) {
    p.n_pl = n;
    for (double x = -3.0; x <= 5.0; x += 0.125) {
      const double d = invert_distance(31.0 + 10.0 * n * x, 31.0, p);
      CHECK(std::abs(d / std::pow(10.0, x) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("forward model round trip") {
  PathLossParams p;
  for (double n : {2.7, 2.8, 3.5}) {
    p.n_pl = n;
    for (double e = 0.0; e <= 5.0; e += 0.01) {
      const double d = std::pow(10.0, e);
      for (double fc : {100.0, 900.5, 3499.5}) {
        const double back = rss_to_distance(rss_at_distance(d, fc, p), fc, p);
        CHECK(std::abs(back - d) / d < 1e-9);
      }
    }
  }
}

TEST_CASE("parameter validation") {
  PathLossParams p;
  CHECK_NOTHROW(p.validate());
  p.n_pl = 1.4;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.n_pl = 6.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = PathLossParams{};
  p.d0_m = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = PathLossParams{};
  p.shadowing_sigma_db = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
