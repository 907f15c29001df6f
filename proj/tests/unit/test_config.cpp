#include <doctest.h>

#include <string>

#include "rps/config.hpp"
#include "rps/error.hpp"

using namespace rps;

TEST_CASE("key value parsing") {
  const auto f = KeyValueFile::parse_string(
      "# header\n"
      "alpha = 1.5\n"
      "\n"
      "name = two words   # trailing\n"
      "point = 1, 2\n"
      "point = 3 4\n"
      "flag = true\n");
  CHECK(f.contains("alpha"));
  CHECK_FALSE(f.contains("beta"));
  CHECK(f.get_double("alpha", 0) == 1.5);
  CHECK(f.get_double("beta", 7) == 7);
  CHECK(f.get_string("name", "") == "two words");
  CHECK(f.get_all("point") == std::vector<std::string>{"1, 2", "3 4"});
  CHECK(f.get_doubles("point", {}) == std::vector<double>{3, 4});
  CHECK(f.get_bool("flag", false));
  CHECK(f.entries()[1].line == 4);
}

TEST_CASE("typed accessor errors name the key and line") {
  const auto f = KeyValueFile::parse_string("a = 1\nb = x\nc = 2.5\n");
  try {
    (void)f.get_double("b", 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("b") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)f.get_int("c", 0), ConfigError);
  CHECK_THROWS_AS((void)f.get_bool("c", false), ConfigError);
  CHECK_THROWS_AS(KeyValueFile::parse_string("no equals sign\n"), ConfigError);
}

TEST_CASE("unknown keys and overrides") {
  auto f = KeyValueFile::parse_string("a = 1\nzzz = 2\n");
  const std::string_view known[] = {"a"};
  CHECK_THROWS_AS(f.reject_unknown(known), ConfigError);
  f.set("a", "5");
  CHECK(f.get_int("a", 0) == 5);
  CHECK_THROWS_AS((void)KeyValueFile::load("/nonexistent/x.conf"), InputError);
}

TEST_CASE("number lists") {
  CHECK(parse_number_list("1, 2,3  4") == std::vector<double>{1, 2, 3, 4});
  CHECK(parse_number_list("-2.5e1") == std::vector<double>{-25});
  CHECK_THROWS_AS((void)parse_number_list("1, two"), ConfigError);
}
