#include "cli_args.hpp"
#include "doctest.h"

using nvbath_cli::Failure;
using nvbath_cli::parse_range;

TEST_CASE("range syntax") {
  CHECK(parse_range("1,2.5,4") == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(parse_range("1:4") == std::vector<double>{1, 2, 3, 4});
  CHECK(parse_range("2:12:2") == std::vector<double>{2, 4, 6, 8, 10, 12});
  const auto lg = parse_range("0.3:30:log");
  REQUIRE(lg.size() == 21);
  CHECK(lg.front() == 0.3);
  CHECK(lg.back() == 30.0);
  CHECK(lg[10] == doctest::Approx(3.0));
  const auto l5 = parse_range("1:50:log5");
  REQUIRE(l5.size() == 5);
  CHECK(l5[4] == 50.0);
  CHECK(parse_range("7") == std::vector<double>{7.0});
}

TEST_CASE("malformed ranges are rejected") {
  CHECK_THROWS_AS(parse_range("4:1"), Failure);
  CHECK_THROWS_AS(parse_range("1:2:0"), Failure);
  CHECK_THROWS_AS(parse_range("0:10:log"), Failure);
  CHECK_THROWS_AS(parse_range("1:x"), Failure);
  CHECK_THROWS_AS(parse_range("1,,2"), Failure);
  CHECK_THROWS_AS(parse_range("1:2:3:4"), Failure);
}
