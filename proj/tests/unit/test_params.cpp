#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nvbath/error.hpp"
#include "nvbath/parameters.hpp"

using namespace nvbath;

TEST_CASE("parameter JSON round trip is lossless") {
  const auto p = Params::defaults();
  const auto text = params_to_json(p);
  const auto q = params_from_json(text);
  CHECK(params_to_json(q) == text);
  CHECK(q.n15.tensor.a_parallel == p.n15.tensor.a_parallel);
  CHECK(q.constants.dipolar_prefactor == p.constants.dipolar_prefactor);
}

TEST_CASE("shipped parameter file matches the built-in defaults") {
  const auto shipped = load_params(std::string(NVBATH_DATA_DIR) + "/params/nvbath_default_params.json");
  CHECK(params_to_json(shipped) == params_to_json(Params::defaults()));
}

TEST_CASE("malformed parameter files are rejected") {
  CHECK_THROWS_AS(params_from_json("{"), Error);
  CHECK_THROWS_AS(params_from_json(R"({"schema": "other/1"})"), Error);
  CHECK_THROWS_AS(load_params("/nonexistent/params.json"), Error);
}
