#include "doctest.h"
#include "occlab/serialize.hpp"

#include <sstream>

using namespace occlab;

TEST_CASE("frequency specs round-trip through json") {
  std::vector<FrequencySpec> specs = {
      FrequencySpec::geometric(0.25),
      FrequencySpec::power_law(1.75),
      FrequencySpec::stretched_exp(0.5),
      FrequencySpec::poisson_weights(1.5),
      FrequencySpec::blocks(BlockRule::karlin_ex1),
      FrequencySpec::blocks(BlockRule::bgy_ex2),
      FrequencySpec::blocks(BlockRule::gen_ex, 0.4, 2.0),
      FrequencySpec::blocks(BlockRule::factorial),
      FrequencySpec::explicit_list({0.5, 0.3, 0.2}),
      FrequencySpec::explicit_list({0.5, 0.25}, true),
  };
  FrequencySpec eb;
  Blocks blocks;
  blocks.rule = BlockRule::explicit_blocks;
  blocks.blocks = {{2.0, 0.25}, {4.0, 0.125}};
  eb.model = blocks;
  specs.push_back(eb);

  for (const auto& spec : specs) {
    Json j = spec_to_json(spec);
    FrequencySpec back = spec_from_json(j);
    CHECK(spec_to_json(back) == j);
    CHECK(j.contains("family"));
  }
  // documented field names
  CHECK(spec_to_json(FrequencySpec::geometric(0.5))["family"] == "geometric");
  CHECK(spec_to_json(FrequencySpec::power_law(2.0))["exponent"] == 2.0);
}

TEST_CASE("unknown families are rejected") {
  Json j{{"family", "dirichlet"}};
  CHECK_THROWS_AS(spec_from_json(j), std::invalid_argument);
}

TEST_CASE("double formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 6.0 / (M_PI * M_PI), 1e-300, 123456789.123456789}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("moment csv layout") {
  FrequencyView geo(FrequencySpec::geometric(0.5));
  MomentTable tab = tabulate_moments(geo, {1, 2}, {1.0, 2.0}, {}, false, 1);
  std::ostringstream os;
  write_moment_csv(os, tab, Json{{"spec", "geometric"}});
  std::string text = os.str();
  CHECK(text.find("# occupancy-lab") == 0);
  CHECK(text.find("t,r,phi,var,cert\n") != std::string::npos);
  // header comment + config + column row + 4 data rows
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 7);
}

TEST_CASE("report json is well formed") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  CovMatrix m = corr_matrix(pl, {1, 2}, 50.0);
  Json j = to_json(m);
  CHECK(j["sigma"].size() == 2);
  CHECK(j["min_eigenvalue"].get<double>() > 0.0);

  DepoissonBound b = tv_bound(pl, 10000, 3);
  Json jb = to_json(b);
  for (const char* key : {"n", "m", "k", "pi_k", "bound", "applicable"}) CHECK(jb.contains(key));
}
