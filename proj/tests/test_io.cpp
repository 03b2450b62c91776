#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "agr/errors.hpp"
#include "agr/pomdp.hpp"
#include "agr/pomdp_io.hpp"

#include "test_support.hpp"

using agr::TabularPOMDP;
using Catch::Approx;

namespace {

TabularPOMDP from_text(const std::string& text,
                       std::size_t default_horizon = 30) {
  std::istringstream in(text);
  return agr::read_pomdp(in, default_horizon);
}

}  // namespace

TEST_CASE("round trip preserves every table value") {
  testsupport::TestRng rng(7501);
  std::uniform_int_distribution<std::size_t> s_dist(1, 7), a_dist(1, 4),
      z_dist(1, 5);
  for (int trial = 0; trial < 30; ++trial) {
    TabularPOMDP m = testsupport::random_pomdp(rng, s_dist(rng), a_dist(rng),
                                               z_dist(rng), 12, 0.9);
    std::ostringstream out;
    agr::write_pomdp(m, out);
    TabularPOMDP back = from_text(out.str());

    REQUIRE(back.num_states() == m.num_states());
    REQUIRE(back.num_actions() == m.num_actions());
    REQUIRE(back.num_observations() == m.num_observations());
    CHECK(back.discount() == Approx(m.discount()).margin(1e-9));
    CHECK(back.horizon() == m.horizon());
    for (std::size_t a = 0; a < m.num_actions(); ++a)
      for (std::size_t s = 0; s < m.num_states(); ++s) {
        for (std::size_t s2 = 0; s2 < m.num_states(); ++s2)
          REQUIRE(back.transition(s, a, s2) ==
                  Approx(m.transition(s, a, s2)).margin(1e-9));
        for (std::size_t o = 0; o < m.num_observations(); ++o)
          REQUIRE(back.observation(o, a, s) ==
                  Approx(m.observation(o, a, s)).margin(1e-9));
        REQUIRE(back.reward(s, a) == Approx(m.reward(s, a)).margin(1e-9));
      }
    for (std::size_t s = 0; s < m.num_states(); ++s)
      REQUIRE(back.initial_belief()[s] ==
              Approx(m.initial_belief()[s]).margin(1e-9));
  }
}

TEST_CASE("reader accepts names, wildcards and keyword forms") {
  std::string text =
      "discount: 0.9\n"
      "values: reward\n"
      "states: rain sun\n"
      "actions: wait probe\n"
      "observations: wet dry\n"
      "start: uniform\n"
      "T: wait\n"
      "identity\n"
      "T: probe : rain : sun 0.3\n"
      "T: probe : rain : rain 0.7\n"
      "T: probe : sun\n"
      "0.0 1.0\n"
      "O: wait\n"
      "uniform\n"
      "O: probe : * : wet 0.6\n"
      "O: probe : * : dry 0.4\n"
      "R: probe : * : * : * -1.5\n"
      "R: wait : sun : * : * 2\n";
  TabularPOMDP m = from_text(text, 8);

  REQUIRE(m.num_states() == 2);
  REQUIRE(m.num_actions() == 2);
  REQUIRE(m.num_observations() == 2);
  CHECK(m.horizon() == 8);
  CHECK(m.labels().states[0] == "rain");
  CHECK(m.labels().actions[1] == "probe");
  CHECK(m.initial_belief()[0] == Approx(0.5));

  CHECK(m.transition(0, 0, 0) == 1.0);
  CHECK(m.transition(1, 0, 1) == 1.0);
  CHECK(m.transition(0, 1, 1) == Approx(0.3));
  CHECK(m.transition(0, 1, 0) == Approx(0.7));
  CHECK(m.transition(1, 1, 1) == 1.0);
  CHECK(m.observation(0, 0, 1) == Approx(0.5));
  CHECK(m.observation(0, 1, 0) == Approx(0.6));
  CHECK(m.observation(1, 1, 1) == Approx(0.4));
  CHECK(m.reward(0, 1) == Approx(-1.5));
  CHECK(m.reward(1, 0) == Approx(2.0));
  CHECK(m.reward(0, 0) == 0.0);
}

TEST_CASE("values cost negates rewards") {
  std::string text =
      "discount: 0.95\n"
      "values: cost\n"
      "states: 1\n"
      "actions: 1\n"
      "observations: 1\n"
      "T: 0 : 0 : 0 1.0\n"
      "O: 0 : 0 : 0 1.0\n"
      "R: 0 : 0 : * : * 3.5\n";
  TabularPOMDP m = from_text(text);
  CHECK(m.reward(0, 0) == Approx(-3.5));
}

TEST_CASE("horizon annotation wins over the default") {
  std::string text =
      "# horizon: 12\n"
      "discount: 0.5\n"
      "states: 1\n"
      "actions: 1\n"
      "observations: 1\n"
      "T: 0 : 0 : 0 1.0\n"
      "O: 0 : 0 : 0 1.0\n";
  CHECK(from_text(text, 99).horizon() == 12);
}

TEST_CASE("start forms") {
  std::string base =
      "discount: 0.9\n"
      "states: a b c\n"
      "actions: 1\n"
      "observations: 1\n"
      "T: 0\nidentity\n"
      "O: 0\nuniform\n";
  CHECK(from_text(base + "start: b\n").initial_belief()[1] == 1.0);
  CHECK(from_text(base + "start: 2\n").initial_belief()[2] == 1.0);
  TabularPOMDP dist = from_text(base + "start: 0.2 0.3 0.5\n");
  CHECK(dist.initial_belief()[2] == Approx(0.5));
  CHECK(from_text(base).initial_belief()[0] == Approx(1.0 / 3));
}

TEST_CASE("successor- or observation-dependent rewards are rejected") {
  std::string text =
      "discount: 0.9\n"
      "states: 2\n"
      "actions: 1\n"
      "observations: 2\n"
      "T: 0\nidentity\n"
      "O: 0 : * : 0 1.0\n"
      "R: 0 : 0 : 0 : * 1.0\n"
      "R: 0 : 0 : 1 : * 2.0\n";
  CHECK_THROWS_MATCHES(from_text(text), agr::FormatError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                           "successor state or observation")));

  // agreeing entries across successors collapse to R(s,a) and are fine
  std::string ok =
      "discount: 0.9\n"
      "states: 2\n"
      "actions: 1\n"
      "observations: 2\n"
      "T: 0\nidentity\n"
      "O: 0 : * : 0 1.0\n"
      "R: 0 : 0 : 0 : * 1.0\n"
      "R: 0 : 0 : 1 : * 1.0\n";
  CHECK(from_text(ok).reward(0, 0) == Approx(1.0));
}

TEST_CASE("parse errors carry line numbers") {
  std::string text =
      "discount: 0.9\n"
      "states: 2\n"
      "actions: 1\n"
      "observations: 1\n"
      "wibble: 3\n";
  CHECK_THROWS_MATCHES(
      from_text(text), agr::FormatError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("line 5")));

  CHECK_THROWS_MATCHES(
      from_text("discount: banana\n"), agr::FormatError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("bad number")));
}

TEST_CASE("structural problems are rejected") {
  SECTION("missing discount") {
    CHECK_THROWS_AS(from_text("states: 1\nactions: 1\nobservations: 1\n"
                              "T: 0 : 0 : 0 1.0\nO: 0 : 0 : 0 1.0\n"),
                    agr::FormatError);
  }
  SECTION("missing headers") {
    CHECK_THROWS_AS(from_text("discount: 0.9\n"), agr::FormatError);
  }
  SECTION("unknown state name") {
    CHECK_THROWS_AS(
        from_text("discount: 0.9\nstates: a b\nactions: 1\nobservations: 1\n"
                   "T: 0 : zebra : a 1.0\n"),
        agr::FormatError);
  }
  SECTION("truncated matrix") {
    CHECK_THROWS_AS(from_text("discount: 0.9\nstates: 2\nactions: 1\n"
                              "observations: 1\nT: 0\n1.0 0.0\n"),
                    agr::FormatError);
  }
  SECTION("rows that do not normalize fail model validation") {
    CHECK_THROWS_AS(
        from_text("discount: 0.9\nstates: 2\nactions: 1\nobservations: 1\n"
                  "T: 0 : 0 : 1 0.5\nT: 0 : 1 : 1 1.0\n"
                  "O: 0 : * : 0 1.0\n"),
        agr::ModelInvariantViolation);
  }
}

TEST_CASE("last writer wins for repeated table coordinates") {
  std::string text =
      "discount: 0.9\n"
      "states: 2\n"
      "actions: 1\n"
      "observations: 1\n"
      "T: 0\nuniform\n"
      "T: 0 : 0 : 0 1.0\n"
      "T: 0 : 0 : 1 0.0\n"
      "O: 0 : * : 0 1.0\n";
  TabularPOMDP m = from_text(text);
  CHECK(m.transition(0, 0, 0) == 1.0);
  CHECK(m.transition(0, 0, 1) == 0.0);
  CHECK(m.transition(1, 0, 0) == Approx(0.5));
}
