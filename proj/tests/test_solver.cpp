#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <sstream>
#include <vector>

#include "agr/corridor.hpp"
#include "agr/errors.hpp"
#include "agr/exact.hpp"
#include "agr/harness.hpp"
#include "agr/pbvi.hpp"
#include "agr/pomdp.hpp"

#include "test_support.hpp"

using agr::AlphaVector;
using agr::AlphaVectorPolicy;
using agr::Belief;
using agr::SolverParams;
using agr::TabularPOMDP;
using Catch::Approx;

TEST_CASE("exact solver matches a naive expectimax") {
  testsupport::TestRng rng(64001);
  std::uniform_int_distribution<std::size_t> s_dist(2, 5), a_dist(1, 3),
      z_dist(1, 4), h_dist(1, 4);
  for (int trial = 0; trial < 15; ++trial) {
    std::size_t horizon = h_dist(rng);
    TabularPOMDP m = testsupport::random_pomdp(rng, s_dist(rng), a_dist(rng),
                                               z_dist(rng), horizon, 0.9);
    auto sol = agr::exact_solve(m, horizon);
    std::vector<double> b0(m.initial_belief().probs().begin(),
                           m.initial_belief().probs().end());
    double expected = testsupport::naive_expectimax(m, b0, horizon);
    REQUIRE(sol.value == Approx(expected).margin(1e-9));

    // and from a random interior belief
    std::vector<double> b = testsupport::random_distribution(rng, m.num_states(),
                                                             m.num_states());
    double shifted = agr::exact_value_at(m, Belief(b), horizon);
    REQUIRE(shifted ==
            Approx(testsupport::naive_expectimax(m, b, horizon)).margin(1e-9));
  }
}

TEST_CASE("exact solver enforces its node budget") {
  testsupport::TestRng rng(5);
  TabularPOMDP m = testsupport::random_pomdp(rng, 4, 3, 3, 6, 0.9);
  agr::ExactSolveParams params;
  params.max_nodes = 3;
  CHECK_THROWS_AS(agr::exact_solve(m, 6, params), agr::TreeTooLarge);
}

TEST_CASE("exact policy tree replays its own value in simulation") {
  agr::CorridorParams params;
  params.n = 1;
  auto compiled = agr::compile(agr::build_corridor(params), {6, 0.95});
  const auto& m = compiled.pomdp;
  auto sol = agr::exact_solve(m, 6);

  agr::ExactTreePolicy policy(sol);
  auto stats = agr::detail::summarize(agr::evaluate_policy(m, policy, 4000, 777));
  CHECK(stats.mean == Approx(sol.value).margin(4.0 * stats.se + 1e-9));
  CHECK(sol.nodes > 0);
  CHECK(sol.root != nullptr);
}

TEST_CASE("policy DAG action usage scan") {
  agr::CorridorParams params;
  params.n = 1;
  auto compiled = agr::compile(agr::build_corridor(params), {6, 0.95});
  auto sol = agr::exact_solve(compiled.pomdp, 6);
  std::vector<std::size_t> decide;
  for (std::size_t a = 0; a < compiled.meta.num_actions(); ++a)
    if (compiled.meta.is_decide(a)) decide.push_back(a);
  CHECK(sol.uses_action(decide));  // opening doors is worth it here
  std::vector<std::size_t> none = {compiled.meta.num_actions() + 5};
  CHECK_FALSE(sol.uses_action(none));
}

TEST_CASE("belief expansion starts at the prior and avoids duplicates") {
  testsupport::TestRng rng(333);
  TabularPOMDP m = testsupport::random_pomdp(rng, 5, 3, 3, 8, 0.95);
  auto set = agr::expand_beliefs(m, 24, 9, 32);

  REQUIRE(!set.beliefs.empty());
  CHECK(set.beliefs.size() <= 24);
  CHECK(agr::l1_distance(set.beliefs[0], m.initial_belief()) < 1e-12);
  for (const Belief& b : set.beliefs) {
    double mass = 0.0;
    for (std::size_t s : b.support()) mass += b[s];
    CHECK(mass == Approx(1.0).margin(1e-9));
  }
  for (std::size_t i = 0; i < set.beliefs.size(); ++i)
    for (std::size_t j = i + 1; j < set.beliefs.size(); ++j)
      CHECK(agr::l1_distance(set.beliefs[i], set.beliefs[j]) > 1e-9);

  CHECK_THROWS_AS(agr::expand_beliefs(m, 0, 1), agr::InvalidParams);
}

TEST_CASE("point-based values lower-bound the exact solution") {
  testsupport::TestRng rng(91);
  std::uniform_int_distribution<std::size_t> s_dist(2, 5), a_dist(2, 3),
      z_dist(2, 3);
  for (int trial = 0; trial < 8; ++trial) {
    TabularPOMDP m =
        testsupport::random_pomdp(rng, s_dist(rng), a_dist(rng), z_dist(rng),
                                  4, 0.9);
    SolverParams params;
    params.belief_points = 24;
    params.epochs = 3;
    params.seed = 17 + static_cast<std::uint64_t>(trial);
    auto policy = agr::pbvi_solve(m, params);
    double exact = agr::exact_solve(m, m.horizon()).value;
    double approx = policy.value_at(m.initial_belief(), policy.horizon());
    CHECK(approx <= exact + 1e-9);

    const auto& gains = policy.metadata().epoch_values;
    for (std::size_t e = 1; e < gains.size(); ++e)
      CHECK(gains[e] >= gains[e - 1] - 1e-9);

    // level 0 is the all-zero vector
    REQUIRE(policy.level(0).size() == 1);
    for (double v : policy.level(0)[0].values) CHECK(v == 0.0);
  }
}

TEST_CASE("alpha policy lookups") {
  std::vector<std::vector<AlphaVector>> levels(2);
  levels[0].push_back({0, {0.0, 0.0}});
  levels[1].push_back({2, {1.0, 0.0}});
  levels[1].push_back({1, {1.0, 0.0}});  // exact tie with a lower action id
  levels[1].push_back({0, {0.0, 2.0}});
  AlphaVectorPolicy policy(levels, {});

  Belief left = Belief::point_mass(2, 0);
  Belief right = Belief::point_mass(2, 1);
  CHECK(policy.value_at(left, 1) == 1.0);
  CHECK(policy.value_at(right, 1) == 2.0);
  CHECK(policy.action_at(left, 1) == 1);   // tie resolved toward action 1
  CHECK(policy.action_at(right, 1) == 0);
  CHECK(agr::policy_action(policy, left) == 1);

  CHECK_THROWS_AS(policy.action_at(left, 0), agr::UndefinedPolicyAction);
  CHECK_THROWS_AS(policy.value_at(Belief::uniform(3), 1),
                  agr::DimensionMismatch);
  CHECK_THROWS_AS(policy.level(5), agr::InvalidParams);
  CHECK_THROWS_AS(AlphaVectorPolicy({}, {}), agr::InvalidParams);
}

TEST_CASE("policies survive a save and load round trip") {
  testsupport::TestRng rng(2752);
  TabularPOMDP m = testsupport::random_pomdp(rng, 4, 2, 3, 5, 0.9);
  SolverParams params;
  params.belief_points = 16;
  params.epochs = 2;
  params.seed = 3;
  auto policy = agr::pbvi_solve(m, params);

  std::stringstream buffer;
  agr::save_policy(policy, buffer);
  auto loaded = agr::load_policy(buffer);

  REQUIRE(loaded.horizon() == policy.horizon());
  for (std::size_t t = 0; t <= policy.horizon(); ++t) {
    const auto& a = policy.level(t);
    const auto& b = loaded.level(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].action == b[i].action);
      CHECK(a[i].values == b[i].values);  // bit-exact
    }
  }
  CHECK(loaded.metadata().belief_count == policy.metadata().belief_count);
  CHECK(loaded.metadata().epochs_run == policy.metadata().epochs_run);
  CHECK(loaded.metadata().seed == policy.metadata().seed);
  CHECK(loaded.metadata().converged == policy.metadata().converged);
  CHECK(loaded.metadata().epoch_values == policy.metadata().epoch_values);

  SECTION("corrupted magic") {
    std::string bytes = buffer.str();
    bytes[0] = 'X';
    std::istringstream bad(bytes);
    CHECK_THROWS_AS(agr::load_policy(bad), agr::FormatError);
  }
  SECTION("truncated stream") {
    std::string bytes = buffer.str();
    std::istringstream bad(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(agr::load_policy(bad), agr::FormatError);
  }
}

TEST_CASE("alpha policies drive simulations through the adapter") {
  testsupport::TestRng rng(42);
  TabularPOMDP m = testsupport::random_pomdp(rng, 4, 2, 3, 5, 0.95);
  SolverParams params;
  params.belief_points = 16;
  params.epochs = 2;
  auto policy = agr::pbvi_solve(m, params);
  agr::AlphaPolicyAdapter adapter(&policy);
  auto stats = agr::detail::summarize(agr::evaluate_policy(m, adapter, 64, 5));
  CHECK(stats.episodes == 64);
  CHECK(stats.mean >= stats.min);
  CHECK(stats.mean <= stats.max);
}

TEST_CASE("solver parameter validation") {
  testsupport::TestRng rng(1);
  TabularPOMDP m = testsupport::random_pomdp(rng, 3, 2, 2, 4, 0.9);
  SolverParams params;
  params.belief_points = 0;
  CHECK_THROWS_AS(agr::pbvi_solve(m, params), agr::InvalidParams);
  params.belief_points = 8;
  params.epochs = 0;
  CHECK_THROWS_AS(agr::pbvi_solve(m, params), agr::InvalidParams);
}
