#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metajudge/simulate.hpp"

using namespace metajudge;

TEST_CASE("perfect agents select exactly the correct judgments", "[simulate]") {
  SimulationProfile profile;
  profile.agent_accuracies = {1.0, 1.0, 1.0};
  const auto result =
      simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 50000, 42);
  REQUIRE(result.precision.has_value());
  CHECK(*result.precision == 1.0);
  CHECK(result.selected > 0);
  CHECK(result.correct_selected == result.selected);
}

TEST_CASE("simulation is seed-deterministic and thread-invariant", "[simulate]") {
  SimulationProfile profile;
  profile.agent_accuracies = {0.7, 0.8};
  profile.correlation = 0.3;

  const auto first =
      simulate_synthetic_panel(profile, Strategy::WeightedAverage, 4.5, 30000, 7, 1);
  const auto second =
      simulate_synthetic_panel(profile, Strategy::WeightedAverage, 4.5, 30000, 7, 4);
  CHECK(first.selected == second.selected);
  CHECK(first.correct_selected == second.correct_selected);

  const auto different_seed =
      simulate_synthetic_panel(profile, Strategy::WeightedAverage, 4.5, 30000, 8, 1);
  CHECK(different_seed.selected != first.selected);
}

TEST_CASE("coin-flip agents are indistinguishable from the base rate", "[simulate]") {
  SimulationProfile profile;
  profile.agent_accuracies = {0.5, 0.5, 0.5};
  profile.base_rate = 0.5;
  const auto result =
      simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 100000, 12345);
  REQUIRE(result.precision.has_value());
  // Two-sided z-test against the base rate at 99%.
  const double se = std::sqrt(0.5 * 0.5 / static_cast<double>(result.selected));
  const double z = (*result.precision - profile.base_rate) / se;
  CHECK(std::abs(z) < 2.5758);
}

TEST_CASE("three agents at p=0.8 beat one agent under majority voting", "[simulate]") {
  SimulationProfile trio;
  trio.agent_accuracies = {0.8, 0.8, 0.8};
  SimulationProfile solo;
  solo.agent_accuracies = {0.8};

  const auto panel = simulate_synthetic_panel(trio, Strategy::MajorityVote, 4.5, 50000, 7);
  const auto single = simulate_synthetic_panel(solo, Strategy::MajorityVote, 4.5, 50000, 7);
  REQUIRE(panel.precision.has_value());
  REQUIRE(single.precision.has_value());

  // One-sided two-proportion z-test at 99%.
  const double p1 = *panel.precision, p2 = *single.precision;
  const double se =
      std::sqrt(p1 * (1 - p1) / static_cast<double>(panel.selected) +
                p2 * (1 - p2) / static_cast<double>(single.selected));
  CHECK((p1 - p2) / se > 2.326);

  // Sanity against the closed-form values: 0.896 vs 0.8.
  CHECK_THAT(p1, Catch::Matchers::WithinAbs(0.896, 0.02));
  CHECK_THAT(p2, Catch::Matchers::WithinAbs(0.8, 0.02));
}

TEST_CASE("fully correlated agents collapse to a single agent", "[simulate]") {
  SimulationProfile correlated;
  correlated.agent_accuracies = {0.8, 0.8, 0.8};
  correlated.correlation = 1.0;
  const auto result =
      simulate_synthetic_panel(correlated, Strategy::MajorityVote, 4.5, 100000, 3);
  REQUIRE(result.precision.has_value());
  // No ensemble gain once every agent copies the same draw.
  CHECK_THAT(*result.precision, Catch::Matchers::WithinAbs(0.8, 0.02));
}

TEST_CASE("confidence half-width shrinks with more trials", "[simulate]") {
  SimulationProfile profile;
  profile.agent_accuracies = {0.8};
  const auto small = simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 2000, 1);
  const auto large =
      simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 200000, 1);
  REQUIRE(small.precision.has_value());
  REQUIRE(large.precision.has_value());
  CHECK(large.half_width_99 < small.half_width_99);
  CHECK(large.half_width_99 > 0.0);
}

TEST_CASE("simulation preconditions", "[simulate]") {
  SimulationProfile profile;
  profile.agent_accuracies = {0.8};
  CHECK_THROWS_AS(simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 0, 1),
                  PreconditionError);
  profile.agent_accuracies = {};
  CHECK_THROWS_AS(simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 100, 1),
                  PreconditionError);
  profile.agent_accuracies = {1.5};
  CHECK_THROWS_AS(simulate_synthetic_panel(profile, Strategy::MajorityVote, 4.5, 100, 1),
                  PreconditionError);
}
