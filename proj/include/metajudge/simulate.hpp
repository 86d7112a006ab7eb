#pragma once

// Desk-scale synthetic-panel simulator. Live meta-judge precision depends on
// proprietary model behavior, so this provides a controlled stand-in: agents
// with known per-agent accuracy (and optional correlation) score judgments
// of known correctness, and the selection precision of each aggregation
// strategy is estimated by Monte Carlo.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "metajudge/aggregation.hpp"
#include "metajudge/errors.hpp"

namespace metajudge {

struct SimulationProfile {
  std::vector<double> agent_accuracies;  // p_i: P(agent scores in truth's favor)
  double correlation = 0.0;  // P(an agent copies the shared draw instead of its own)
  double base_rate = 0.5;    // P(a synthetic judgment is correct)
};

struct SimulationResult {
  std::int64_t trials = 0;
  std::int64_t selected = 0;
  std::int64_t correct_selected = 0;
  std::optional<double> precision;  // unset when nothing was selected
  double half_width_99 = 0.0;       // normal-approximation CI half-width at 99%
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct ShardTally {
  std::int64_t selected = 0;
  std::int64_t correct_selected = 0;
};

// One shard draws a fixed number of uniforms per trial (2 + 2 per agent) so
// the stream stays aligned independent of branch outcomes.
inline ShardTally simulate_shard(const SimulationProfile& profile, Strategy strategy,
                                 double threshold, std::int64_t trials,
                                 std::uint64_t shard_seed) {
  std::mt19937_64 rng(shard_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t agents = profile.agent_accuracies.size();

  ShardTally tally;
  std::vector<double> scores(agents);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    const bool correct = uniform(rng) < profile.base_rate;
    const double shared = uniform(rng);

    for (std::size_t i = 0; i < agents; ++i) {
      const bool use_shared = uniform(rng) < profile.correlation;
      const double own = uniform(rng);
      const double draw = use_shared ? shared : own;
      const bool right = draw < profile.agent_accuracies[i];
      const bool believes_correct = right == correct;
      scores[i] = believes_correct ? 5.0 : 1.0;
    }

    double final_score = 0.0;
    if (strategy == Strategy::MajorityVote) {
      std::size_t above = 0;
      for (double s : scores) {
        if (s > threshold) ++above;
      }
      final_score = 2 * above > agents ? 5.0 : 1.0;
    } else {
      // Weighted average with equal weights; the synthetic summarizer is an
      // averaging coordinator, so the summarized strategy reduces to the same.
      for (double s : scores) final_score += s;
      final_score /= static_cast<double>(agents);
    }

    if (final_score > threshold) {
      ++tally.selected;
      if (correct) ++tally.correct_selected;
    }
  }
  return tally;
}

}  // namespace detail

// Seeded and shard-deterministic: the shard partition is fixed, each shard
// owns an independent RNG stream derived from (seed, shard index), and the
// result is identical for any thread count.
inline SimulationResult simulate_synthetic_panel(const SimulationProfile& profile,
                                                 Strategy strategy, double threshold,
                                                 std::int64_t trials, std::uint64_t seed,
                                                 unsigned threads = 0) {
  if (trials < 1) throw PreconditionError("simulation needs at least 1 trial");
  if (profile.agent_accuracies.empty()) {
    throw PreconditionError("simulation needs at least 1 agent");
  }
  for (double p : profile.agent_accuracies) {
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("agent accuracy outside [0,1]");
  }
  if (!(profile.correlation >= 0.0 && profile.correlation <= 1.0)) {
    throw PreconditionError("correlation outside [0,1]");
  }
  if (!(profile.base_rate >= 0.0 && profile.base_rate <= 1.0)) {
    throw PreconditionError("base rate outside [0,1]");
  }

  constexpr std::int64_t kShardSize = 4096;
  const std::int64_t shard_count = (trials + kShardSize - 1) / kShardSize;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  std::vector<detail::ShardTally> tallies(static_cast<std::size_t>(shard_count));
  std::atomic<std::int64_t> next_shard{0};
  auto worker = [&] {
    while (true) {
      const std::int64_t shard = next_shard.fetch_add(1);
      if (shard >= shard_count) break;
      const std::int64_t shard_trials =
          std::min(kShardSize, trials - shard * kShardSize);
      const std::uint64_t shard_seed =
          detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(shard)));
      tallies[static_cast<std::size_t>(shard)] =
          detail::simulate_shard(profile, strategy, threshold, shard_trials, shard_seed);
    }
  };

  std::vector<std::thread> pool;
  const unsigned worker_count =
      static_cast<unsigned>(std::min<std::int64_t>(threads, shard_count));
  pool.reserve(worker_count);
  for (unsigned i = 0; i < worker_count; ++i) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();

  SimulationResult result;
  result.trials = trials;
  for (const auto& tally : tallies) {
    result.selected += tally.selected;
    result.correct_selected += tally.correct_selected;
  }
  if (result.selected > 0) {
    const double p = static_cast<double>(result.correct_selected) /
                     static_cast<double>(result.selected);
    result.precision = p;
    constexpr double z99 = 2.5758293035489004;
    result.half_width_99 =
        z99 * std::sqrt(p * (1.0 - p) / static_cast<double>(result.selected));
  }
  return result;
}

}  // namespace metajudge
