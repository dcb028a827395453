#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssf/dataset.hpp"
#include "ssf/sim/kernel.hpp"

namespace ssf::sim {

struct Arena {
  double x_min = 0.0;
  double x_max = 60.0;
  double y_min = 0.0;
  double y_max = 60.0;
};

/// Several groups of individuals moving in a homogeneous arena. The only
/// covariate of a candidate step is its distance to the focal's nearest
/// other individual (the opponent); the selection coefficient on distance is
/// set by the opponent's group (< 0 attract, 0 neutral, > 0 repel).
struct SocialSpec {
  int n_groups = 3;
  int individuals_per_group = 5;
  std::vector<double> group_distance_effect{0.0, -1.0, 1.0};
  Arena arena;
  MovementKernel kernel;
  int n_steps = 200;
  int n_controls = 9;

  void validate() const;
  int n_individuals() const noexcept { return n_groups * individuals_per_group; }
  int group_of(int individual) const noexcept { return individual / individuals_per_group; }
};

struct SocialSimulation {
  StrataDataset data;
  std::vector<int> opponent_group;  // ground-truth group of every individual id
};

/// Steps all individuals simultaneously for n_steps; every focal step yields
/// one stratum. Throws DataError when more than 99% of kernel candidates fall
/// outside the arena.
SocialSimulation simulate_social(const SocialSpec& spec, std::uint64_t seed);

std::string social_truth_json(const SocialSpec& spec, std::uint64_t seed);
SocialSpec social_spec_from_json(const std::string& text);

}  // namespace ssf::sim
