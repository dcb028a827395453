#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssf/glm/spline.hpp"
#include "ssf/net/network.hpp"
#include "ssf/net/train.hpp"
#include "ssf/sim/social.hpp"

namespace ssf::bench {

/// Settings of one simulation experiment. Fields that a scenario does not
/// use are ignored by it.
struct ScenarioConfig {
  int scenario = 1;
  int n_repetitions = 100;
  int n_strata = 2000;
  int n_controls = 9;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = available parallelism
  double alpha = 0.05;

  // DNN used by every scenario. Embedding vocabularies are filled in by the
  // scenario; only their dimension and wiring are configurable.
  net::ArchSpec arch;
  net::TrainConfig train;
  int embedding_dim = 2;
  net::EmbeddingWiring wiring = net::EmbeddingWiring::concat;

  // Scenario 1.
  std::vector<double> true_effect_grid{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  int bootstrap_replicates = 20;  // 0 skips DNN inference (estimates only)

  // Scenario 2.
  std::vector<std::string> truths{"hump", "wiggle"};
  int ale_bins = 20;
  glm::SplineSettings spline;

  // Scenario 4.
  int n_individuals = 20;
  int n_groups = 4;
  int n_predictors = 20;
  bool shared_betas = false;  // control: every group uses one beta vector

  // Scenario 5.
  sim::SocialSpec social;

  // Write rep<i>/ dataset, truth and model files when an output directory
  // is given.
  bool write_artifacts = true;

  /// Full-scale defaults for a scenario (1-5).
  static ScenarioConfig defaults(int scenario);

  /// Throws ConfigError naming the violated bound.
  void validate() const;
};

/// JSON object with every field. Keys are sorted so output is byte-stable.
std::string config_to_json(const ScenarioConfig& cfg);

/// Overrides the defaults of `base` with the keys present in `text`.
/// Unknown keys and type mismatches throw ConfigError naming the key.
ScenarioConfig config_from_json(const std::string& text, const ScenarioConfig& base);

}  // namespace ssf::bench
