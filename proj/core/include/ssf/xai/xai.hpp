#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssf/model.hpp"
#include "ssf/packed.hpp"

namespace ssf::xai {

/// Pooled standard deviation of one covariate column.
double feature_sd(const PackedStrata& d, std::size_t feature);

/// 0.1 times the feature SD.
double default_epsilon(const PackedStrata& d, std::size_t feature);

/// Mean over all records of [f(x + eps e_j) - f(x - eps e_j)] / (2 eps).
/// Throws ConfigError unless 0 < eps <= 0.5 SD.
double average_conditional_effect(const ScoringModel& m, const PackedStrata& d, std::size_t feature,
                                  std::optional<double> epsilon = std::nullopt);

/// Mean four-point cross-partial d2f/dxi dxj over records, with default
/// per-feature steps as in the ACE.
double cross_partial_effect(const ScoringModel& m, const PackedStrata& d, std::size_t i, std::size_t j,
                            std::optional<double> eps_i = std::nullopt,
                            std::optional<double> eps_j = std::nullopt);

struct EffectReport {
  std::string feature;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  int n_bootstrap = 0;  // replicates that entered the SE
  int n_failed = 0;     // replicates excluded after exhausting retries
  bool degenerate_se = false;
};

/// Refits a model on a (resampled) dataset; `seed` drives any randomness.
/// Should throw ConvergenceError when the fit fails.
using Fitter = std::function<std::unique_ptr<ScoringModel>(const PackedStrata&, std::uint64_t seed)>;

struct BootstrapOptions {
  int replicates = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int max_retries = 3;
  // Per-feature step; defaults to 0.1 SD of the full data.
  std::optional<double> epsilon;
};

/// Resamples strata with replacement, refits and recomputes the ACE. The
/// estimate is the ACE of `full_model` (fitted here from the full data when
/// null); SE is the replicate SD; CI = est +- 1.96 SE; p is the two-sided
/// normal tail of est/SE, or 1 with degenerate_se when SE = 0.
std::vector<EffectReport> bootstrap_inference(const Fitter& fitter, const PackedStrata& d,
                                              const std::vector<std::size_t>& features,
                                              const std::vector<std::string>& feature_names,
                                              const BootstrapOptions& opts,
                                              const ScoringModel* full_model = nullptr);

/// Signed mean NLL increase when the feature column is permuted across all
/// records.
double permutation_importance(const ScoringModel& m, const PackedStrata& d, std::size_t feature,
                              int n_permutations, std::uint64_t seed);

/// mean NLL(i and j permuted together) - NLL(i) - NLL(j) + baseline, each
/// permutation applied identically. Signed.
double interaction_importance(const ScoringModel& m, const PackedStrata& d, std::size_t i, std::size_t j,
                              int n_permutations, std::uint64_t seed);

struct ImportanceTable {
  std::vector<std::string> features;
  std::vector<double> singles;  // signed
  std::map<std::pair<std::size_t, std::size_t>, double> pairs;  // signed, keyed with i < j

  double single(std::size_t i) const;          // clamped at 0
  double pair(std::size_t i, std::size_t j) const;  // clamped at 0, symmetric
  double pair_raw(std::size_t i, std::size_t j) const;
};

ImportanceTable importance_table(const ScoringModel& m, const PackedStrata& d,
                                 const std::vector<std::string>& feature_names, int n_permutations,
                                 std::uint64_t seed, bool with_pairs, unsigned threads = 1);

struct AleCurve {
  std::vector<double> bin_edges;        // n_bins + 1
  std::vector<double> centered_effect;  // n_bins, value at each bin midpoint
  std::vector<std::size_t> counts;      // records per bin
  std::vector<double> edge_effect;      // centered accumulated effect at the edges

  std::vector<double> bin_midpoints() const;
  /// Piecewise-linear interpolation of edge_effect, constant beyond the ends.
  double evaluate(double x) const;
};

/// First-order ALE on quantile bins. Throws DataError for a constant feature
/// or when ties leave fewer than n_bins distinct bin edges.
AleCurve ale_curve(const ScoringModel& m, const PackedStrata& d, std::size_t feature, int n_bins);

struct BiplotResult {
  std::vector<int> ids;
  Eigen::MatrixXd positions;  // ids x dim
  std::vector<std::string> features;
  Eigen::MatrixXd per_id_effect;  // ids x features, ACE on each id's own records
  Eigen::MatrixXd arrows;         // features x dim
  std::optional<std::map<int, int>> group_labels;
  bool rank_deficient = false;
};

/// Regresses per-id ACEs on [1, embedding position]; arrows are the slopes.
/// Throws CapabilityError for models without embeddings and DataError for
/// fewer than 3 ids.
BiplotResult embedding_biplot(const ScoringModel& m, const PackedStrata& d,
                              const std::vector<std::size_t>& features,
                              const std::vector<std::string>& feature_names,
                              std::optional<double> epsilon = std::nullopt);

}  // namespace ssf::xai
