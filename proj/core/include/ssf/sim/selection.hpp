#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssf/dataset.hpp"

namespace ssf::sim {

/// Registered univariate truths applied to a (centered) covariate before it
/// enters the linear predictor.
enum class Transform { identity, hump, wiggle, zero };

double apply_transform(Transform t, double x) noexcept;
const char* to_string(Transform t) noexcept;
Transform transform_from_string(const std::string& name);

struct Interaction {
  std::size_t p = 0;
  std::size_t q = 0;
  double gamma = 0.0;
};

struct FeatureTransform {
  std::size_t feature = 0;
  Transform fn = Transform::identity;
};

/// Ground-truth generative model: w_i = exp(sum_j b_j g_j(x_ij) +
/// sum_k gamma_k g(x_ip) g(x_iq)) with g the registered transform (identity
/// by default).
struct SelectionSpec {
  std::size_t n_features = 1;
  std::vector<double> betas{0.0};
  std::vector<Interaction> interactions;
  std::vector<FeatureTransform> transforms;
  // When non-empty, stratum s belongs to individual s % individual_group.size()
  // and uses group_betas[individual_group[individual]] instead of betas.
  std::map<int, std::vector<double>> group_betas;
  std::vector<int> individual_group;
  int n_controls = 9;
  int n_strata = 2000;

  /// Throws ConfigError naming the violated bound.
  void validate() const;

  Transform transform_of(std::size_t feature) const noexcept;
};

/// Linear predictor of each candidate row (rows = candidates, columns =
/// features) under `betas`.
Eigen::VectorXd selection_scores(const SelectionSpec& spec, const Eigen::MatrixXd& candidates,
                                 const std::vector<double>& betas);

/// p(i) = w_i / sum w, computed with max-score subtraction. `group` picks a
/// group_betas entry. Throws DataError if any score is non-finite.
Eigen::VectorXd selection_probabilities(const SelectionSpec& spec,
                                        const Eigen::MatrixXd& candidates,
                                        std::optional<int> group = std::nullopt);

/// Inverse-CDF draw from a probability vector given u in [0, 1).
Eigen::Index draw_categorical(const Eigen::VectorXd& prob, double u) noexcept;

/// Simulates n_strata strata of n_controls + 1 candidates with U(0,1)
/// covariates, pooled-centered before selection; the case is a multinomial
/// draw from selection_probabilities. Bit-reproducible per seed.
StrataDataset simulate_selection(const SelectionSpec& spec, std::uint64_t seed);

/// Sidecar JSON recording the generating spec (and seed).
std::string selection_truth_json(const SelectionSpec& spec, std::uint64_t seed);
SelectionSpec selection_spec_from_json(const std::string& text);

}  // namespace ssf::sim
