#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace ssf::bench {

/// Per true-slope calibration of one model across completed repetitions.
struct CalibrationSummary {
  std::string model;  // "dnn" or "glm"
  double true_slope = 0.0;
  int n_completed = 0;
  int n_failed = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;      // mean_estimate - true_slope
  double coverage = 0.0;  // share of CIs containing the true slope
  double rejection = 0.0; // share of p-values below alpha
};

struct RepEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

CalibrationSummary calibrate(const std::string& model, double true_slope,
                             const std::vector<RepEstimate>& reps, int n_failed, double alpha);

struct EffectCell {
  std::size_t i = 0;  // i == j for a main effect
  std::size_t j = 0;
  double truth = 0.0;
  int n = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance over repetitions
  double mse = 0.0;       // mean squared error against truth
};

/// Upper triangle plus diagonal of a p x p effect grid, one model.
struct EffectMatrix {
  std::string model;
  std::size_t p = 0;
  std::vector<EffectCell> cells;  // row-major over i <= j

  const EffectCell& cell(std::size_t i, std::size_t j) const;

  double mean_mse() const;
  double mean_mse_mains() const;
  /// Interaction cells whose truth is (not) zero.
  double mean_mse_null_interactions() const;
  double mean_mse_true_interactions() const;
  /// Largest |mse - (variance + bias^2)| over cells.
  double identity_gap() const;
};

/// `estimates` holds one p x p matrix per repetition (upper triangle and
/// diagonal used); `truth` the generating effects in the same layout.
EffectMatrix effect_matrix(const std::string& model, const Eigen::MatrixXd& truth,
                           const std::vector<Eigen::MatrixXd>& estimates);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x dim
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; the best of `restarts` runs by
/// inertia. Rows of `points` are observations.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, std::uint64_t seed);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Mean silhouette width; 0 when every point shares one cluster.
double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels);

/// One-sided permutation p-value of the ARI between `labels` and `truth`:
/// (1 + #{ARI(labels, permuted truth) >= observed}) / (1 + n_permutations).
double ari_permutation_p(const std::vector<int>& labels, const std::vector<int>& truth,
                         int n_permutations, std::uint64_t seed);

struct ClusterSummary {
  int n_groups = 0;
  double ari = 0.0;
  double silhouette = 0.0;
  double permutation_p = 1.0;
  std::vector<int> cluster_labels;
};

ClusterSummary cluster_embeddings(const Eigen::MatrixXd& positions, const std::vector<int>& truth,
                                  int n_groups, std::uint64_t seed);

}  // namespace ssf::bench
