#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssf/packed.hpp"

namespace ssf {

enum class EmbeddingTarget { individual, opponent };

const char* to_string(EmbeddingTarget t) noexcept;
EmbeddingTarget embedding_target_from_string(const std::string& s);

/// Anything that assigns a log selection score to candidate steps. The
/// conditional likelihood only sees score differences within a stratum, so
/// scores are defined up to an additive constant.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;

  /// "dnn", "glm" or "spline".
  virtual std::string kind() const = 0;
  virtual std::size_t n_features() const = 0;

  /// One score per column of `x` (features x candidates). `individual` and
  /// `opponent` hold one id per column, -1 when absent.
  virtual Eigen::VectorXd score(const Eigen::MatrixXd& x, std::span<const int> individual,
                                std::span<const int> opponent) const = 0;

  virtual std::optional<EmbeddingTarget> embedding_target() const { return std::nullopt; }

  /// Embedding vector of a categorical id. Throws CapabilityError for models
  /// without an embedding table.
  virtual Eigen::VectorXd embedding_position(int id) const;

  Eigen::VectorXd score(const PackedStrata& p) const {
    return score(p.x, p.individual, p.opponent);
  }
};

/// -log softmax(scores)[case_index], evaluated with max subtraction.
double stratum_nll(std::span<const double> scores, std::size_t case_index);

/// Mean stratum NLL of a score vector aligned with `p`'s columns.
double mean_conditional_nll(const Eigen::VectorXd& scores, const PackedStrata& p);
double mean_conditional_nll(const ScoringModel& m, const PackedStrata& p);

/// Within-stratum softmax of a score vector aligned with `p`'s columns.
Eigen::VectorXd stratum_softmax(const Eigen::VectorXd& scores, const PackedStrata& p);

}  // namespace ssf
