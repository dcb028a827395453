#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssf/dataset.hpp"
#include "ssf/model.hpp"

namespace ssf::net {

enum class Activation { relu, selu, tanh };
enum class EmbeddingWiring { concat, modulation };

const char* to_string(Activation a) noexcept;
const char* to_string(EmbeddingWiring w) noexcept;
Activation activation_from_string(const std::string& s);
EmbeddingWiring wiring_from_string(const std::string& s);

struct EmbeddingSpec {
  int vocab_size = 0;
  int dim = 2;
  EmbeddingTarget target = EmbeddingTarget::individual;
  // concat: the id's embedding vector is appended to the covariates.
  // modulation: covariates are scaled by (1 + M e), M learned.
  EmbeddingWiring wiring = EmbeddingWiring::concat;
};

struct ArchSpec {
  std::size_t n_features = 1;
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::relu;
  std::optional<EmbeddingSpec> embeddings;
  double dropout_rate = 0.0;
  double l2 = 0.0;
  double l1 = 0.0;

  /// Throws ConfigError on invalid widths or rates.
  void validate() const;
  std::size_t input_width() const noexcept;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Every trainable tensor of a network. Gradients and optimizer moments use
/// the same layout.
struct Parameters {
  std::vector<DenseLayer> layers;  // hidden layers then the 1-unit output
  Eigen::MatrixXd embedding;       // vocab x dim, empty without embeddings
  Eigen::MatrixXd modulation;      // n_features x dim, modulation wiring only

  std::size_t size() const noexcept;
  Parameters zeros_like() const;
  bool all_finite() const;

  /// Applies fn(Eigen::Map<VectorXd>) to each tensor in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn);
  template <typename Fn>
  void for_each(Fn&& fn) const;
};

/// Feed-forward step-selection network: candidate covariates (and optionally
/// an embedded categorical id) -> scalar log selection score.
class SsfNetwork final : public ScoringModel {
 public:
  SsfNetwork(ArchSpec arch, Parameters params);

  std::string kind() const override { return "dnn"; }
  std::size_t n_features() const override { return arch_.n_features; }
  Eigen::VectorXd score(const Eigen::MatrixXd& x, std::span<const int> individual,
                        std::span<const int> opponent) const override;
  using ScoringModel::score;
  std::optional<EmbeddingTarget> embedding_target() const override;
  Eigen::VectorXd embedding_position(int id) const override;

  const ArchSpec& arch() const noexcept { return arch_; }
  const Parameters& params() const noexcept { return params_; }
  Parameters& params() noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& theta);

  bool trained = false;

 private:
  ArchSpec arch_;
  Parameters params_;
};

/// He-uniform (relu) or Glorot-uniform (tanh, selu) weights, zero biases,
/// N(0, 0.1) embeddings. Deterministic per seed.
SsfNetwork build_network(const ArchSpec& arch, std::uint64_t seed);

/// Scores of one stratum's records (inference mode). Throws DataError when
/// records span several strata, have the wrong covariate length, or carry an
/// id outside the embedding vocabulary.
Eigen::VectorXd score_candidates(const SsfNetwork& net, const std::vector<StepRecord>& stratum);

/// Row `id` of the embedding table. Throws CapabilityError without
/// embeddings, std::out_of_range for a bad id.
Eigen::VectorXd embedding_lookup(const SsfNetwork& net, int id);

}  // namespace ssf::net

#include "ssf/net/network_impl.hpp"
