#pragma once

// Batched forward/backward passes shared by scoring, training and the
// gradient check. Columns are candidates.

#include <Eigen/Core>
#include <span>
#include <vector>

#include "ssf/net/network.hpp"
#include "ssf/rng.hpp"

namespace ssf::net::detail {

struct Cache {
  Eigen::MatrixXd input;               // first-layer input, in_width x N
  std::vector<Eigen::MatrixXd> pre;    // hidden pre-activations
  std::vector<Eigen::MatrixXd> post;   // hidden activations (after dropout)
  std::vector<Eigen::MatrixXd> mask;   // scaled dropout masks, empty when inactive
  Eigen::MatrixXd emb;                 // gathered embeddings, dim x N
  Eigen::MatrixXd scale;               // 1 + M e, modulation wiring only
  Eigen::RowVectorXd out;              // scores
};

/// Picks the id column the embedding reads (individual or opponent).
std::span<const int> embedding_ids(const ArchSpec& arch, std::span<const int> individual,
                                   std::span<const int> opponent);

/// Throws DataError when an id is missing or outside the vocabulary.
void check_ids(const ArchSpec& arch, std::span<const int> ids, Eigen::Index n);

void forward(const SsfNetwork& net, const Eigen::MatrixXd& x, std::span<const int> ids,
             Cache& cache, CounterRng* dropout_rng);

/// Accumulates d(loss)/d(theta) into `grad` given d(loss)/d(score).
void backward(const SsfNetwork& net, const Eigen::MatrixXd& x, std::span<const int> ids,
              const Cache& cache, const Eigen::RowVectorXd& dout, Parameters& grad);

}  // namespace ssf::net::detail
