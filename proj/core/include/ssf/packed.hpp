#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ssf/dataset.hpp"

namespace ssf {

/// Column-major view of a dataset for numerical work: one column per record,
/// strata stored contiguously in order of first appearance.
struct PackedStrata {
  Eigen::MatrixXd x;                 // n_features x n_records
  std::vector<int> individual;       // -1 when absent
  std::vector<int> opponent;         // -1 when absent
  std::vector<Eigen::Index> start;   // n_strata + 1 column offsets
  std::vector<Eigen::Index> case_col;
  std::vector<std::int64_t> stratum_id;

  Eigen::Index n_strata() const noexcept {
    return static_cast<Eigen::Index>(stratum_id.size());
  }
  Eigen::Index n_records() const noexcept { return x.cols(); }
  Eigen::Index n_features() const noexcept { return x.rows(); }
  Eigen::Index size_of(Eigen::Index s) const noexcept { return start[s + 1] - start[s]; }
};

/// Packs a dataset. Throws DataError when validate_dataset reports problems.
PackedStrata pack_strata(const StrataDataset& d);

/// Builds a packed subset holding the listed strata (by packed index; repeats
/// allowed, as in a bootstrap resample).
PackedStrata select_strata(const PackedStrata& p, const std::vector<Eigen::Index>& strata);

}  // namespace ssf
