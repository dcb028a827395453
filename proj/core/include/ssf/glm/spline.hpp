#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "ssf/dataset.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/model.hpp"

namespace ssf::glm {

struct SplineSettings {
  int interior_knots = 20;
  int degree = 3;
  std::vector<double> penalty_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  int folds = 5;
  // When set, skips cross-validation and uses this penalty.
  std::optional<double> fixed_penalty;
  std::uint64_t seed = 0;  // fold assignment

  void validate() const;
};

struct SplineFit {
  std::size_t feature = 0;
  std::vector<double> knots;  // full clamped knot vector
  int basis_degree = 3;
  Eigen::VectorXd coefficients;
  double penalty = 0.0;
  double loglik = 0.0;
  std::vector<double> cv_nll;  // mean held-out NLL per grid value; empty when fixed

  double lower() const { return knots.front(); }
  double upper() const { return knots.back(); }
  std::size_t n_basis() const { return knots.size() - static_cast<std::size_t>(basis_degree) - 1; }
};

/// Clamped knot vector with `interior` knots at quantiles of `values`.
/// Throws DataError when there are fewer distinct values than knots.
std::vector<double> quantile_knots(std::vector<double> values, int interior, int degree);

/// Values of every B-spline basis function at x (Cox-de Boor). x must lie in
/// [knots.front(), knots.back()].
Eigen::VectorXd bspline_basis(const std::vector<double>& knots, int degree, double x);

/// Basis matrix, one column per value.
Eigen::MatrixXd bspline_design(const std::vector<double>& knots, int degree, const Eigen::RowVectorXd& x);

/// Second divided differences of the coefficients over the Greville
/// abscissae, scaled by the mean abscissa spacing. Its null space is exactly
/// the coefficient vectors of affine functions.
Eigen::MatrixXd second_difference_matrix(const std::vector<double>& knots, int degree);

/// Penalized B-spline conditional logit on one feature.
SplineFit fit_clogit_spline(const StrataDataset& d, std::size_t feature, const SplineSettings& s = {});

/// Fitted expansion on `grid`, mean-centered over the grid. Throws DataError
/// for points outside the knot range.
Eigen::VectorXd spline_curve(const SplineFit& fit, const Eigen::VectorXd& grid);

/// Uncentered expansion at x; extrapolates linearly beyond the knot range.
double spline_value(const SplineFit& fit, double x);

/// Scoring adapter: the smoothed feature's expansion. Other features are
/// ignored.
class SplineModel final : public ScoringModel {
 public:
  SplineModel(std::size_t n_features, SplineFit fit);

  std::string kind() const override { return "spline"; }
  std::size_t n_features() const override { return n_features_; }
  Eigen::VectorXd score(const Eigen::MatrixXd& x, std::span<const int> individual,
                        std::span<const int> opponent) const override;
  using ScoringModel::score;

  const SplineFit& fit() const noexcept { return fit_; }

 private:
  std::size_t n_features_;
  SplineFit fit_;
};

}  // namespace ssf::glm
