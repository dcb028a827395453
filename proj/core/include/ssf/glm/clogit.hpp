#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "ssf/dataset.hpp"
#include "ssf/model.hpp"
#include "ssf/packed.hpp"

namespace ssf::glm {

/// Linear predictor terms: main effects plus pairwise products.
struct FormulaSpec {
  std::vector<std::size_t> main_effects;
  std::vector<std::pair<std::size_t, std::size_t>> interactions;

  std::size_t n_terms() const noexcept { return main_effects.size() + interactions.size(); }

  /// Throws ConfigError on out-of-range indices, self-interactions or
  /// duplicate terms.
  void validate(std::size_t n_features) const;

  std::vector<std::string> term_names(const std::vector<std::string>& features) const;
  std::string to_string(const std::vector<std::string>& features) const;

  /// Parses "x1 + x2 + x1:x2" (also accepts "x1*x2" for both mains and the
  /// product, and "." for every main effect).
  static FormulaSpec parse(const std::string& text, const std::vector<std::string>& features);
  static FormulaSpec main_only(std::size_t n_features);
  static FormulaSpec all_pairs(std::size_t n_features);
};

/// Term values (terms x candidates) of covariate columns (features x candidates).
Eigen::MatrixXd design_matrix(const FormulaSpec& f, const Eigen::MatrixXd& x);

struct NewtonOptions {
  double gradient_tol = 1e-8;
  int max_iterations = 50;
  double separation_bound = 50.0;
};

struct ClogitFit {
  FormulaSpec formula;
  std::vector<std::string> term_names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // inverse observed information
  bool converged = false;
  int n_iterations = 0;
  double loglik = 0.0;
  // Terms with no identifying information; their variances are +inf.
  std::vector<std::size_t> singular_terms;
};

/// Conditional-logit maximum likelihood by Newton-Raphson from zero.
/// Requires a valid, centered dataset. Converged when max |gradient| <
/// gradient_tol. Throws ConvergenceError on a singular Hessian (naming the
/// offending terms) or when any |coefficient| exceeds separation_bound.
ClogitFit fit_clogit_glm(const StrataDataset& d, const FormulaSpec& f, NewtonOptions opts = {});
ClogitFit fit_clogit_glm(const PackedStrata& d, const std::vector<std::string>& feature_names,
                         const FormulaSpec& f, NewtonOptions opts = {});

/// Conditional log-likelihood and its gradient at `beta`.
double clogit_loglik(const Eigen::MatrixXd& design, const PackedStrata& d, const Eigen::VectorXd& beta,
                     Eigen::VectorXd* gradient = nullptr);

struct WaldRow {
  std::string term;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// SE = sqrt(diag(cov)), z = est/SE, two-sided normal p, CI = est +- 1.96 SE.
/// Throws ConvergenceError for a non-converged fit.
std::vector<WaldRow> wald_inference(const ClogitFit& fit);

/// Two-sided standard-normal tail probability of |z|.
double two_sided_p(double z) noexcept;

/// Scoring adapter for xAI methods.
class GlmModel final : public ScoringModel {
 public:
  GlmModel(std::size_t n_features, ClogitFit fit);

  std::string kind() const override { return "glm"; }
  std::size_t n_features() const override { return n_features_; }
  Eigen::VectorXd score(const Eigen::MatrixXd& x, std::span<const int> individual,
                        std::span<const int> opponent) const override;
  using ScoringModel::score;

  const ClogitFit& fit() const noexcept { return fit_; }

 private:
  std::size_t n_features_;
  ClogitFit fit_;
};

}  // namespace ssf::glm
