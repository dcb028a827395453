#pragma once

#include <Eigen/Core>
#include <vector>

#include "ssf/glm/clogit.hpp"

namespace ssf::glm::detail {

struct NewtonResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;  // negative Hessian of the (penalized) objective
  double objective = 0.0;       // loglik - beta' P beta
  int iterations = 0;
  bool converged = false;
  bool separated = false;
  std::vector<std::size_t> singular;  // non-empty when stopped on a singular Hessian
};

/// Maximizes loglik(beta) - beta' P beta from beta = 0.
NewtonResult newton_clogit(const Eigen::MatrixXd& design, const PackedStrata& d,
                           const Eigen::MatrixXd* penalty, const NewtonOptions& opts);

Eigen::MatrixXd information(const Eigen::MatrixXd& design, const PackedStrata& d,
                            const Eigen::VectorXd& beta, const Eigen::MatrixXd* penalty);

/// Terms loading on (near-)null eigenvectors of an information matrix.
std::vector<std::size_t> singular_directions(const Eigen::MatrixXd& info);

}  // namespace ssf::glm::detail
