#include "ssf/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssf/error.hpp"

namespace ssf {

const char* to_string(EmbeddingTarget t) noexcept {
  return t == EmbeddingTarget::individual ? "individual" : "opponent";
}

EmbeddingTarget embedding_target_from_string(const std::string& s) {
  if (s == "individual") return EmbeddingTarget::individual;
  if (s == "opponent") return EmbeddingTarget::opponent;
  throw ConfigError("embedding target must be 'individual' or 'opponent', got '" + s + "'");
}

Eigen::VectorXd ScoringModel::embedding_position(int) const {
  throw CapabilityError("model of kind '" + kind() + "' has no embedding table");
}

double stratum_nll(std::span<const double> scores, std::size_t case_index) {
  if (case_index >= scores.size()) {
    throw std::invalid_argument("stratum_nll: case index out of range");
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return (m + std::log(sum)) - scores[case_index];
}

double mean_conditional_nll(const Eigen::VectorXd& scores, const PackedStrata& p) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < p.n_strata(); ++s) {
    const auto b = p.start[s];
    std::span<const double> seg(scores.data() + b, static_cast<std::size_t>(p.size_of(s)));
    total += stratum_nll(seg, static_cast<std::size_t>(p.case_col[s] - b));
  }
  return p.n_strata() > 0 ? total / static_cast<double>(p.n_strata()) : 0.0;
}

double mean_conditional_nll(const ScoringModel& m, const PackedStrata& p) {
  return mean_conditional_nll(m.score(p), p);
}

Eigen::VectorXd stratum_softmax(const Eigen::VectorXd& scores, const PackedStrata& p) {
  Eigen::VectorXd prob(scores.size());
  for (Eigen::Index s = 0; s < p.n_strata(); ++s) {
    auto seg = scores.segment(p.start[s], p.size_of(s));
    auto out = prob.segment(p.start[s], p.size_of(s));
    out = (seg.array() - seg.maxCoeff()).exp();
    out /= out.sum();
  }
  return prob;
}

}  // namespace ssf
