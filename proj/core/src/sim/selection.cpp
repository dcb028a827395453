#include "ssf/sim/selection.hpp"

#include <cmath>
#include <json.hpp>

#include "ssf/error.hpp"
#include "ssf/rng.hpp"

namespace ssf::sim {

double apply_transform(Transform t, double x) noexcept {
  switch (t) {
    case Transform::identity:
      return x;
    case Transform::hump: {
      const double z = x / 0.35;
      return 2.0 * std::exp(-z * z);
    }
    case Transform::wiggle:
      return std::sin(6.0 * x) + 0.5 * x;
    case Transform::zero:
      return 0.0;
  }
  return x;
}

const char* to_string(Transform t) noexcept {
  switch (t) {
    case Transform::identity:
      return "identity";
    case Transform::hump:
      return "hump";
    case Transform::wiggle:
      return "wiggle";
    case Transform::zero:
      return "zero";
  }
  return "identity";
}

Transform transform_from_string(const std::string& name) {
  if (name == "identity" || name == "linear") return Transform::identity;
  if (name == "hump") return Transform::hump;
  if (name == "wiggle") return Transform::wiggle;
  if (name == "zero" || name == "constant") return Transform::zero;
  throw ConfigError("unknown transform '" + name + "' (expected identity|hump|wiggle|zero)");
}

Transform SelectionSpec::transform_of(std::size_t feature) const noexcept {
  for (const auto& t : transforms) {
    if (t.feature == feature) return t.fn;
  }
  return Transform::identity;
}

void SelectionSpec::validate() const {
  if (n_features < 1) throw ConfigError("n_features must be >= 1");
  if (betas.size() != n_features) {
    throw ConfigError("betas has " + std::to_string(betas.size()) + " entries, expected n_features = " +
                      std::to_string(n_features));
  }
  if (n_controls < 1) throw ConfigError("n_controls must be >= 1 (got " + std::to_string(n_controls) + ")");
  if (n_strata < 1) throw ConfigError("n_strata must be >= 1 (got " + std::to_string(n_strata) + ")");
  for (const auto& k : interactions) {
    if (k.p == k.q) throw ConfigError("interaction indices must differ");
    if (k.p >= n_features || k.q >= n_features) {
      throw ConfigError("interaction index out of range");
    }
  }
  for (const auto& t : transforms) {
    if (t.feature >= n_features) throw ConfigError("transform feature index out of range");
  }
  for (const auto& [g, b] : group_betas) {
    if (b.size() != n_features) {
      throw ConfigError("group_betas[" + std::to_string(g) + "] has wrong length");
    }
  }
  if (!group_betas.empty()) {
    if (individual_group.empty()) throw ConfigError("group_betas requires individual_group");
    for (int g : individual_group) {
      if (!group_betas.count(g)) {
        throw ConfigError("individual_group references group " + std::to_string(g) +
                          " without coefficients");
      }
    }
  }
}

Eigen::VectorXd selection_scores(const SelectionSpec& spec, const Eigen::MatrixXd& candidates,
                                 const std::vector<double>& betas) {
  if (static_cast<std::size_t>(candidates.cols()) != spec.n_features) {
    throw DataError("candidate matrix has " + std::to_string(candidates.cols()) +
                    " columns, expected " + std::to_string(spec.n_features));
  }
  Eigen::MatrixXd g(candidates.rows(), candidates.cols());
  for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
    const Transform t = spec.transform_of(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) g(i, j) = apply_transform(t, candidates(i, j));
  }
  Eigen::VectorXd score = Eigen::VectorXd::Zero(candidates.rows());
  for (Eigen::Index j = 0; j < g.cols(); ++j) score += betas[static_cast<std::size_t>(j)] * g.col(j);
  for (const auto& k : spec.interactions) {
    score.array() += k.gamma * g.col(static_cast<Eigen::Index>(k.p)).array() *
                     g.col(static_cast<Eigen::Index>(k.q)).array();
  }
  return score;
}

Eigen::VectorXd selection_probabilities(const SelectionSpec& spec,
                                        const Eigen::MatrixXd& candidates,
                                        std::optional<int> group) {
  const std::vector<double>* betas = &spec.betas;
  if (group) {
    auto it = spec.group_betas.find(*group);
    if (it == spec.group_betas.end()) {
      throw ConfigError("no coefficients for group " + std::to_string(*group));
    }
    betas = &it->second;
  }
  const Eigen::VectorXd score = selection_scores(spec, candidates, *betas);
  if (!score.allFinite()) throw DataError("selection score is not finite");
  Eigen::VectorXd w = (score.array() - score.maxCoeff()).exp();
  return w / w.sum();
}

Eigen::Index draw_categorical(const Eigen::VectorXd& prob, double u) noexcept {
  double cum = 0.0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    cum += prob[i];
    if (u < cum) return i;
  }
  return prob.size() - 1;
}

StrataDataset simulate_selection(const SelectionSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.n_features);
  const Eigen::Index k = spec.n_controls + 1;
  const bool grouped = !spec.group_betas.empty();
  const auto n_ind = static_cast<int>(spec.individual_group.size());

  CounterRng cov_rng(derive_seed(seed, {1}));
  CounterRng pick_rng(derive_seed(seed, {2}));

  StrataDataset d;
  d.feature_names.reserve(spec.n_features);
  for (std::size_t j = 0; j < spec.n_features; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  d.n_individuals = grouped ? n_ind : 0;
  d.records.reserve(static_cast<std::size_t>(spec.n_strata * k));

  for (int s = 0; s < spec.n_strata; ++s) {
    for (Eigen::Index i = 0; i < k; ++i) {
      StepRecord r;
      r.stratum_id = s;
      r.covariates.resize(spec.n_features);
      for (auto& v : r.covariates) v = cov_rng.uniform();
      if (grouped) r.individual_id = s % n_ind;
      d.records.push_back(std::move(r));
    }
  }

  d = center_covariates(d);

  Eigen::MatrixXd cand(k, p);
  for (int s = 0; s < spec.n_strata; ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& cov = d.records[base + static_cast<std::size_t>(i)].covariates;
      for (Eigen::Index j = 0; j < p; ++j) cand(i, j) = cov[static_cast<std::size_t>(j)];
    }
    std::optional<int> group;
    if (grouped) group = spec.individual_group[static_cast<std::size_t>(s % n_ind)];
    const Eigen::VectorXd prob = selection_probabilities(spec, cand, group);
    const Eigen::Index chosen = draw_categorical(prob, pick_rng.uniform());
    d.records[base + static_cast<std::size_t>(chosen)].is_case = true;
  }
  return d;
}

std::string selection_truth_json(const SelectionSpec& spec, std::uint64_t seed) {
  nlohmann::json j;
  j["kind"] = "selection";
  j["seed"] = seed;
  j["n_features"] = spec.n_features;
  j["betas"] = spec.betas;
  j["n_controls"] = spec.n_controls;
  j["n_strata"] = spec.n_strata;
  j["interactions"] = nlohmann::json::array();
  for (const auto& k : spec.interactions) {
    j["interactions"].push_back({{"p", k.p}, {"q", k.q}, {"gamma", k.gamma}});
  }
  j["transforms"] = nlohmann::json::array();
  for (const auto& t : spec.transforms) {
    j["transforms"].push_back({{"feature", t.feature}, {"fn", to_string(t.fn)}});
  }
  j["group_betas"] = nlohmann::json::object();
  for (const auto& [g, b] : spec.group_betas) j["group_betas"][std::to_string(g)] = b;
  j["individual_group"] = spec.individual_group;
  return j.dump(2) + "\n";
}

SelectionSpec selection_spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SelectionSpec s;
    s.n_features = j.at("n_features").get<std::size_t>();
    s.betas = j.at("betas").get<std::vector<double>>();
    s.n_controls = j.at("n_controls").get<int>();
    s.n_strata = j.at("n_strata").get<int>();
    for (const auto& k : j.value("interactions", nlohmann::json::array())) {
      s.interactions.push_back({k.at("p").get<std::size_t>(), k.at("q").get<std::size_t>(),
                                k.at("gamma").get<double>()});
    }
    for (const auto& t : j.value("transforms", nlohmann::json::array())) {
      s.transforms.push_back({t.at("feature").get<std::size_t>(),
                              transform_from_string(t.at("fn").get<std::string>())});
    }
    const auto groups = j.value("group_betas", nlohmann::json::object());
    for (const auto& [g, b] : groups.items()) {
      s.group_betas[std::stoi(g)] = b.get<std::vector<double>>();
    }
    s.individual_group = j.value("individual_group", std::vector<int>{});
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed truth JSON: ") + e.what());
  }
}

}  // namespace ssf::sim
