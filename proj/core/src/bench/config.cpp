#include "ssf/bench/config.hpp"

#include <functional>
#include <map>
#include <json.hpp>

#include "ssf/error.hpp"
#include "ssf/sim/selection.hpp"

namespace ssf::bench {

using nlohmann::json;

ScenarioConfig ScenarioConfig::defaults(int scenario) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.arch.hidden = {32, 32};
  c.train.epochs = 150;
  c.train.learning_rate = 0.01;
  switch (scenario) {
    case 1:
    case 2:
    case 3:
      break;
    case 4:
      c.n_strata = 10000;
      c.n_repetitions = 10;
      c.arch.l2 = 1e-4;
      break;
    case 5:
      c.n_repetitions = 10;
      c.social.group_distance_effect = {0.0, -2.0, 2.0};
      break;
    default:
      throw ConfigError("scenario must be 1-5, got " + std::to_string(scenario));
  }
  return c;
}

void ScenarioConfig::validate() const {
  if (scenario < 1 || scenario > 5) throw ConfigError("scenario must be 1-5");
  if (n_repetitions < 1) throw ConfigError("n_repetitions must be >= 1");
  if (n_strata < 1) throw ConfigError("n_strata must be >= 1");
  if (n_controls < 1) throw ConfigError("n_controls must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  arch.validate();
  train.validate();
  if (scenario == 1) {
    if (true_effect_grid.empty()) throw ConfigError("true_effect_grid must not be empty");
    if (bootstrap_replicates == 1 || bootstrap_replicates < 0)
      throw ConfigError("bootstrap_replicates must be 0 or >= 2");
  }
  if (scenario == 2) {
    if (truths.empty()) throw ConfigError("truths must not be empty");
    for (const auto& t : truths) (void)sim::transform_from_string(t);
    if (ale_bins < 2) throw ConfigError("ale_bins must be >= 2");
    spline.validate();
  }
  if (scenario == 4) {
    if (n_groups < 2) throw ConfigError("n_groups must be >= 2");
    if (n_individuals < n_groups || n_individuals % n_groups != 0)
      throw ConfigError("n_individuals must be a positive multiple of n_groups");
    if (n_predictors != 20) throw ConfigError("n_predictors must be 20 (10 independent, 5 correlated, 5 null)");
  }
  if (scenario == 5) social.validate();
}

namespace {

json arch_json(const ScenarioConfig& c) {
  return {{"hidden", c.arch.hidden},
          {"activation", net::to_string(c.arch.activation)},
          {"dropout_rate", c.arch.dropout_rate},
          {"l2", c.arch.l2},
          {"l1", c.arch.l1},
          {"embedding_dim", c.embedding_dim},
          {"wiring", net::to_string(c.wiring)}};
}

json train_json(const net::TrainConfig& t) {
  json j = {{"epochs", t.epochs},
            {"learning_rate", t.learning_rate},
            {"batch_strata", t.batch_strata},
            {"optimizer", net::to_string(t.optimizer)},
            {"validation_fraction", t.validation_fraction}};
  j["early_stop_patience"] = t.early_stop_patience ? json(*t.early_stop_patience) : json(nullptr);
  return j;
}

json spline_json(const glm::SplineSettings& s) {
  json j = {{"interior_knots", s.interior_knots},
            {"degree", s.degree},
            {"penalty_grid", s.penalty_grid},
            {"folds", s.folds}};
  j["fixed_penalty"] = s.fixed_penalty ? json(*s.fixed_penalty) : json(nullptr);
  return j;
}

json social_json(const sim::SocialSpec& s) {
  return {{"n_groups", s.n_groups},
          {"individuals_per_group", s.individuals_per_group},
          {"group_distance_effect", s.group_distance_effect},
          {"n_steps", s.n_steps},
          {"arena", {{"x_min", s.arena.x_min}, {"x_max", s.arena.x_max}, {"y_min", s.arena.y_min}, {"y_max", s.arena.y_max}}},
          {"kernel",
           {{"gamma_shape", s.kernel.gamma_shape},
            {"gamma_rate", s.kernel.gamma_rate},
            {"vm_mu", s.kernel.vm_mu},
            {"vm_kappa", s.kernel.vm_kappa}}}};
}

// Applies each present key through its setter; rejects unknown keys.
using Setter = std::function<void(const json&)>;

void apply(const json& j, const std::string& where, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + path + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path + "' has the wrong type: " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw json::type_error::create(302, "expected a boolean", nullptr);
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw json::type_error::create(302, "expected an integer", nullptr);
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned())
          throw json::type_error::create(302, "expected a non-negative integer", nullptr);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw json::type_error::create(302, "expected a number", nullptr);
    }
    field = v.get<T>();
  };
}

template <typename T>
Setter set_optional(std::optional<T>& field) {
  return [&field](const json& v) {
    if (v.is_null()) field.reset();
    else field = v.get<T>();
  };
}

}  // namespace

std::string config_to_json(const ScenarioConfig& c) {
  json j = {{"scenario", c.scenario},
            {"n_repetitions", c.n_repetitions},
            {"n_strata", c.n_strata},
            {"n_controls", c.n_controls},
            {"seed", c.seed},
            {"threads", c.threads},
            {"alpha", c.alpha},
            {"arch", arch_json(c)},
            {"train", train_json(c.train)},
            {"true_effect_grid", c.true_effect_grid},
            {"bootstrap_replicates", c.bootstrap_replicates},
            {"truths", c.truths},
            {"ale_bins", c.ale_bins},
            {"spline", spline_json(c.spline)},
            {"n_individuals", c.n_individuals},
            {"n_groups", c.n_groups},
            {"n_predictors", c.n_predictors},
            {"shared_betas", c.shared_betas},
            {"social", social_json(c.social)},
            {"write_artifacts", c.write_artifacts}};
  return j.dump(1);
}

ScenarioConfig config_from_json(const std::string& text, const ScenarioConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = base;
  std::string activation, wiring, optimizer;
  activation = net::to_string(c.arch.activation);
  wiring = net::to_string(c.wiring);
  optimizer = net::to_string(c.train.optimizer);

  const std::map<std::string, Setter> arch{
      {"hidden", set(c.arch.hidden)},
      {"activation", set(activation)},
      {"dropout_rate", set(c.arch.dropout_rate)},
      {"l2", set(c.arch.l2)},
      {"l1", set(c.arch.l1)},
      {"embedding_dim", set(c.embedding_dim)},
      {"wiring", set(wiring)}};
  const std::map<std::string, Setter> train{
      {"epochs", set(c.train.epochs)},
      {"learning_rate", set(c.train.learning_rate)},
      {"batch_strata", set(c.train.batch_strata)},
      {"optimizer", set(optimizer)},
      {"early_stop_patience", set_optional(c.train.early_stop_patience)},
      {"validation_fraction", set(c.train.validation_fraction)}};
  const std::map<std::string, Setter> spline{
      {"interior_knots", set(c.spline.interior_knots)},
      {"degree", set(c.spline.degree)},
      {"penalty_grid", set(c.spline.penalty_grid)},
      {"folds", set(c.spline.folds)},
      {"fixed_penalty", set_optional(c.spline.fixed_penalty)}};
  const std::map<std::string, Setter> arena{
      {"x_min", set(c.social.arena.x_min)},
      {"x_max", set(c.social.arena.x_max)},
      {"y_min", set(c.social.arena.y_min)},
      {"y_max", set(c.social.arena.y_max)}};
  const std::map<std::string, Setter> kernel{
      {"gamma_shape", set(c.social.kernel.gamma_shape)},
      {"gamma_rate", set(c.social.kernel.gamma_rate)},
      {"vm_mu", set(c.social.kernel.vm_mu)},
      {"vm_kappa", set(c.social.kernel.vm_kappa)}};
  const std::map<std::string, Setter> social{
      {"n_groups", set(c.social.n_groups)},
      {"individuals_per_group", set(c.social.individuals_per_group)},
      {"group_distance_effect", set(c.social.group_distance_effect)},
      {"n_steps", set(c.social.n_steps)},
      {"arena", [&](const json& v) { apply(v, "social.arena", arena); }},
      {"kernel", [&](const json& v) { apply(v, "social.kernel", kernel); }}};
  const std::map<std::string, Setter> top{
      {"scenario", set(c.scenario)},
      {"n_repetitions", set(c.n_repetitions)},
      {"n_strata", set(c.n_strata)},
      {"n_controls", set(c.n_controls)},
      {"seed", set(c.seed)},
      {"threads", set(c.threads)},
      {"alpha", set(c.alpha)},
      {"arch", [&](const json& v) { apply(v, "arch", arch); }},
      {"train", [&](const json& v) { apply(v, "train", train); }},
      {"true_effect_grid", set(c.true_effect_grid)},
      {"bootstrap_replicates", set(c.bootstrap_replicates)},
      {"truths", set(c.truths)},
      {"ale_bins", set(c.ale_bins)},
      {"spline", [&](const json& v) { apply(v, "spline", spline); }},
      {"n_individuals", set(c.n_individuals)},
      {"n_groups", set(c.n_groups)},
      {"n_predictors", set(c.n_predictors)},
      {"shared_betas", set(c.shared_betas)},
      {"social", [&](const json& v) { apply(v, "social", social); }},
      {"write_artifacts", set(c.write_artifacts)}};
  apply(j, "", top);
  c.arch.activation = net::activation_from_string(activation);
  c.wiring = net::wiring_from_string(wiring);
  c.train.optimizer = net::optimizer_from_string(optimizer);
  c.social.n_controls = c.n_controls;
  return c;
}

}  // namespace ssf::bench
