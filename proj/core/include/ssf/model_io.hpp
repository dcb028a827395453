#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssf/model.hpp"

namespace ssf {

/// A model restored from JSON with its metadata.
struct ModelDocument {
  std::unique_ptr<ScoringModel> model;
  std::vector<std::string> feature_names;
  // Settings the model was fitted with, as a JSON object (used to refit, e.g.
  // for bootstrap replicates). "{}" when absent.
  std::string fit_config = "{}";
};

/// Self-describing JSON for dnn, glm and spline models, tagged by "kind".
/// Numbers are shortest round-trip decimals; non-finite values are written
/// as the strings "inf", "-inf" and "nan". Throws CapabilityError for other
/// model types and ConfigError when fit_config is not a JSON object.
std::string model_to_json(const ScoringModel& m, const std::vector<std::string>& feature_names,
                          const std::string& fit_config = "{}");

/// Throws DataError on malformed documents.
ModelDocument model_from_json(const std::string& text);

ModelDocument read_model_file(const std::string& path);
void write_model_file(const std::string& path, const ScoringModel& m,
                      const std::vector<std::string>& feature_names, const std::string& fit_config = "{}");

}  // namespace ssf
