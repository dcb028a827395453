#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssf/bench/config.hpp"
#include "ssf/dataset.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/glm/spline.hpp"
#include "ssf/model.hpp"
#include "ssf/net/train.hpp"
#include "ssf/packed.hpp"
#include "ssf/xai/xai.hpp"

namespace ssfcli {

// "<individual|opponent>:<dim>"; nullopt for "".
struct EmbedRequest {
  ssf::EmbeddingTarget target = ssf::EmbeddingTarget::individual;
  int dim = 2;
};
std::optional<EmbedRequest> parse_embed(const std::string& text);

// Network shape for a dataset. Vocabulary sizes come from the dataset; a
// missing id column for the requested target is a capability error.
ssf::net::ArchSpec dnn_arch(const ssf::bench::ScenarioConfig& cfg, const ssf::StrataDataset& d,
                            const std::optional<EmbedRequest>& embed);

// Build seed {0} and training seed {1} under `seed`.
ssf::net::TrainResult fit_dnn(const ssf::net::ArchSpec& arch, const ssf::net::TrainConfig& train,
                              const ssf::PackedStrata& d, std::uint64_t seed);

// Spline fold assignment uses seed {4} under `seed`.
ssf::glm::SplineFit fit_spline(const ssf::StrataDataset& d, std::size_t feature, ssf::glm::SplineSettings s,
                               std::uint64_t seed);

// Rebuilds a centered dataset from packed strata (used to refit on
// bootstrap resamples with fitters that take a StrataDataset).
ssf::StrataDataset unpack(const ssf::PackedStrata& p, const std::vector<std::string>& feature_names);

// Refits a model of the same kind and shape on a resample. DNNs reuse the
// loaded architecture with `train`; splines keep the fitted penalty.
ssf::xai::Fitter refitter(const ssf::ScoringModel& m, const ssf::net::TrainConfig& train,
                          const std::vector<std::string>& feature_names);

}  // namespace ssfcli
