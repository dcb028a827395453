#include "fitting.hpp"

#include <algorithm>

#include "common.hpp"
#include "ssf/error.hpp"
#include "ssf/net/network.hpp"
#include "ssf/rng.hpp"

namespace ssfcli {

std::optional<EmbedRequest> parse_embed(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ssf::ConfigError("--embed: expected <individual|opponent>:<dim>, got '" + text + "'");
  EmbedRequest e;
  e.target = ssf::embedding_target_from_string(parts[0]);
  const auto dims = parse_int_list(parts[1], "--embed");
  if (dims.size() != 1 || dims[0] < 1) throw ssf::ConfigError("--embed: dimension must be >= 1, got '" + parts[1] + "'");
  e.dim = dims[0];
  return e;
}

ssf::net::ArchSpec dnn_arch(const ssf::bench::ScenarioConfig& cfg, const ssf::StrataDataset& d,
                            const std::optional<EmbedRequest>& embed) {
  ssf::net::ArchSpec a = cfg.arch;
  a.n_features = d.n_features();
  a.embeddings.reset();
  if (embed) {
    const bool ind = embed->target == ssf::EmbeddingTarget::individual;
    const int vocab = ind ? d.n_individuals : d.n_opponents;
    const bool present = std::any_of(d.records.begin(), d.records.end(), [&](const ssf::StepRecord& r) {
      return ind ? r.individual_id.has_value() : r.opponent_id.has_value();
    });
    if (vocab < 1 || !present)
      throw ssf::CapabilityError(std::string("--embed ") + ssf::to_string(embed->target) + ": the dataset has no " +
                                 (ind ? "id" : "opp_id") + " values");
    a.embeddings = ssf::net::EmbeddingSpec{vocab, embed->dim, embed->target, cfg.wiring};
  }
  a.validate();
  return a;
}

ssf::net::TrainResult fit_dnn(const ssf::net::ArchSpec& arch, const ssf::net::TrainConfig& train,
                              const ssf::PackedStrata& d, std::uint64_t seed) {
  ssf::net::TrainConfig t = train;
  t.seed = ssf::derive_seed(seed, {1});
  auto r = ssf::net::train(ssf::net::build_network(arch, ssf::derive_seed(seed, {0})), d, t);
  r.net.trained = true;
  return r;
}

ssf::glm::SplineFit fit_spline(const ssf::StrataDataset& d, std::size_t feature, ssf::glm::SplineSettings s,
                               std::uint64_t seed) {
  s.seed = ssf::derive_seed(seed, {4});
  return ssf::glm::fit_clogit_spline(d, feature, s);
}

ssf::StrataDataset unpack(const ssf::PackedStrata& p, const std::vector<std::string>& feature_names) {
  ssf::StrataDataset d;
  d.feature_names = feature_names;
  d.centered = true;
  int max_ind = -1, max_opp = -1;
  for (Eigen::Index s = 0; s < p.n_strata(); ++s) {
    for (Eigen::Index c = p.start[s]; c < p.start[s + 1]; ++c) {
      ssf::StepRecord r;
      r.stratum_id = s;  // resamples repeat strata, so ids are renumbered
      r.is_case = c == p.case_col[s];
      r.covariates.assign(p.x.col(c).data(), p.x.col(c).data() + p.x.rows());
      const auto k = static_cast<std::size_t>(c);
      if (p.individual[k] >= 0) r.individual_id = p.individual[k];
      if (p.opponent[k] >= 0) r.opponent_id = p.opponent[k];
      max_ind = std::max(max_ind, p.individual[k]);
      max_opp = std::max(max_opp, p.opponent[k]);
      d.records.push_back(std::move(r));
    }
  }
  d.n_individuals = max_ind + 1;
  d.n_opponents = max_opp + 1;
  return d;
}

ssf::xai::Fitter refitter(const ssf::ScoringModel& m, const ssf::net::TrainConfig& train,
                          const std::vector<std::string>& feature_names) {
  if (const auto* net = dynamic_cast<const ssf::net::SsfNetwork*>(&m)) {
    const auto arch = net->arch();
    return [arch, train](const ssf::PackedStrata& d, std::uint64_t seed) -> std::unique_ptr<ssf::ScoringModel> {
      return std::make_unique<ssf::net::SsfNetwork>(fit_dnn(arch, train, d, seed).net);
    };
  }
  if (const auto* glm = dynamic_cast<const ssf::glm::GlmModel*>(&m)) {
    const auto formula = glm->fit().formula;
    const auto p = m.n_features();
    return [formula, p, feature_names](const ssf::PackedStrata& d, std::uint64_t) -> std::unique_ptr<ssf::ScoringModel> {
      return std::make_unique<ssf::glm::GlmModel>(p, ssf::glm::fit_clogit_glm(d, feature_names, formula));
    };
  }
  if (const auto* spl = dynamic_cast<const ssf::glm::SplineModel*>(&m)) {
    const auto& f = spl->fit();
    ssf::glm::SplineSettings s;
    s.degree = f.basis_degree;
    s.interior_knots = static_cast<int>(f.knots.size()) - 2 * (f.basis_degree + 1);
    s.fixed_penalty = f.penalty;
    const auto feature = f.feature;
    const auto p = m.n_features();
    return [s, feature, p, feature_names](const ssf::PackedStrata& d,
                                          std::uint64_t seed) -> std::unique_ptr<ssf::ScoringModel> {
      return std::make_unique<ssf::glm::SplineModel>(p, fit_spline(unpack(d, feature_names), feature, s, seed));
    };
  }
  throw ssf::CapabilityError("bootstrap refits are not available for model kind '" + m.kind() + "'");
}

}  // namespace ssfcli
