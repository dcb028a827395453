#include "ssf/model_io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "ssf/error.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/glm/spline.hpp"
#include "ssf/net/network.hpp"

namespace ssf {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ssfkit-model";
constexpr int kVersion = 1;

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw DataError("expected a number in model JSON, got " + j.dump());
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

// Row-major nested arrays.
json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(Eigen::VectorXd(m.row(r).transpose())));
  return a;
}

Eigen::VectorXd to_vec(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_num(j[i]);
  return v;
}

std::vector<double> to_std_vec(const json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(to_num(e));
  return v;
}

Eigen::MatrixXd to_mat(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("ragged matrix in model JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = to_num(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

json formula_json(const glm::FormulaSpec& f) {
  json pairs = json::array();
  for (auto [p, q] : f.interactions) pairs.push_back({p, q});
  return {{"main_effects", f.main_effects}, {"interactions", pairs}};
}

glm::FormulaSpec formula_from(const json& j) {
  glm::FormulaSpec f;
  f.main_effects = j.at("main_effects").get<std::vector<std::size_t>>();
  for (const auto& p : j.at("interactions")) f.interactions.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
  return f;
}

json dnn_json(const net::SsfNetwork& n) {
  const auto& a = n.arch();
  json arch = {{"n_features", a.n_features},
               {"hidden", a.hidden},
               {"activation", net::to_string(a.activation)},
               {"dropout_rate", a.dropout_rate},
               {"l2", a.l2},
               {"l1", a.l1}};
  if (a.embeddings) {
    arch["embeddings"] = {{"vocab_size", a.embeddings->vocab_size},
                          {"dim", a.embeddings->dim},
                          {"target", to_string(a.embeddings->target)},
                          {"wiring", net::to_string(a.embeddings->wiring)}};
  } else {
    arch["embeddings"] = nullptr;
  }
  json layers = json::array();
  for (const auto& l : n.params().layers) layers.push_back({{"weight", mat(l.weight)}, {"bias", vec(l.bias)}});
  json w = {{"layers", layers}};
  if (a.embeddings) w["embedding"] = mat(n.params().embedding);
  if (a.embeddings && a.embeddings->wiring == net::EmbeddingWiring::modulation)
    w["modulation"] = mat(n.params().modulation);
  return {{"arch", arch}, {"weights", w}, {"trained", n.trained}};
}

std::unique_ptr<ScoringModel> dnn_from(const json& j) {
  const auto& a = j.at("arch");
  net::ArchSpec arch;
  arch.n_features = a.at("n_features").get<std::size_t>();
  arch.hidden = a.at("hidden").get<std::vector<int>>();
  arch.activation = net::activation_from_string(a.at("activation").get<std::string>());
  arch.dropout_rate = a.at("dropout_rate").get<double>();
  arch.l2 = a.at("l2").get<double>();
  arch.l1 = a.at("l1").get<double>();
  if (a.contains("embeddings") && !a.at("embeddings").is_null()) {
    const auto& e = a.at("embeddings");
    net::EmbeddingSpec es;
    es.vocab_size = e.at("vocab_size").get<int>();
    es.dim = e.at("dim").get<int>();
    es.target = embedding_target_from_string(e.at("target").get<std::string>());
    es.wiring = net::wiring_from_string(e.at("wiring").get<std::string>());
    arch.embeddings = es;
  }
  arch.validate();
  net::Parameters p;
  const auto& w = j.at("weights");
  for (const auto& l : w.at("layers")) p.layers.push_back({to_mat(l.at("weight")), to_vec(l.at("bias"))});
  if (w.contains("embedding")) p.embedding = to_mat(w.at("embedding"));
  if (w.contains("modulation")) p.modulation = to_mat(w.at("modulation"));
  auto net = std::make_unique<net::SsfNetwork>(arch, std::move(p));
  net->trained = j.value("trained", false);
  return net;
}

json glm_json(const glm::GlmModel& m) {
  const auto& f = m.fit();
  return {{"n_features", m.n_features()},
          {"formula", formula_json(f.formula)},
          {"term_names", f.term_names},
          {"coefficients", vec(f.coefficients)},
          {"covariance", mat(f.covariance)},
          {"converged", f.converged},
          {"n_iterations", f.n_iterations},
          {"loglik", num(f.loglik)},
          {"singular_terms", f.singular_terms}};
}

std::unique_ptr<ScoringModel> glm_from(const json& j) {
  glm::ClogitFit f;
  f.formula = formula_from(j.at("formula"));
  f.term_names = j.at("term_names").get<std::vector<std::string>>();
  f.coefficients = to_vec(j.at("coefficients"));
  f.covariance = to_mat(j.at("covariance"), f.coefficients.size());
  f.converged = j.at("converged").get<bool>();
  f.n_iterations = j.at("n_iterations").get<int>();
  f.loglik = to_num(j.at("loglik"));
  f.singular_terms = j.value("singular_terms", std::vector<std::size_t>{});
  return std::make_unique<glm::GlmModel>(j.at("n_features").get<std::size_t>(), std::move(f));
}

json spline_json(const glm::SplineModel& m) {
  const auto& f = m.fit();
  return {{"n_features", m.n_features()}, {"feature", f.feature},    {"knots", vec(f.knots)},
          {"basis_degree", f.basis_degree}, {"coefficients", vec(f.coefficients)},
          {"penalty", num(f.penalty)},      {"loglik", num(f.loglik)}, {"cv_nll", vec(f.cv_nll)}};
}

std::unique_ptr<ScoringModel> spline_from(const json& j) {
  glm::SplineFit f;
  f.feature = j.at("feature").get<std::size_t>();
  f.knots = to_std_vec(j.at("knots"));
  f.basis_degree = j.at("basis_degree").get<int>();
  f.coefficients = to_vec(j.at("coefficients"));
  f.penalty = to_num(j.at("penalty"));
  f.loglik = to_num(j.at("loglik"));
  f.cv_nll = to_std_vec(j.value("cv_nll", json::array()));
  return std::make_unique<glm::SplineModel>(j.at("n_features").get<std::size_t>(), std::move(f));
}

}  // namespace

std::string model_to_json(const ScoringModel& m, const std::vector<std::string>& feature_names,
                          const std::string& fit_config) {
  json cfg;
  try {
    cfg = json::parse(fit_config);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fit config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("fit config must be a JSON object");
  if (feature_names.size() != m.n_features())
    throw ConfigError("model has " + std::to_string(m.n_features()) + " features but " +
                      std::to_string(feature_names.size()) + " names were given");

  json body;
  if (const auto* n = dynamic_cast<const net::SsfNetwork*>(&m)) body = dnn_json(*n);
  else if (const auto* g = dynamic_cast<const glm::GlmModel*>(&m)) body = glm_json(*g);
  else if (const auto* s = dynamic_cast<const glm::SplineModel*>(&m)) body = spline_json(*s);
  else throw CapabilityError("cannot serialize model kind '" + m.kind() + "'");

  json doc = {{"format", kFormat}, {"version", kVersion}, {"kind", m.kind()}, {"features", feature_names}};
  doc["model"] = body;
  doc["fit_config"] = cfg;
  return doc.dump(1) + "\n";
}

ModelDocument model_from_json(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    if (doc.value("format", "") != kFormat) throw DataError("not an ssfkit model document");
    if (doc.value("version", 0) != kVersion)
      throw DataError("unsupported model document version " + doc.at("version").dump());
    ModelDocument out;
    out.feature_names = doc.at("features").get<std::vector<std::string>>();
    const auto kind = doc.at("kind").get<std::string>();
    const auto& body = doc.at("model");
    if (kind == "dnn") out.model = dnn_from(body);
    else if (kind == "glm") out.model = glm_from(body);
    else if (kind == "spline") out.model = spline_from(body);
    else throw DataError("unknown model kind '" + kind + "'");
    if (out.model->n_features() != out.feature_names.size())
      throw DataError("model feature count does not match its feature list");
    out.fit_config = doc.contains("fit_config") ? doc.at("fit_config").dump() : "{}";
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
}

ModelDocument read_model_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

void write_model_file(const std::string& path, const ScoringModel& m,
                      const std::vector<std::string>& feature_names, const std::string& fit_config) {
  const auto text = model_to_json(m, feature_names, fit_config);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << text;
}

}  // namespace ssf
