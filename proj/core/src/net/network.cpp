#include "ssf/net/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "engine.hpp"
#include "ssf/error.hpp"
#include "ssf/rng.hpp"

namespace ssf::net {

namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

}  // namespace

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::selu:
      return "selu";
    case Activation::tanh:
      return "tanh";
  }
  return "relu";
}

const char* to_string(EmbeddingWiring w) noexcept {
  return w == EmbeddingWiring::concat ? "concat" : "modulation";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "selu") return Activation::selu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("activation must be relu|selu|tanh, got '" + s + "'");
}

EmbeddingWiring wiring_from_string(const std::string& s) {
  if (s == "concat") return EmbeddingWiring::concat;
  if (s == "modulation") return EmbeddingWiring::modulation;
  throw ConfigError("embedding wiring must be concat|modulation, got '" + s + "'");
}

void ArchSpec::validate() const {
  if (n_features < 1) throw ConfigError("n_features must be >= 1");
  for (int w : hidden) {
    if (w < 1) throw ConfigError("hidden layer widths must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
  if (!(l1 >= 0.0)) throw ConfigError("l1 must be >= 0");
  if (embeddings) {
    if (embeddings->vocab_size < 1) throw ConfigError("embedding vocab_size must be >= 1");
    if (embeddings->dim < 1) throw ConfigError("embedding dim must be >= 1");
  }
}

std::size_t ArchSpec::input_width() const noexcept {
  if (embeddings && embeddings->wiring == EmbeddingWiring::concat) {
    return n_features + static_cast<std::size_t>(embeddings->dim);
  }
  return n_features;
}

std::size_t Parameters::size() const noexcept {
  std::size_t n = 0;
  for_each([&](const auto& v) { n += static_cast<std::size_t>(v.size()); });
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  z.embedding = Eigen::MatrixXd::Zero(embedding.rows(), embedding.cols());
  z.modulation = Eigen::MatrixXd::Zero(modulation.rows(), modulation.cols());
  return z;
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each([&](const auto& v) { ok = ok && v.allFinite(); });
  return ok;
}

SsfNetwork::SsfNetwork(ArchSpec arch, Parameters params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  Eigen::Index in = static_cast<Eigen::Index>(arch_.input_width());
  const std::size_t expected_layers = arch_.hidden.size() + 1;
  if (params_.layers.size() != expected_layers) {
    throw ConfigError("network has " + std::to_string(params_.layers.size()) + " layers, architecture needs " +
                      std::to_string(expected_layers));
  }
  for (std::size_t l = 0; l < expected_layers; ++l) {
    const Eigen::Index out = l < arch_.hidden.size() ? arch_.hidden[l] : 1;
    const auto& layer = params_.layers[l];
    if (layer.weight.rows() != out || layer.weight.cols() != in || layer.bias.size() != out) {
      throw ConfigError("layer " + std::to_string(l) + " has shape inconsistent with the architecture");
    }
    in = out;
  }
  if (arch_.embeddings) {
    const auto& e = *arch_.embeddings;
    if (params_.embedding.rows() != e.vocab_size || params_.embedding.cols() != e.dim) {
      throw ConfigError("embedding table shape inconsistent with the architecture");
    }
    if (e.wiring == EmbeddingWiring::modulation) {
      if (params_.modulation.rows() != static_cast<Eigen::Index>(arch_.n_features) ||
          params_.modulation.cols() != e.dim) {
        throw ConfigError("modulation matrix shape inconsistent with the architecture");
      }
    } else if (params_.modulation.size() != 0) {
      throw ConfigError("modulation matrix present without modulation wiring");
    }
  } else if (params_.embedding.size() != 0 || params_.modulation.size() != 0) {
    throw ConfigError("embedding parameters present without an embedding layer");
  }
  if (!params_.all_finite()) throw ConfigError("network weights must be finite");
}

Eigen::VectorXd SsfNetwork::score(const Eigen::MatrixXd& x, std::span<const int> individual,
                                  std::span<const int> opponent) const {
  if (static_cast<std::size_t>(x.rows()) != arch_.n_features) {
    throw DataError("input has " + std::to_string(x.rows()) + " features, network expects " +
                    std::to_string(arch_.n_features));
  }
  const auto ids = detail::embedding_ids(arch_, individual, opponent);
  detail::check_ids(arch_, ids, x.cols());
  detail::Cache cache;
  detail::forward(*this, x, ids, cache, nullptr);
  return cache.out.transpose();
}

std::optional<EmbeddingTarget> SsfNetwork::embedding_target() const {
  if (!arch_.embeddings) return std::nullopt;
  return arch_.embeddings->target;
}

Eigen::VectorXd SsfNetwork::embedding_position(int id) const { return embedding_lookup(*this, id); }

Eigen::VectorXd SsfNetwork::flat_parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(params_.size()));
  Eigen::Index k = 0;
  params_.for_each([&](const auto& v) {
    theta.segment(k, v.size()) = v;
    k += v.size();
  });
  return theta;
}

void SsfNetwork::set_flat_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(params_.size())) {
    throw std::invalid_argument("flat parameter vector has the wrong length");
  }
  Eigen::Index k = 0;
  params_.for_each([&](auto v) {
    v = theta.segment(k, v.size());
    k += v.size();
  });
}

SsfNetwork build_network(const ArchSpec& arch, std::uint64_t seed) {
  arch.validate();
  CounterRng rng(derive_seed(seed, {0x4E4554}));
  Parameters p;
  Eigen::Index in = static_cast<Eigen::Index>(arch.input_width());
  const std::size_t n_layers = arch.hidden.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Eigen::Index out = l < arch.hidden.size() ? arch.hidden[l] : 1;
    const double limit = arch.activation == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(in))
                             : std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index c = 0; c < in; ++c) {
      for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
    p.layers.push_back(std::move(layer));
    in = out;
  }
  if (arch.embeddings) {
    const auto& e = *arch.embeddings;
    std::normal_distribution<double> normal(0.0, 0.1);
    p.embedding.resize(e.vocab_size, e.dim);
    for (Eigen::Index r = 0; r < p.embedding.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.embedding.cols(); ++c) p.embedding(r, c) = normal(rng);
    }
    if (e.wiring == EmbeddingWiring::modulation) {
      p.modulation.resize(static_cast<Eigen::Index>(arch.n_features), e.dim);
      for (Eigen::Index c = 0; c < p.modulation.cols(); ++c) {
        for (Eigen::Index r = 0; r < p.modulation.rows(); ++r) p.modulation(r, c) = normal(rng);
      }
    }
  }
  return SsfNetwork(arch, std::move(p));
}

Eigen::VectorXd score_candidates(const SsfNetwork& net, const std::vector<StepRecord>& stratum) {
  if (stratum.empty()) return {};
  const auto p = static_cast<Eigen::Index>(net.n_features());
  Eigen::MatrixXd x(p, static_cast<Eigen::Index>(stratum.size()));
  std::vector<int> ind, opp;
  for (std::size_t i = 0; i < stratum.size(); ++i) {
    const auto& r = stratum[i];
    if (r.stratum_id != stratum.front().stratum_id) {
      throw DataError("score_candidates: records belong to different strata");
    }
    if (static_cast<Eigen::Index>(r.covariates.size()) != p) {
      throw DataError("score_candidates: record has " + std::to_string(r.covariates.size()) +
                      " covariates, network expects " + std::to_string(p));
    }
    for (Eigen::Index j = 0; j < p; ++j) x(j, static_cast<Eigen::Index>(i)) = r.covariates[j];
    ind.push_back(r.individual_id.value_or(-1));
    opp.push_back(r.opponent_id.value_or(-1));
  }
  return net.score(x, ind, opp);
}

Eigen::VectorXd embedding_lookup(const SsfNetwork& net, int id) {
  const auto& arch = net.arch();
  if (!arch.embeddings) throw CapabilityError("network has no embedding layer");
  if (id < 0 || id >= arch.embeddings->vocab_size) {
    throw std::out_of_range("embedding id " + std::to_string(id) + " outside [0, " +
                            std::to_string(arch.embeddings->vocab_size) + ")");
  }
  return net.params().embedding.row(id).transpose();
}

// ---------------------------------------------------------------------------

namespace detail {

std::span<const int> embedding_ids(const ArchSpec& arch, std::span<const int> individual,
                                   std::span<const int> opponent) {
  if (!arch.embeddings) return {};
  return arch.embeddings->target == EmbeddingTarget::individual ? individual : opponent;
}

void check_ids(const ArchSpec& arch, std::span<const int> ids, Eigen::Index n) {
  if (!arch.embeddings) return;
  if (static_cast<Eigen::Index>(ids.size()) != n) {
    throw DataError(std::string("embedding needs one ") + to_string(arch.embeddings->target) +
                    " id per candidate");
  }
  const int vocab = arch.embeddings->vocab_size;
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw DataError(std::string(to_string(arch.embeddings->target)) + " id " + std::to_string(id) +
                      " outside the embedding vocabulary [0, " + std::to_string(vocab) + ")");
    }
  }
}

namespace {

void activate(Activation a, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (a) {
    case Activation::relu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      out = z.array().tanh();
      break;
    case Activation::selu:
      out = (z.array() > 0.0)
                .select(kSeluLambda * z.array(), kSeluLambda * kSeluAlpha * (z.array().exp() - 1.0));
      break;
  }
}

// Multiplies `delta` in place by the activation derivative.
void activation_backward(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& act,
                         Eigen::MatrixXd& delta) {
  switch (a) {
    case Activation::relu:
      delta = (z.array() > 0.0).select(delta, 0.0);
      break;
    case Activation::tanh:
      delta.array() *= 1.0 - act.array().square();
      break;
    case Activation::selu:
      delta.array() *=
          (z.array() > 0.0).select(Eigen::ArrayXXd::Constant(z.rows(), z.cols(), kSeluLambda),
                                   kSeluLambda * kSeluAlpha * z.array().exp());
      break;
  }
}

}  // namespace

void forward(const SsfNetwork& net, const Eigen::MatrixXd& x, std::span<const int> ids,
             Cache& cache, CounterRng* dropout_rng) {
  const auto& arch = net.arch();
  const auto& p = net.params();
  const Eigen::Index n = x.cols();
  const auto nf = static_cast<Eigen::Index>(arch.n_features);

  const Eigen::MatrixXd* input = &x;
  if (arch.embeddings) {
    const auto dim = arch.embeddings->dim;
    cache.emb.resize(dim, n);
    for (Eigen::Index c = 0; c < n; ++c) cache.emb.col(c) = p.embedding.row(ids[c]).transpose();
    if (arch.embeddings->wiring == EmbeddingWiring::concat) {
      cache.input.resize(nf + dim, n);
      cache.input.topRows(nf) = x;
      cache.input.bottomRows(dim) = cache.emb;
    } else {
      cache.scale.noalias() = p.modulation * cache.emb;
      cache.scale.array() += 1.0;
      cache.input = x.cwiseProduct(cache.scale);
    }
    input = &cache.input;
  }

  const std::size_t n_hidden = arch.hidden.size();
  cache.pre.resize(n_hidden);
  cache.post.resize(n_hidden);
  cache.mask.resize(n_hidden);
  const bool dropout = dropout_rng != nullptr && arch.dropout_rate > 0.0;
  const double keep = 1.0 - arch.dropout_rate;

  const Eigen::MatrixXd* a = input;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const auto& layer = p.layers[l];
    cache.pre[l].noalias() = layer.weight * (*a);
    cache.pre[l].colwise() += layer.bias;
    activate(arch.activation, cache.pre[l], cache.post[l]);
    if (dropout) {
      auto& m = cache.mask[l];
      m.resize(cache.post[l].rows(), cache.post[l].cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      }
      cache.post[l].array() *= m.array();
    } else {
      cache.mask[l].resize(0, 0);
    }
    a = &cache.post[l];
  }
  const auto& last = p.layers.back();
  cache.out.noalias() = last.weight * (*a);
  cache.out.array() += last.bias[0];
}

void backward(const SsfNetwork& net, const Eigen::MatrixXd& x, std::span<const int> ids,
              const Cache& cache, const Eigen::RowVectorXd& dout, Parameters& grad) {
  const auto& arch = net.arch();
  const auto& p = net.params();
  const std::size_t n_hidden = arch.hidden.size();
  const Eigen::MatrixXd& input = arch.embeddings ? cache.input : x;

  auto& g_out = grad.layers.back();
  const Eigen::MatrixXd& a_last = n_hidden ? cache.post.back() : input;
  g_out.weight.noalias() += dout * a_last.transpose();
  g_out.bias[0] += dout.sum();

  Eigen::MatrixXd delta = p.layers.back().weight.transpose() * dout;  // d/d a_last
  for (std::size_t li = n_hidden; li-- > 0;) {
    if (cache.mask[li].size()) delta.array() *= cache.mask[li].array();
    // Recover the pre-dropout activation for tanh derivatives.
    Eigen::MatrixXd act;
    if (arch.activation == Activation::tanh) act = cache.pre[li].array().tanh();
    activation_backward(arch.activation, cache.pre[li], act, delta);
    const Eigen::MatrixXd& a_prev = li ? cache.post[li - 1] : input;
    grad.layers[li].weight.noalias() += delta * a_prev.transpose();
    grad.layers[li].bias += delta.rowwise().sum();
    delta = p.layers[li].weight.transpose() * delta;
  }

  if (!arch.embeddings) return;
  const auto dim = arch.embeddings->dim;
  if (arch.embeddings->wiring == EmbeddingWiring::concat) {
    for (Eigen::Index c = 0; c < delta.cols(); ++c) {
      grad.embedding.row(ids[c]) += delta.col(c).tail(dim).transpose();
    }
  } else {
    // input = x * (1 + M e): d/dM = (delta * x) e^T, d/de = M^T (delta * x)
    const Eigen::MatrixXd dx = delta.cwiseProduct(x);
    grad.modulation.noalias() += dx * cache.emb.transpose();
    const Eigen::MatrixXd de = p.modulation.transpose() * dx;
    for (Eigen::Index c = 0; c < de.cols(); ++c) grad.embedding.row(ids[c]) += de.col(c).transpose();
  }
}

}  // namespace detail

}  // namespace ssf::net
