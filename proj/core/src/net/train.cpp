#include "ssf/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "engine.hpp"
#include "ssf/error.hpp"

namespace ssf::net {

const char* to_string(Optimizer o) noexcept { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  throw ConfigError("optimizer must be sgd|adam, got '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1 (got " + std::to_string(epochs) + ")");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite value >= 0");
  }
  if (batch_strata < 1) throw ConfigError("batch_strata must be >= 1");
  if (early_stop_patience && *early_stop_patience < 1) {
    throw ConfigError("early_stop_patience must be >= 1");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
}

namespace {

// Adds l2 |theta|^2 + l1 |theta|_1 to `grad` (if non-null) and returns it.
double add_penalty(const SsfNetwork& net, Parameters* grad) {
  const double l2 = net.arch().l2;
  const double l1 = net.arch().l1;
  if (l2 == 0.0 && l1 == 0.0) return 0.0;
  std::vector<Eigen::Map<const Eigen::VectorXd>> theta;
  double penalty = 0.0;
  net.params().for_each([&](const auto& v) {
    theta.push_back(v);
    penalty += l2 * v.squaredNorm() + l1 * v.template lpNorm<1>();
  });
  if (grad) {
    std::size_t k = 0;
    grad->for_each([&](auto g) {
      const auto& t = theta[k++];
      g += 2.0 * l2 * t;
      if (l1 > 0.0) g += l1 * t.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
    });
  }
  return penalty;
}

}  // namespace

double loss_and_gradient(const SsfNetwork& net, const PackedStrata& data,
                         std::span<const Eigen::Index> strata, Parameters* grad, bool with_penalty,
                         CounterRng* dropout_rng) {
  const auto& arch = net.arch();
  if (static_cast<std::size_t>(data.n_features()) != arch.n_features) {
    throw DataError("data has " + std::to_string(data.n_features()) + " features, network expects " +
                    std::to_string(arch.n_features));
  }

  // Gather the batch into contiguous columns.
  Eigen::Index total = 0;
  for (auto s : strata) total += data.size_of(s);
  Eigen::MatrixXd x(data.x.rows(), total);
  std::vector<int> ids;
  const bool has_emb = arch.embeddings.has_value();
  const auto& src_ids =
      has_emb && arch.embeddings->target == EmbeddingTarget::opponent ? data.opponent : data.individual;
  if (has_emb) ids.reserve(static_cast<std::size_t>(total));
  Eigen::Index col = 0;
  for (auto s : strata) {
    const auto len = data.size_of(s);
    x.middleCols(col, len) = data.x.middleCols(data.start[s], len);
    if (has_emb) {
      for (Eigen::Index k = 0; k < len; ++k) ids.push_back(src_ids[data.start[s] + k]);
    }
    col += len;
  }
  detail::check_ids(arch, ids, has_emb ? total : 0);

  detail::Cache cache;
  detail::forward(net, x, ids, cache, dropout_rng);

  const double inv_n = strata.empty() ? 0.0 : 1.0 / static_cast<double>(strata.size());
  double loss = 0.0;
  Eigen::RowVectorXd dout;
  if (grad) dout.resize(total);
  col = 0;
  for (auto s : strata) {
    const auto len = data.size_of(s);
    const auto seg = cache.out.segment(col, len);
    const double m = seg.maxCoeff();
    const Eigen::RowVectorXd e = (seg.array() - m).exp();
    const double z = e.sum();
    const auto case_k = data.case_col[s] - data.start[s];
    loss += (m + std::log(z)) - seg[case_k];
    if (grad) {
      dout.segment(col, len) = e * (inv_n / z);
      dout[col + case_k] -= inv_n;
    }
    col += len;
  }
  loss *= inv_n;

  if (grad) detail::backward(net, x, ids, cache, dout, *grad);

  if (with_penalty) loss += add_penalty(net, grad);
  return loss;
}

namespace {

class AdamState {
 public:
  explicit AdamState(const Parameters& p) : m_(p.zeros_like()), v_(p.zeros_like()) {}

  void step(Parameters& params, const Parameters& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    std::vector<Eigen::Map<const Eigen::VectorXd>> g;
    grad.for_each([&](const auto& v) { g.push_back(v); });
    std::vector<Eigen::Map<Eigen::VectorXd>> m, v;
    m_.for_each([&](auto x) { m.push_back(x); });
    v_.for_each([&](auto x) { v.push_back(x); });
    std::size_t k = 0;
    params.for_each([&](auto theta) {
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k].cwiseAbs2();
      theta.array() -= lr * (m[k].array() / c1) / ((v[k].array() / c2).sqrt() + kEps);
      ++k;
    });
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  Parameters m_, v_;
  int t_ = 0;
};

void sgd_step(Parameters& params, const Parameters& grad, double lr) {
  std::vector<Eigen::Map<const Eigen::VectorXd>> g;
  grad.for_each([&](const auto& v) { g.push_back(v); });
  std::size_t k = 0;
  params.for_each([&](auto theta) { theta -= lr * g[k++]; });
}

void zero(Parameters& p) {
  p.for_each([](auto v) { v.setZero(); });
}

}  // namespace

TrainResult train(SsfNetwork net, const PackedStrata& data, const TrainConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(data.n_features()) != net.n_features()) {
    throw DataError("data has " + std::to_string(data.n_features()) + " features, network expects " +
                    std::to_string(net.n_features()));
  }
  if (data.n_strata() == 0) throw DataError("cannot train on an empty dataset");

  FitTrace trace;
  CounterRng order_rng(derive_seed(cfg.seed, {0x5452, 1}));
  CounterRng dropout_rng(derive_seed(cfg.seed, {0x5452, 2}));

  std::vector<Eigen::Index> train_idx(static_cast<std::size_t>(data.n_strata()));
  std::iota(train_idx.begin(), train_idx.end(), Eigen::Index{0});
  std::vector<Eigen::Index> val_idx;
  if (cfg.early_stop_patience) {
    CounterRng split_rng(derive_seed(cfg.seed, {0x5452, 3}));
    shuffle(train_idx, split_rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(train_idx.size())));
    if (n_val >= train_idx.size()) throw DataError("too few strata for a validation split");
    val_idx.assign(train_idx.end() - static_cast<std::ptrdiff_t>(n_val), train_idx.end());
    train_idx.resize(train_idx.size() - n_val);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
  }

  Parameters grad = net.params().zeros_like();
  AdamState adam(net.params());
  const auto batch = static_cast<std::size_t>(cfg.batch_strata);
  double best_val = std::numeric_limits<double>::infinity();
  Parameters best_params;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(train_idx, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < train_idx.size(); b += batch) {
      const std::size_t e = std::min(train_idx.size(), b + batch);
      std::span<const Eigen::Index> idx(train_idx.data() + b, e - b);
      zero(grad);
      const double nll = loss_and_gradient(net, data, idx, &grad, false, &dropout_rng);
      // The trace reports the pure NLL; only the gradient sees the penalty.
      add_penalty(net, &grad);
      if (!std::isfinite(nll) || !grad.all_finite()) {
        std::ostringstream msg;
        msg << "training loss became non-finite in epoch " << epoch + 1 << " (learning rate "
            << cfg.learning_rate << "); reduce the learning rate or check covariate scaling";
        throw ConvergenceError(msg.str());
      }
      epoch_loss += nll * static_cast<double>(e - b);
      if (cfg.learning_rate > 0.0) {
        if (cfg.optimizer == Optimizer::adam) {
          adam.step(net.params(), grad, cfg.learning_rate);
        } else {
          sgd_step(net.params(), grad, cfg.learning_rate);
        }
      }
    }
    if (!net.params().all_finite()) {
      throw ConvergenceError("network weights became non-finite in epoch " + std::to_string(epoch + 1) +
                             "; reduce the learning rate");
    }
    trace.train_nll.push_back(epoch_loss / static_cast<double>(train_idx.size()));

    if (cfg.early_stop_patience) {
      const double v = loss_and_gradient(net, data, val_idx, nullptr, false, nullptr);
      trace.validation_nll.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_params = net.params();
        since_best = 0;
      } else if (++since_best >= *cfg.early_stop_patience) {
        net.params() = best_params;
        break;
      }
    }
  }
  net.trained = true;
  return {std::move(net), std::move(trace)};
}

TrainResult train(SsfNetwork net, const StrataDataset& data, const TrainConfig& cfg) {
  auto packed = pack_strata(data);
  auto result = train(std::move(net), packed, cfg);
  if (!data.centered) {
    result.trace.warnings.push_back("covariates are not centered; consider center_covariates()");
  }
  return result;
}

double gradient_check(const SsfNetwork& net, const PackedStrata& data, Eigen::Index stratum,
                      double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw std::invalid_argument("gradient_check: epsilon must lie in (0, 1e-3]");
  }
  if (stratum < 0 || stratum >= data.n_strata()) {
    throw std::invalid_argument("gradient_check: stratum index out of range");
  }
  const Eigen::Index idx[1] = {stratum};
  Parameters grad = net.params().zeros_like();
  loss_and_gradient(net, data, idx, &grad, false, nullptr);

  Eigen::VectorXd analytic(static_cast<Eigen::Index>(grad.size()));
  Eigen::Index k = 0;
  grad.for_each([&](const auto& v) {
    analytic.segment(k, v.size()) = v;
    k += v.size();
  });

  SsfNetwork probe = net;
  const Eigen::VectorXd theta = net.flat_parameters();
  double worst = 0.0;
  Eigen::VectorXd t = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + epsilon;
    probe.set_flat_parameters(t);
    const double up = loss_and_gradient(probe, data, idx, nullptr, false, nullptr);
    t[i] = theta[i] - epsilon;
    probe.set_flat_parameters(t);
    const double down = loss_and_gradient(probe, data, idx, nullptr, false, nullptr);
    t[i] = theta[i];
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err =
        std::abs(analytic[i] - numeric) / std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-4);
    worst = std::max(worst, err);
  }
  return worst;
}

double gradient_check(const SsfNetwork& net, const std::vector<StepRecord>& stratum,
                      double epsilon) {
  StrataDataset d;
  d.records = stratum;
  d.feature_names.resize(net.n_features());
  for (std::size_t j = 0; j < d.feature_names.size(); ++j) d.feature_names[j] = "x" + std::to_string(j + 1);
  if (auto e = net.arch().embeddings) {
    d.n_individuals = d.n_opponents = e->vocab_size;
  }
  return gradient_check(net, pack_strata(d), 0, epsilon);
}

}  // namespace ssf::net
