#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ssf/error.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/net/network.hpp"
#include "ssf/net/train.hpp"
#include "ssf/sim/selection.hpp"

using namespace ssf;
using namespace ssf::net;

namespace {

// Plain-loop forward pass, written against the parameter layout only.
double naive_score(const SsfNetwork& net, const std::vector<double>& x, int id) {
  const auto& a = net.arch();
  const auto& p = net.params();
  std::vector<double> in = x;
  if (a.embeddings) {
    std::vector<double> e;
    for (int k = 0; k < a.embeddings->dim; ++k) e.push_back(p.embedding(id, k));
    if (a.embeddings->wiring == EmbeddingWiring::concat) {
      in.insert(in.end(), e.begin(), e.end());
    } else {
      for (std::size_t j = 0; j < x.size(); ++j) {
        double s = 1.0;
        for (int k = 0; k < a.embeddings->dim; ++k) s += p.modulation(static_cast<Eigen::Index>(j), k) * e[k];
        in[j] = x[j] * s;
      }
    }
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    std::vector<double> out(static_cast<std::size_t>(L.weight.rows()));
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
      double z = L.bias[r];
      for (Eigen::Index c = 0; c < L.weight.cols(); ++c) z += L.weight(r, c) * in[static_cast<std::size_t>(c)];
      if (l + 1 < p.layers.size()) {
        switch (a.activation) {
          case Activation::relu: z = z > 0 ? z : 0; break;
          case Activation::tanh: z = std::tanh(z); break;
          case Activation::selu:
            z = z > 0 ? 1.0507009873554805 * z : 1.0507009873554805 * 1.6732632423543772 * (std::exp(z) - 1.0);
            break;
        }
      }
      out[static_cast<std::size_t>(r)] = z;
    }
    in = out;
  }
  return in[0];
}

PackedStrata random_packed(int n_strata, int k, std::size_t nf, int vocab, std::uint64_t seed) {
  CounterRng rng(seed);
  auto d = testing::make_dataset(
      n_strata, k, nf,
      [&](int, int) {
        std::vector<double> v(nf);
        for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
        return v;
      },
      [&](int s) { return s % k; });
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    d.records[i].individual_id = static_cast<int>(i % static_cast<std::size_t>(vocab));
    d.records[i].opponent_id = static_cast<int>((i * 7 + 3) % static_cast<std::size_t>(vocab));
  }
  d.n_individuals = vocab;
  d.n_opponents = vocab;
  return pack_strata(d);
}

sim::SelectionSpec scenario1(double beta, int strata = 2000) {
  sim::SelectionSpec s;
  s.betas = {beta};
  s.n_strata = strata;
  return s;
}

}  // namespace

TEST_CASE("build_network shapes and determinism") {
  ArchSpec a;
  a.n_features = 9;
  a.hidden = {32, 32};
  auto n = build_network(a, 1);
  CHECK(n.parameter_count() == 9 * 32 + 32 + 32 * 32 + 32 + 32 * 1 + 1);
  CHECK(n.parameter_count() == 1409);
  auto m = build_network(a, 1);
  CHECK(n.flat_parameters() == m.flat_parameters());
  CHECK(build_network(a, 2).flat_parameters() != n.flat_parameters());
  CHECK_FALSE(n.trained);

  a.hidden = {0};
  CHECK_THROWS_AS(build_network(a, 1), ConfigError);
  a.hidden = {4};
  a.dropout_rate = 1.0;
  CHECK_THROWS_AS(build_network(a, 1), ConfigError);
  a.dropout_rate = 0.0;
  Parameters bad = n.params();
  CHECK_THROWS(SsfNetwork(a, bad));
}

TEST_CASE("hidden=[] network is affine") {
  ArchSpec a;
  a.n_features = 2;
  a.hidden = {};
  auto n = build_network(a, 3);
  n.params().layers[0].weight << 1.0, -1.0;
  n.params().layers[0].bias << 0.0;
  StepRecord r;
  r.covariates = {2.0, 3.0};
  CHECK(score_candidates(n, {r})[0] == doctest::Approx(-1.0).epsilon(1e-15));

  auto m = build_network(a, 4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 5);
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(2, 5);
  std::vector<int> none(5, -1);
  Eigen::VectorXd lhs = m.score(0.3 * x + 0.7 * y, none, none);
  Eigen::VectorXd rhs = 0.3 * m.score(x, none, none) + 0.7 * m.score(y, none, none);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-weight network scores zero") {
  ArchSpec a;
  a.n_features = 3;
  a.hidden = {5, 4};
  auto n = build_network(a, 1);
  n.set_flat_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n.parameter_count())));
  std::vector<StepRecord> s(4);
  for (auto& r : s) r.covariates = {0.5, -1.0, 2.0};
  CHECK(score_candidates(n, s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward pass matches an independent implementation") {
  for (auto act : {Activation::relu, Activation::tanh, Activation::selu}) {
    for (int wiring = 0; wiring < 3; ++wiring) {
      ArchSpec a;
      a.n_features = 3;
      a.hidden = {7, 5};
      a.activation = act;
      if (wiring > 0) {
        EmbeddingSpec e;
        e.vocab_size = 4;
        e.dim = 2;
        e.wiring = wiring == 1 ? EmbeddingWiring::concat : EmbeddingWiring::modulation;
        a.embeddings = e;
      }
      auto n = build_network(a, 10 + wiring);
      // Non-zero biases so every code path is exercised.
      for (auto& l : n.params().layers) l.bias.setConstant(0.05);
      std::vector<StepRecord> s(6);
      CounterRng rng(5);
      for (int i = 0; i < 6; ++i) {
        s[i].covariates = {rng.uniform() - 0.5, 2.0 * rng.uniform() - 1.0, rng.uniform()};
        s[i].individual_id = i % 4;
      }
      auto scores = score_candidates(n, s);
      for (int i = 0; i < 6; ++i)
        CHECK(std::abs(scores[i] - naive_score(n, s[i].covariates, i % 4)) < 1e-12);
    }
  }
}

TEST_CASE("score_candidates input errors") {
  ArchSpec a;
  a.n_features = 2;
  a.hidden = {3};
  a.embeddings = EmbeddingSpec{3, 2, EmbeddingTarget::individual, EmbeddingWiring::concat};
  auto n = build_network(a, 1);
  std::vector<StepRecord> s(2);
  s[0].covariates = {0.0, 0.0};
  s[1].covariates = {0.0, 0.0};
  s[0].individual_id = 0;
  s[1].individual_id = 3;
  CHECK_THROWS_AS(score_candidates(n, s), DataError);
  s[1].individual_id = 2;
  CHECK(score_candidates(n, s).allFinite());
  s[1].covariates = {0.0};
  CHECK_THROWS_AS(score_candidates(n, s), DataError);
  s[1].covariates = {0.0, 0.0};
  s[1].stratum_id = 5;
  CHECK_THROWS_AS(score_candidates(n, s), DataError);
  s[1].stratum_id = 0;
  s[1].individual_id.reset();
  CHECK_THROWS_AS(score_candidates(n, s), DataError);
}

TEST_CASE("embedding lookup") {
  ArchSpec a;
  a.n_features = 2;
  a.hidden = {3};
  a.embeddings = EmbeddingSpec{5, 2, EmbeddingTarget::individual, EmbeddingWiring::concat};
  auto n = build_network(a, 8);
  for (int id = 0; id < 5; ++id) CHECK(embedding_lookup(n, id) == n.params().embedding.row(id).transpose());
  CHECK(embedding_lookup(n, 1) != embedding_lookup(n, 2));
  n.params().embedding(1, 0) = 42.0;
  CHECK(embedding_lookup(n, 1)[0] == 42.0);
  CHECK(embedding_lookup(n, 2)[0] != 42.0);
  CHECK_THROWS_AS(embedding_lookup(n, 5), std::out_of_range);
  CHECK_THROWS_AS(embedding_lookup(n, -1), std::out_of_range);

  ArchSpec plain;
  plain.hidden = {2};
  CHECK_THROWS_AS(embedding_lookup(build_network(plain, 1), 0), CapabilityError);
}

TEST_CASE("gradient_check across the architecture matrix") {
  const std::vector<std::vector<int>> widths{{}, {4}, {5, 3}};
  for (const auto& h : widths) {
    for (auto act : {Activation::relu, Activation::tanh, Activation::selu}) {
      for (int emb = 0; emb < 3; ++emb) {
        ArchSpec a;
        a.n_features = 3;
        a.hidden = h;
        a.activation = act;
        if (emb == 1) a.embeddings = EmbeddingSpec{4, 2, EmbeddingTarget::individual, EmbeddingWiring::concat};
        if (emb == 2) a.embeddings = EmbeddingSpec{4, 2, EmbeddingTarget::opponent, EmbeddingWiring::modulation};
        auto n = build_network(a, 100 + h.size() * 10 + static_cast<std::size_t>(emb));
        for (auto& l : n.params().layers) l.bias.setConstant(0.1);
        auto p = random_packed(3, 6, 3, 4, 55);
        for (Eigen::Index s = 0; s < p.n_strata(); ++s) {
          const double err = gradient_check(n, p, s, 1e-5);
          CAPTURE(h.size());
          CAPTURE(static_cast<int>(act));
          CAPTURE(emb);
          CHECK(err < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("gradient_check at the all-zero point and epsilon domain") {
  for (auto act : {Activation::relu, Activation::tanh}) {
    ArchSpec a;
    a.n_features = 2;
    a.hidden = {4};
    a.activation = act;
    auto n = build_network(a, 1);
    n.set_flat_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n.parameter_count())));
    auto p = random_packed(2, 5, 2, 1, 3);
    CHECK(gradient_check(n, p, 0, 1e-5) < 1e-5);
    CHECK_THROWS_AS(gradient_check(n, p, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gradient_check(n, p, 0, 2e-3), std::invalid_argument);
  }
}

TEST_CASE("loss_and_gradient matches finite differences with penalties") {
  ArchSpec a;
  a.n_features = 3;
  a.hidden = {4};
  a.activation = Activation::tanh;
  a.l2 = 0.01;
  a.l1 = 0.003;
  a.embeddings = EmbeddingSpec{4, 2, EmbeddingTarget::individual, EmbeddingWiring::concat};
  auto n = build_network(a, 12);
  auto p = random_packed(5, 4, 3, 4, 77);
  std::vector<Eigen::Index> all{0, 1, 2, 3, 4};
  Parameters g = n.params().zeros_like();
  loss_and_gradient(n, p, all, &g);
  Eigen::VectorXd analytic(static_cast<Eigen::Index>(g.size()));
  Eigen::Index k = 0;
  g.for_each([&](const auto& v) {
    analytic.segment(k, v.size()) = v;
    k += v.size();
  });
  Eigen::VectorXd theta = n.flat_parameters();
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    auto plus = n, minus = n;
    Eigen::VectorXd t = theta;
    t[i] += h;
    plus.set_flat_parameters(t);
    t[i] -= 2 * h;
    minus.set_flat_parameters(t);
    const double fd = (loss_and_gradient(plus, p, all, nullptr) - loss_and_gradient(minus, p, all, nullptr)) / (2 * h);
    CHECK(std::abs(fd - analytic[i]) / std::max(std::abs(fd) + std::abs(analytic[i]), 1e-4) < 1e-5);
  }
}

TEST_CASE("softmax over network scores sums to one per stratum") {
  ArchSpec a;
  a.n_features = 3;
  a.hidden = {8};
  auto n = build_network(a, 2);
  auto p = random_packed(50, 7, 3, 1, 4);
  auto prob = stratum_softmax(n.score(p), p);
  for (Eigen::Index s = 0; s < p.n_strata(); ++s)
    CHECK(std::abs(prob.segment(p.start[s], p.size_of(s)).sum() - 1.0) < 1e-12);
}

TEST_CASE("training reduces NLL toward the likelihood floor") {
  auto d = sim::simulate_selection(scenario1(1.5), 31);
  auto p = pack_strata(d);
  ArchSpec a;
  a.hidden = {32, 32};
  TrainConfig c;
  c.learning_rate = 0.01;
  c.epochs = 150;
  auto r = train(build_network(a, 1), p, c);
  CHECK(r.trace.epochs_run() == 150);
  CHECK(r.net.trained);
  const double log_k = std::log(10.0);
  auto glm = glm::fit_clogit_glm(d, glm::FormulaSpec::main_only(1));
  const double glm_nll = -glm.loglik / static_cast<double>(p.n_strata());
  const double final_nll = mean_conditional_nll(r.net, p);
  CHECK(final_nll < log_k);
  CHECK(final_nll < glm_nll + 0.01);
  CHECK(r.trace.train_nll.back() < r.trace.train_nll.front());
}

// Under the generating model itself (beta = 1.5 on centered U(0,1)
// covariates) the expected NLL is only a few percent below log k, so a
// 20% reduction cannot be reached without memorising the cases.
TEST_CASE("a 20% NLL reduction lies below the likelihood floor at beta = 1.5") {
  auto d = sim::simulate_selection(scenario1(1.5, 20000), 32);
  auto p = pack_strata(d);
  Eigen::VectorXd truth = 1.5 * p.x.row(0).transpose();
  const double true_nll = mean_conditional_nll(truth, p);
  CHECK(true_nll > 0.8 * std::log(10.0));
  CHECK(true_nll < std::log(10.0));
}

TEST_CASE("hidden=[] network converges to the Newton estimate") {
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    auto d = sim::simulate_selection(scenario1(1.5), seed);
    auto glm = glm::fit_clogit_glm(d, glm::FormulaSpec::main_only(1));
    ArchSpec a;
    a.hidden = {};
    TrainConfig c;
    c.seed = seed;
    auto r = train(build_network(a, seed), pack_strata(d), c);
    CHECK(std::abs(r.net.params().layers[0].weight(0, 0) - glm.coefficients[0]) <= 0.05);
  }
}

TEST_CASE("lr = 0 leaves weights unchanged") {
  auto p = pack_strata(sim::simulate_selection(scenario1(1.0, 200), 5));
  ArchSpec a;
  a.hidden = {4};
  auto n = build_network(a, 1);
  for (auto opt : {Optimizer::adam, Optimizer::sgd}) {
    TrainConfig c;
    c.learning_rate = 0.0;
    c.epochs = 5;
    c.optimizer = opt;
    auto r = train(n, p, c);
    CHECK(r.net.flat_parameters() == n.flat_parameters());
    for (double v : r.trace.train_nll) CHECK(std::abs(v - r.trace.train_nll.front()) < 1e-12);
  }
}

TEST_CASE("full-batch small-step training is non-increasing") {
  auto p = pack_strata(sim::simulate_selection(scenario1(2.0, 300), 6));
  ArchSpec a;
  a.hidden = {8};
  a.activation = Activation::tanh;
  TrainConfig c;
  c.optimizer = Optimizer::sgd;
  c.learning_rate = 0.05;
  c.batch_strata = 300;
  c.epochs = 10;
  auto r = train(build_network(a, 3), p, c);
  for (std::size_t e = 1; e < r.trace.train_nll.size(); ++e)
    CHECK(r.trace.train_nll[e] <= r.trace.train_nll[e - 1] + 1e-12);
}

TEST_CASE("training is reproducible and seeds matter") {
  auto p = pack_strata(sim::simulate_selection(scenario1(1.0, 300), 7));
  ArchSpec a;
  a.hidden = {6};
  a.dropout_rate = 0.2;
  TrainConfig c;
  c.epochs = 5;
  c.seed = 3;
  auto r1 = train(build_network(a, 1), p, c);
  auto r2 = train(build_network(a, 1), p, c);
  CHECK(r1.net.flat_parameters() == r2.net.flat_parameters());
  CHECK(r1.trace.train_nll == r2.trace.train_nll);
  c.seed = 4;
  CHECK(train(build_network(a, 1), p, c).net.flat_parameters() != r1.net.flat_parameters());
  // Inference ignores dropout.
  CHECK(r1.net.score(p) == r1.net.score(p));
}

TEST_CASE("early stopping records validation NLL and keeps the best weights") {
  auto p = pack_strata(sim::simulate_selection(scenario1(1.0, 400), 8));
  ArchSpec a;
  a.hidden = {16, 16};
  TrainConfig c;
  c.epochs = 60;
  c.early_stop_patience = 3;
  c.learning_rate = 0.05;
  auto r = train(build_network(a, 2), p, c);
  CHECK(r.trace.validation_nll.size() == r.trace.train_nll.size());
  CHECK(r.trace.epochs_run() <= 60);
}

TEST_CASE("divergent training aborts with a convergence error") {
  auto d = testing::make_dataset(
      100, 4, 1, [](int s, int i) { return std::vector<double>{1e3 * ((s * 7 + i * 3) % 5 - 2.0)}; },
      [](int s) { return s % 4; });
  ArchSpec a;
  a.hidden = {8};
  a.activation = Activation::selu;
  TrainConfig c;
  c.optimizer = Optimizer::sgd;
  c.learning_rate = 1e6;
  c.epochs = 50;
  CHECK_THROWS_AS(train(build_network(a, 1), pack_strata(d), c), ConvergenceError);
}

TEST_CASE("TrainConfig validation and centering warning") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.epochs = 1;
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.learning_rate = 0.01;
  c.batch_strata = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  auto d = sim::simulate_selection(scenario1(1.0, 50), 1);
  d.centered = false;
  ArchSpec a;
  a.hidden = {2};
  TrainConfig ok;
  ok.epochs = 1;
  auto r = train(build_network(a, 1), d, ok);
  CHECK_FALSE(r.trace.warnings.empty());
}
