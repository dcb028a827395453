#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssf/bench/scenarios.hpp"
#include "ssf/error.hpp"
#include "ssf/rng.hpp"

using namespace ssf;
using namespace ssf::bench;
namespace fs = std::filesystem;

namespace {

ScenarioConfig tiny(int scenario) {
  auto c = ScenarioConfig::defaults(scenario);
  c.n_repetitions = 2;
  c.n_strata = 300;
  c.arch.hidden = {8};
  c.train.epochs = 5;
  c.threads = 1;
  c.bootstrap_replicates = 3;
  c.true_effect_grid = {0.0, 1.0};
  c.social.n_steps = 30;
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ssfkit_bench_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("adjusted Rand index reference values") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 2}) == doctest::Approx(0.5714285714285715));
  CHECK(adjusted_rand_index({0, 0, 0, 0}, {0, 1, 2, 3}) == doctest::Approx(0.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(adjusted_rand_index({0}, {0, 1}), ConfigError);
}

TEST_CASE("silhouette of two tight pairs") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1.0, 10.0, 11.0;
  CHECK(mean_silhouette(x, {0, 0, 1, 1}) == doctest::Approx((19.0 / 21.0 + 17.0 / 19.0) / 2.0).epsilon(1e-12));
  CHECK(mean_silhouette(x, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("k-means recovers separated blobs and is seed deterministic") {
  CounterRng rng(3);
  Eigen::MatrixXd x(40, 2);
  std::vector<int> truth;
  for (int i = 0; i < 40; ++i) {
    const int g = i % 4;
    x(i, 0) = 10.0 * (g % 2) + rng.uniform();
    x(i, 1) = 10.0 * (g / 2) + rng.uniform();
    truth.push_back(g);
  }
  auto a = kmeans(x, 4, 20, 1), b = kmeans(x, 4, 20, 1);
  CHECK(a.labels == b.labels);
  CHECK(adjusted_rand_index(a.labels, truth) == doctest::Approx(1.0));
  auto s = cluster_embeddings(x, truth, 4, 9);
  CHECK(s.ari == doctest::Approx(1.0));
  CHECK(s.permutation_p < 0.01);
  CHECK(s.silhouette > 0.8);
  CHECK_THROWS_AS(kmeans(x, 41, 1, 0), ConfigError);
}

TEST_CASE("ARI permutation p is large without structure") {
  CounterRng rng(4);
  Eigen::MatrixXd x(20, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  std::vector<int> truth;
  for (int i = 0; i < 20; ++i) truth.push_back(i / 5);
  // Labels independent of positions.
  std::vector<int> shuffled = truth;
  shuffle(shuffled, rng);
  auto s = cluster_embeddings(x, shuffled, 4, 2);
  CHECK(s.ari >= -1.0);
  CHECK(s.ari <= 1.0);
  CHECK(s.permutation_p > 0.05);
}

TEST_CASE("calibration counts coverage and rejection") {
  std::vector<RepEstimate> reps{{0.1, -0.1, 0.3, 0.2}, {0.5, 0.2, 0.8, 0.001}, {-0.2, -0.5, 0.1, 0.04}};
  auto s = calibrate("glm", 0.0, reps, 1, 0.05);
  CHECK(s.n_completed == 3);
  CHECK(s.n_failed == 1);
  CHECK(s.mean_estimate == doctest::Approx(0.4 / 3.0));
  CHECK(s.bias == doctest::Approx(0.4 / 3.0));
  CHECK(s.coverage == doctest::Approx(2.0 / 3.0));
  CHECK(s.rejection == doctest::Approx(2.0 / 3.0));
  CHECK(std::isnan(calibrate("dnn", 0.0, {}, 2, 0.05).coverage));
}

TEST_CASE("effect matrix obeys MSE = variance + bias^2") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(3, 3);
  truth(0, 0) = 1.0;
  truth(0, 2) = -0.5;
  CounterRng rng(5);
  std::vector<Eigen::MatrixXd> est;
  for (int r = 0; r < 50; ++r) {
    Eigen::MatrixXd e(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) e.data()[i] = truth.data()[i] + rng.uniform() - 0.4;
    est.push_back(e);
  }
  auto m = effect_matrix("glm", truth, est);
  CHECK(m.cells.size() == 6);
  CHECK(m.identity_gap() < 1e-12);
  CHECK(m.cell(2, 0).truth == -0.5);
  // Oracle for one cell computed directly.
  double mean = 0.0, mse = 0.0;
  for (const auto& e : est) mean += e(0, 2) / 50.0;
  for (const auto& e : est) mse += (e(0, 2) + 0.5) * (e(0, 2) + 0.5) / 50.0;
  CHECK(m.cell(0, 2).mean_estimate == doctest::Approx(mean));
  CHECK(m.cell(0, 2).mse == doctest::Approx(mse));
  CHECK(m.mean_mse_true_interactions() == doctest::Approx(m.cell(0, 2).mse));
  CHECK(m.mean_mse_mains() ==
        doctest::Approx((m.cell(0, 0).mse + m.cell(1, 1).mse + m.cell(2, 2).mse) / 3.0));
}

TEST_CASE("config JSON is strict and round trips") {
  auto c = ScenarioConfig::defaults(3);
  c.seed = 42;
  c.arch.hidden = {7, 3};
  c.train.early_stop_patience = 4;
  auto text = config_to_json(c);
  auto back = config_from_json(text, ScenarioConfig::defaults(1));
  CHECK(config_to_json(back) == text);
  CHECK(back.seed == 42);
  CHECK(back.arch.hidden == std::vector<int>{7, 3});

  auto partial = config_from_json(R"({"n_repetitions": 5, "arch": {"activation": "tanh"}})", c);
  CHECK(partial.n_repetitions == 5);
  CHECK(partial.arch.activation == net::Activation::tanh);
  CHECK(partial.arch.hidden == std::vector<int>{7, 3});

  CHECK_THROWS_WITH_AS(config_from_json(R"({"n_reps": 5})", c), doctest::Contains("n_reps"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"arch": {"widths": [3]}})", c), doctest::Contains("arch.widths"),
                       ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"n_strata": "many"})", c), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"seed": -1})", c), ConfigError);
  CHECK_THROWS_AS(config_from_json("{", c), ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::defaults(6), ConfigError);
  auto bad = c;
  bad.n_repetitions = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scenario-4 generating spec") {
  auto c = ScenarioConfig::defaults(4);
  auto s = scenario4_spec(c, 7);
  CHECK(s.n_features == 20);
  CHECK(s.individual_group.size() == 20);
  CHECK(s.individual_group[4] == 0);
  CHECK(s.individual_group[5] == 1);
  REQUIRE(s.group_betas.size() == 4);
  for (const auto& [g, b] : s.group_betas) {
    for (double v : b) {
      CHECK(v > -3.0);
      CHECK(v < 3.0);
    }
    for (std::size_t j = 15; j < 20; ++j) CHECK(b[j] == 0.0);
    double lo = b[10], hi = b[10];
    for (std::size_t j = 10; j < 15; ++j) {
      lo = std::min(lo, b[j]);
      hi = std::max(hi, b[j]);
    }
    CHECK(hi - lo < 2.0);  // shared latent plus N(0, 0.2) jitter
  }
  CHECK(s.group_betas.at(0) != s.group_betas.at(1));
  c.shared_betas = true;
  auto shared = scenario4_spec(c, 7);
  for (const auto& [g, b] : shared.group_betas) CHECK(b == shared.group_betas.at(0));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("scenario 1 is reproducible across thread counts") {
  auto c = tiny(1);
  auto a = run_scenario1(c);
  c.threads = 3;
  auto b = run_scenario1(c);
  CHECK(a.status.attempted == 4);
  CHECK(a.status.completed == 4);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimate == b.rows[i].estimate);
    CHECK(a.rows[i].p_value == b.rows[i].p_value);
  }
  REQUIRE(a.summaries.size() == 4);
  for (const auto& s : a.summaries) {
    CHECK(s.coverage >= 0.0);
    CHECK(s.coverage <= 1.0);
    CHECK(s.rejection >= 0.0);
    CHECK(s.rejection <= 1.0);
  }
}

TEST_CASE("scenario 1 writes the results layout") {
  auto c = tiny(1);
  c.n_repetitions = 1;
  c.true_effect_grid = {0.5};
  const auto dir = scratch("s1");
  auto r = run_scenario1(c, dir.string());
  for (const char* f : {"data.csv", "truth.json", "model_glm.json", "model_dnn.json", "metrics.csv"})
    CHECK(fs::exists(dir / "rep0" / f));
  auto rows = summary_rows(r);
  write_summary_csv((dir / "summary.csv").string(), rows);
  auto again = read_summary_csv((dir / "summary.csv").string());
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].cell == rows[i].cell);
    CHECK((again[i].value == rows[i].value || (std::isnan(again[i].value) && std::isnan(rows[i].value))));
  }
  c.write_artifacts = false;
  const auto lean = scratch("s1_lean");
  run_scenario1(c, lean.string());
  CHECK(fs::exists(lean / "rep0" / "metrics.csv"));
  CHECK_FALSE(fs::exists(lean / "rep0" / "data.csv"));
}

TEST_CASE("scenario 2 scores both curve estimators") {
  auto c = tiny(2);
  c.truths = {"hump", "zero"};
  c.spline.penalty_grid = {1.0};
  auto r = run_scenario2(c);
  CHECK(r.status.completed == 4);
  REQUIRE(r.scores.size() == 4);
  for (const auto& s : r.scores) {
    CHECK(s.mean_mse >= 0.0);
    if (s.truth == "zero") CHECK(s.truth_variance == 0.0);
    else CHECK(s.truth_variance > 0.1);
  }
}

TEST_CASE("scenario 3 effect matrices") {
  auto c = tiny(3);
  c.n_strata = 600;
  auto r = run_scenario3(c);
  CHECK(r.status.completed == 2);
  CHECK(r.truth(0, 7) == 1.0);
  CHECK(r.truth(2, 6) == -1.0);
  CHECK(r.truth(4, 4) == 0.0);
  CHECK(r.glm.cells.size() == 45);
  CHECK(r.dnn.cells.size() == 45);
  CHECK(r.glm.identity_gap() < 1e-9);
  CHECK(r.dnn.identity_gap() < 1e-9);
}

TEST_CASE("scenario 4 embeddings put same-group individuals closer") {
  auto c = ScenarioConfig::defaults(4);
  c.n_repetitions = 1;
  c.n_strata = 4000;
  c.train.epochs = 40;
  c.threads = 1;
  auto r = run_scenario4(c);
  REQUIRE(r.reps.size() == 1);
  REQUIRE(r.reps[0].ok);
  const auto& rep = r.reps[0];
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (std::size_t a = 0; a < rep.biplot.ids.size(); ++a)
    for (std::size_t b = a + 1; b < rep.biplot.ids.size(); ++b) {
      const double dist = (rep.biplot.positions.row(static_cast<Eigen::Index>(a)) -
                           rep.biplot.positions.row(static_cast<Eigen::Index>(b)))
                              .norm();
      if (rep.true_groups[a] == rep.true_groups[b]) {
        within += dist;
        ++nw;
      } else {
        between += dist;
        ++nb;
      }
    }
  CHECK(within / nw < 0.5 * between / nb);
  CHECK(rep.biplot.arrows.rows() == 20);
  CHECK(rep.biplot.arrows.cols() == 2);
}

TEST_CASE("scenario 5 runs and reports projections") {
  auto c = tiny(5);
  c.n_repetitions = 1;
  auto r = run_scenario5(c);
  REQUIRE(r.reps.size() == 1);
  CHECK(r.reps[0].ok);
  CHECK(r.reps[0].centroid_projection.size() == 3);
  CHECK(r.reps[0].biplot.group_labels.has_value());
}

TEST_CASE("summarize") {
  SUBCASE("empty input warns") {
    auto rep = summarize({});
    CHECK(rep.rows.empty());
    CHECK(rep.warnings.size() == 1);
  }
  SUBCASE("one file passes through") {
    const auto dir = scratch("sum1");
    std::vector<SummaryRow> rows{{2, "dnn", "hump", "curve_mse", 0.25}, {2, "spline", "hump", "curve_mse", 0.5}};
    write_summary_csv((dir / "summary.csv").string(), rows);
    auto rep = summarize({dir.string()});
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[1].model == "spline");
    CHECK(rep.rows[1].value == 0.5);
    CHECK(rep.warnings.empty());
    CHECK(render_table(rep).find("curve_mse") != std::string::npos);
  }
  SUBCASE("identity check on synthetic cells") {
    const auto dir = scratch("sum2");
    write_summary_csv((dir / "a.csv").string(),
                      {{3, "glm", "x1", "bias", 0.1}, {3, "glm", "x1", "variance", 0.02}, {3, "glm", "x1", "mse", 0.03}});
    auto ok = summarize({(dir / "a.csv").string()});
    CHECK(ok.identity_ok);
    CHECK(ok.identity_gap < 1e-9);
    write_summary_csv((dir / "b.csv").string(),
                      {{3, "dnn", "x1", "bias", 0.1}, {3, "dnn", "x1", "variance", 0.02}, {3, "dnn", "x1", "mse", 0.04}});
    auto bad = summarize({(dir / "a.csv").string(), (dir / "b.csv").string()});
    CHECK_FALSE(bad.identity_ok);
    CHECK(bad.identity_gap == doctest::Approx(0.01));
    CHECK(bad.rows.size() == 6);
  }
  SUBCASE("schema mismatch") {
    const auto dir = scratch("sum3");
    std::ofstream(dir / "summary.csv") << "a,b\n1,2\n";
    CHECK_THROWS_AS(summarize({dir.string()}), DataError);
    CHECK_THROWS_AS(summarize({(dir / "missing").string()}), DataError);
  }
}
