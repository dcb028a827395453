#include "ssf/bench/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "ssf/error.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/glm/spline.hpp"
#include "ssf/model_io.hpp"
#include "ssf/net/train.hpp"
#include "ssf/packed.hpp"
#include "ssf/parallel.hpp"
#include "ssf/rng.hpp"
#include "ssf/sim/social.hpp"

namespace ssf::bench {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t rep_seed(const ScenarioConfig& cfg, std::uint64_t cell, std::uint64_t rep) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(cfg.scenario), cell, rep});
}

net::SsfNetwork train_dnn(const ScenarioConfig& cfg, net::ArchSpec arch, const PackedStrata& d,
                          std::uint64_t seed) {
  net::TrainConfig t = cfg.train;
  t.seed = derive_seed(seed, {1});
  auto result = net::train(net::build_network(arch, derive_seed(seed, {0})), d, t);
  result.net.trained = true;
  return std::move(result.net);
}

net::ArchSpec plain_arch(const ScenarioConfig& cfg, std::size_t p) {
  net::ArchSpec a = cfg.arch;
  a.n_features = p;
  a.embeddings.reset();
  return a;
}

std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> n;
  for (std::size_t j = 0; j < p; ++j) n.push_back("x" + std::to_string(j + 1));
  return n;
}

// Per-repetition output directory, created on demand.
struct RepFiles {
  std::optional<fs::path> dir;
  bool artifacts = false;

  RepFiles(const ScenarioConfig& cfg, const std::optional<std::string>& out, int index) {
    if (!out) return;
    dir = fs::path(*out) / ("rep" + std::to_string(index));
    fs::create_directories(*dir);
    artifacts = cfg.write_artifacts;
  }

  void dataset(const StrataDataset& d, const std::string& truth_json) const {
    if (!artifacts) return;
    write_csv_file((*dir / "data.csv").string(), d);
    std::ofstream((*dir / "truth.json").string()) << truth_json << "\n";
  }

  void model(const ScoringModel& m, const std::vector<std::string>& names, const ScenarioConfig& cfg) const {
    if (!artifacts) return;
    // The thread count never changes results, so it is not recorded.
    ScenarioConfig recorded = cfg;
    recorded.threads = 0;
    write_model_file((*dir / ("model_" + m.kind() + ".json")).string(), m, names, config_to_json(recorded));
  }

  void metrics(const std::vector<std::tuple<std::string, std::string, double>>& rows) const {
    if (!dir) return;
    std::ofstream out((*dir / "metrics.csv").string());
    out << "model,metric,value\n";
    for (const auto& [model, metric, value] : rows) out << model << ',' << metric << ',' << format_double(value) << '\n';
  }
};

std::string short_error(const std::exception& e) {
  std::string s = e.what();
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Eigen::VectorXd centered(Eigen::VectorXd v) {
  v.array() -= v.mean();
  return v;
}

std::string cell_name(const std::vector<std::string>& names, std::size_t i, std::size_t j) {
  return i == j ? names[i] : names[i] + ":" + names[j];
}

}  // namespace

// ---------------------------------------------------------------- scenario 1

Scenario1Result run_scenario1(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  const int n_reps = cfg.n_repetitions;
  const auto n_cells = cfg.true_effect_grid.size();
  const std::size_t total = n_cells * static_cast<std::size_t>(n_reps);
  std::vector<Scenario1Row> glm_rows(total), dnn_rows(total);
  std::vector<std::string> errors(total);
  const std::vector<std::string> names{"x1"};

  parallel_for(total, cfg.threads, [&](std::size_t i) {
    const std::size_t cell = i / static_cast<std::size_t>(n_reps);
    const int rep = static_cast<int>(i % static_cast<std::size_t>(n_reps));
    const double slope = cfg.true_effect_grid[cell];
    const auto seed = rep_seed(cfg, cell, static_cast<std::uint64_t>(rep));
    RepFiles files(cfg, out_dir, static_cast<int>(i));

    sim::SelectionSpec spec;
    spec.betas = {slope};
    spec.n_strata = cfg.n_strata;
    spec.n_controls = cfg.n_controls;
    const auto data_seed = derive_seed(seed, {1});
    const StrataDataset data = sim::simulate_selection(spec, data_seed);
    const PackedStrata packed = pack_strata(data);
    files.dataset(data, sim::selection_truth_json(spec, data_seed));

    auto& g = glm_rows[i];
    g.rep = rep;
    g.true_slope = slope;
    g.model = "glm";
    try {
      auto fit = glm::fit_clogit_glm(packed, names, glm::FormulaSpec::main_only(1));
      auto w = glm::wald_inference(fit).front();
      g = {rep, slope, "glm", true, w.estimate, w.se, w.ci_low, w.ci_high, w.p_value};
      files.model(glm::GlmModel(1, fit), names, cfg);
    } catch (const Error& e) {
      errors[i] += "glm: " + short_error(e);
    }

    auto& d = dnn_rows[i];
    d.rep = rep;
    d.true_slope = slope;
    d.model = "dnn";
    try {
      const auto arch = plain_arch(cfg, 1);
      auto net = train_dnn(cfg, arch, packed, derive_seed(seed, {2}));
      files.model(net, names, cfg);
      if (cfg.bootstrap_replicates >= 2) {
        xai::Fitter fitter = [&](const PackedStrata& p, std::uint64_t s) -> std::unique_ptr<ScoringModel> {
          return std::make_unique<net::SsfNetwork>(train_dnn(cfg, arch, p, s));
        };
        xai::BootstrapOptions o;
        o.replicates = cfg.bootstrap_replicates;
        o.seed = derive_seed(seed, {3});
        o.threads = 1;
        auto r = xai::bootstrap_inference(fitter, packed, {0}, names, o, &net).front();
        d = {rep, slope, "dnn", true, r.estimate, r.se, r.ci_low, r.ci_high, r.p_value};
      } else {
        d = {rep, slope, "dnn", true, xai::average_conditional_effect(net, packed, 0), kNaN, kNaN, kNaN, kNaN};
      }
    } catch (const Error& e) {
      errors[i] += std::string(errors[i].empty() ? "" : "; ") + "dnn: " + short_error(e);
    }

    std::vector<std::tuple<std::string, std::string, double>> m;
    for (const auto* r : {&g, &d}) {
      m.emplace_back(r->model, "true_slope", slope);
      m.emplace_back(r->model, "ok", r->ok ? 1.0 : 0.0);
      m.emplace_back(r->model, "estimate", r->ok ? r->estimate : kNaN);
      m.emplace_back(r->model, "se", r->ok ? r->se : kNaN);
      m.emplace_back(r->model, "ci_low", r->ok ? r->ci_low : kNaN);
      m.emplace_back(r->model, "ci_high", r->ok ? r->ci_high : kNaN);
      m.emplace_back(r->model, "p_value", r->ok ? r->p_value : kNaN);
    }
    files.metrics(m);
  });

  Scenario1Result res;
  res.status.attempted = static_cast<int>(total);
  for (std::size_t i = 0; i < total; ++i) {
    res.rows.push_back(glm_rows[i]);
    res.rows.push_back(dnn_rows[i]);
    if (glm_rows[i].ok && dnn_rows[i].ok) ++res.status.completed;
    if (!errors[i].empty()) res.status.failures.push_back("rep" + std::to_string(i) + ": " + errors[i]);
  }
  for (const std::string model : {"glm", "dnn"}) {
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
      std::vector<RepEstimate> ok;
      int failed = 0;
      for (std::size_t r = 0; r < static_cast<std::size_t>(n_reps); ++r) {
        const auto& row = (model == "glm" ? glm_rows : dnn_rows)[cell * static_cast<std::size_t>(n_reps) + r];
        if (row.ok) ok.push_back({row.estimate, row.ci_low, row.ci_high, row.p_value});
        else ++failed;
      }
      res.summaries.push_back(calibrate(model, cfg.true_effect_grid[cell], ok, failed, cfg.alpha));
    }
  }
  return res;
}

// ---------------------------------------------------------------- scenario 2

Scenario2Result run_scenario2(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  const int n_reps = cfg.n_repetitions;
  const std::size_t total = cfg.truths.size() * static_cast<std::size_t>(n_reps);
  std::vector<Scenario2Row> rows(total);
  std::vector<std::string> errors(total);
  const std::vector<std::string> names{"x1"};

  parallel_for(total, cfg.threads, [&](std::size_t i) {
    const std::size_t cell = i / static_cast<std::size_t>(n_reps);
    const int rep = static_cast<int>(i % static_cast<std::size_t>(n_reps));
    const auto transform = sim::transform_from_string(cfg.truths[cell]);
    const auto seed = rep_seed(cfg, cell, static_cast<std::uint64_t>(rep));
    RepFiles files(cfg, out_dir, static_cast<int>(i));
    auto& row = rows[i];
    row.rep = rep;
    row.truth = cfg.truths[cell];

    sim::SelectionSpec spec;
    spec.betas = {1.0};
    spec.transforms = {{0, transform}};
    spec.n_strata = cfg.n_strata;
    spec.n_controls = cfg.n_controls;
    const auto data_seed = derive_seed(seed, {1});
    const StrataDataset data = sim::simulate_selection(spec, data_seed);
    const PackedStrata packed = pack_strata(data);
    files.dataset(data, sim::selection_truth_json(spec, data_seed));

    std::vector<double> xs(static_cast<std::size_t>(packed.x.cols()));
    for (Eigen::Index c = 0; c < packed.x.cols(); ++c) xs[static_cast<std::size_t>(c)] = packed.x(0, c);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(100, quantile(xs, 0.05), quantile(xs, 0.95));
    Eigen::VectorXd truth(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) truth[k] = sim::apply_transform(transform, grid[k]);
    truth = centered(truth);
    row.truth_variance = truth.squaredNorm() / static_cast<double>(grid.size());

    try {
      auto net = train_dnn(cfg, plain_arch(cfg, 1), packed, derive_seed(seed, {2}));
      files.model(net, names, cfg);
      const auto ale = xai::ale_curve(net, packed, 0, cfg.ale_bins);
      Eigen::VectorXd dnn(grid.size());
      for (Eigen::Index k = 0; k < grid.size(); ++k) dnn[k] = ale.evaluate(grid[k]);
      dnn = centered(dnn);

      glm::SplineSettings st = cfg.spline;
      st.seed = derive_seed(seed, {4});
      auto fit = glm::fit_clogit_spline(data, 0, st);
      files.model(glm::SplineModel(1, fit), names, cfg);
      const Eigen::VectorXd spline = centered(glm::spline_curve(fit, grid));

      row.dnn_mse = (dnn - truth).squaredNorm() / static_cast<double>(grid.size());
      row.spline_mse = (spline - truth).squaredNorm() / static_cast<double>(grid.size());
      row.ok = true;
      if (files.artifacts) {
        std::ofstream out((*files.dir / "curve.csv").string());
        out << "x,truth,dnn,spline\n";
        for (Eigen::Index k = 0; k < grid.size(); ++k)
          out << format_double(grid[k]) << ',' << format_double(truth[k]) << ',' << format_double(dnn[k]) << ','
              << format_double(spline[k]) << '\n';
      }
    } catch (const Error& e) {
      errors[i] = short_error(e);
    }
    files.metrics({{"dnn", "mse", row.ok ? row.dnn_mse : kNaN},
                   {"spline", "mse", row.ok ? row.spline_mse : kNaN},
                   {"truth", "variance", row.truth_variance}});
  });

  Scenario2Result res;
  res.status.attempted = static_cast<int>(total);
  res.rows = rows;
  for (std::size_t i = 0; i < total; ++i) {
    if (rows[i].ok) ++res.status.completed;
    else res.status.failures.push_back("rep" + std::to_string(i) + ": " + errors[i]);
  }
  for (std::size_t cell = 0; cell < cfg.truths.size(); ++cell) {
    for (const std::string model : {"dnn", "spline"}) {
      CurveScore s;
      s.truth = cfg.truths[cell];
      s.model = model;
      double mse = 0.0, var = 0.0;
      for (int r = 0; r < n_reps; ++r) {
        const auto& row = rows[cell * static_cast<std::size_t>(n_reps) + static_cast<std::size_t>(r)];
        var += row.truth_variance;
        if (!row.ok) continue;
        ++s.n_completed;
        mse += model == "dnn" ? row.dnn_mse : row.spline_mse;
      }
      s.mean_mse = s.n_completed > 0 ? mse / s.n_completed : kNaN;
      s.truth_variance = var / n_reps;
      res.scores.push_back(s);
    }
  }
  return res;
}

// ---------------------------------------------------------------- scenario 3

sim::SelectionSpec scenario3_spec(const ScenarioConfig& cfg) {
  sim::SelectionSpec s;
  s.n_features = 9;
  s.betas = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  s.interactions = {{0, 7, 1.0}, {2, 6, -1.0}, {3, 5, 1.0}};
  s.n_strata = cfg.n_strata;
  s.n_controls = cfg.n_controls;
  return s;
}

Scenario3Result run_scenario3(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  const auto spec = scenario3_spec(cfg);
  const std::size_t p = spec.n_features;
  const auto names = default_names(p);
  const auto n = static_cast<std::size_t>(cfg.n_repetitions);
  std::vector<Eigen::MatrixXd> glm_est(n), dnn_est(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> errors(n);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto seed = rep_seed(cfg, 0, i);
    RepFiles files(cfg, out_dir, static_cast<int>(i));
    const auto data_seed = derive_seed(seed, {1});
    const StrataDataset data = sim::simulate_selection(spec, data_seed);
    const PackedStrata packed = pack_strata(data);
    files.dataset(data, sim::selection_truth_json(spec, data_seed));
    try {
      const auto formula = glm::FormulaSpec::all_pairs(p);
      auto fit = glm::fit_clogit_glm(packed, names, formula);
      files.model(glm::GlmModel(p, fit), names, cfg);
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
      Eigen::Index t = 0;
      for (std::size_t j : formula.main_effects) {
        const auto jj = static_cast<Eigen::Index>(j);
        g(jj, jj) = fit.coefficients[t++];
      }
      for (const auto& [a, b] : formula.interactions)
        g(static_cast<Eigen::Index>(std::min(a, b)), static_cast<Eigen::Index>(std::max(a, b))) = fit.coefficients[t++];

      auto net = train_dnn(cfg, plain_arch(cfg, p), packed, derive_seed(seed, {2}));
      files.model(net, names, cfg);
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
      for (std::size_t a = 0; a < p; ++a) {
        const auto aa = static_cast<Eigen::Index>(a);
        d(aa, aa) = xai::average_conditional_effect(net, packed, a);
        for (std::size_t b = a + 1; b < p; ++b)
          d(aa, static_cast<Eigen::Index>(b)) = xai::cross_partial_effect(net, packed, a, b);
      }
      glm_est[i] = g;
      dnn_est[i] = d;
      ok[i] = 1;

      std::vector<std::tuple<std::string, std::string, double>> m;
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a; b < p; ++b) {
          const auto aa = static_cast<Eigen::Index>(a), bb = static_cast<Eigen::Index>(b);
          m.emplace_back("glm", cell_name(names, a, b), g(aa, bb));
          m.emplace_back("dnn", cell_name(names, a, b), d(aa, bb));
        }
      files.metrics(m);
    } catch (const Error& e) {
      errors[i] = short_error(e);
      files.metrics({});
    }
  });

  Scenario3Result res;
  res.status.attempted = static_cast<int>(n);
  res.truth = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) res.truth(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = spec.betas[j];
  for (const auto& it : spec.interactions)
    res.truth(static_cast<Eigen::Index>(std::min(it.p, it.q)), static_cast<Eigen::Index>(std::max(it.p, it.q))) = it.gamma;
  std::vector<Eigen::MatrixXd> g, d;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      ++res.status.completed;
      g.push_back(glm_est[i]);
      d.push_back(dnn_est[i]);
    } else {
      res.status.failures.push_back("rep" + std::to_string(i) + ": " + errors[i]);
    }
  }
  res.glm = effect_matrix("glm", res.truth, g);
  res.dnn = effect_matrix("dnn", res.truth, d);
  return res;
}

// ---------------------------------------------------------- scenarios 4 and 5

sim::SelectionSpec scenario4_spec(const ScenarioConfig& cfg, std::uint64_t seed) {
  sim::SelectionSpec s;
  s.n_features = static_cast<std::size_t>(cfg.n_predictors);
  s.betas.assign(s.n_features, 0.0);
  s.n_strata = cfg.n_strata;
  s.n_controls = cfg.n_controls;
  const int per_group = cfg.n_individuals / cfg.n_groups;
  for (int i = 0; i < cfg.n_individuals; ++i) s.individual_group.push_back(i / per_group);

  CounterRng rng(seed);
  boost::random::uniform_real_distribution<double> unif(-3.0, 3.0);
  boost::random::normal_distribution<double> jitter(0.0, 0.2);
  for (int g = 0; g < cfg.n_groups; ++g) {
    std::vector<double> b(s.n_features, 0.0);
    if (g == 0 || !cfg.shared_betas) {
      for (std::size_t j = 0; j < 10; ++j) b[j] = unif(rng);
      const double latent = unif(rng);
      for (std::size_t j = 10; j < 15; ++j) b[j] = std::clamp(latent + jitter(rng), -2.99, 2.99);
    } else {
      b = s.group_betas.at(0);
    }
    s.group_betas[g] = b;
  }
  return s;
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double n = a.norm() * b.norm();
  return n > 0.0 ? a.dot(b) / n : 0.0;
}

void finish_embedding_rep(EmbeddingRep& r, const std::vector<int>& group_of, int n_groups, std::uint64_t seed) {
  for (int id : r.biplot.ids) r.true_groups.push_back(group_of[static_cast<std::size_t>(id)]);
  r.cluster = cluster_embeddings(r.biplot.positions, r.true_groups, n_groups, seed);
  r.biplot.group_labels.emplace();
  for (std::size_t k = 0; k < r.biplot.ids.size(); ++k) (*r.biplot.group_labels)[r.biplot.ids[k]] = r.true_groups[k];
}

EmbeddingResult collect(int scenario, std::vector<EmbeddingRep> reps, std::vector<std::string> errors) {
  EmbeddingResult res;
  res.scenario = scenario;
  res.status.attempted = static_cast<int>(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].ok) ++res.status.completed;
    else res.status.failures.push_back("rep" + std::to_string(i) + ": " + errors[i]);
  }
  res.reps = std::move(reps);
  return res;
}

void write_biplot(const RepFiles& files, const EmbeddingRep& r) {
  if (!files.dir) return;
  std::ofstream pos((*files.dir / "biplot_positions.csv").string());
  pos << "id,dim1,dim2,group,cluster\n";
  for (std::size_t k = 0; k < r.biplot.ids.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    pos << r.biplot.ids[k] << ',' << format_double(r.biplot.positions(row, 0)) << ','
        << format_double(r.biplot.positions.cols() > 1 ? r.biplot.positions(row, 1) : 0.0) << ',' << r.true_groups[k]
        << ',' << r.cluster.cluster_labels[k] << '\n';
  }
  std::ofstream arrows((*files.dir / "biplot_arrows.csv").string());
  arrows << "feature,u,v\n";
  for (std::size_t f = 0; f < r.biplot.features.size(); ++f) {
    const auto row = static_cast<Eigen::Index>(f);
    arrows << r.biplot.features[f] << ',' << format_double(r.biplot.arrows(row, 0)) << ','
           << format_double(r.biplot.arrows.cols() > 1 ? r.biplot.arrows(row, 1) : 0.0) << '\n';
  }
}

}  // namespace

EmbeddingResult run_scenario4(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  if (cfg.scenario != 4) throw ConfigError("run_scenario4 needs scenario = 4");
  const auto n = static_cast<std::size_t>(cfg.n_repetitions);
  std::vector<EmbeddingRep> reps(n);
  std::vector<std::string> errors(n);
  const std::size_t p = static_cast<std::size_t>(cfg.n_predictors);
  const auto names = default_names(p);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto seed = rep_seed(cfg, 0, i);
    RepFiles files(cfg, out_dir, static_cast<int>(i));
    auto& r = reps[i];
    r.rep = static_cast<int>(i);
    const auto spec = scenario4_spec(cfg, derive_seed(seed, {5}));
    const auto data_seed = derive_seed(seed, {1});
    const StrataDataset data = sim::simulate_selection(spec, data_seed);
    const PackedStrata packed = pack_strata(data);
    files.dataset(data, sim::selection_truth_json(spec, data_seed));
    try {
      net::ArchSpec arch = plain_arch(cfg, p);
      arch.embeddings = net::EmbeddingSpec{cfg.n_individuals, cfg.embedding_dim, EmbeddingTarget::individual, cfg.wiring};
      auto net = train_dnn(cfg, arch, packed, derive_seed(seed, {2}));
      files.model(net, names, cfg);
      std::vector<std::size_t> all(p);
      for (std::size_t j = 0; j < p; ++j) all[j] = j;
      r.biplot = xai::embedding_biplot(net, packed, all, names);
      finish_embedding_rep(r, spec.individual_group, cfg.n_groups, derive_seed(seed, {4}));

      std::vector<double> norms(p);
      for (std::size_t j = 0; j < p; ++j) norms[j] = r.biplot.arrows.row(static_cast<Eigen::Index>(j)).norm();
      const double max_null = *std::max_element(norms.begin() + 15, norms.end());
      const double min_other = *std::min_element(norms.begin(), norms.begin() + 15);
      r.null_arrows_shortest = max_null < min_other;
      r.min_correlated_cosine = 1.0;
      for (Eigen::Index a = 10; a < 15; ++a)
        for (Eigen::Index b = a + 1; b < 15; ++b)
          r.min_correlated_cosine = std::min(
              r.min_correlated_cosine, cosine(r.biplot.arrows.row(a).transpose(), r.biplot.arrows.row(b).transpose()));
      r.ok = true;
      write_biplot(files, r);
      files.metrics({{"dnn", "ari", r.cluster.ari},
                     {"dnn", "silhouette", r.cluster.silhouette},
                     {"dnn", "permutation_p", r.cluster.permutation_p},
                     {"dnn", "null_arrows_shortest", r.null_arrows_shortest ? 1.0 : 0.0},
                     {"dnn", "min_correlated_cosine", r.min_correlated_cosine}});
    } catch (const Error& e) {
      errors[i] = short_error(e);
      files.metrics({});
    }
  });
  return collect(4, std::move(reps), std::move(errors));
}

EmbeddingResult run_scenario5(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  if (cfg.scenario != 5) throw ConfigError("run_scenario5 needs scenario = 5");
  const auto n = static_cast<std::size_t>(cfg.n_repetitions);
  std::vector<EmbeddingRep> reps(n);
  std::vector<std::string> errors(n);
  sim::SocialSpec spec = cfg.social;
  spec.n_controls = cfg.n_controls;
  const std::vector<std::string> names{"dist"};

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto seed = rep_seed(cfg, 0, i);
    RepFiles files(cfg, out_dir, static_cast<int>(i));
    auto& r = reps[i];
    r.rep = static_cast<int>(i);
    try {
      const auto data_seed = derive_seed(seed, {1});
      const auto social = sim::simulate_social(spec, data_seed);
      const PackedStrata packed = pack_strata(social.data);
      files.dataset(social.data, sim::social_truth_json(spec, data_seed));

      net::ArchSpec arch = plain_arch(cfg, 1);
      arch.embeddings = net::EmbeddingSpec{spec.n_individuals(), cfg.embedding_dim, EmbeddingTarget::opponent, cfg.wiring};
      auto net = train_dnn(cfg, arch, packed, derive_seed(seed, {2}));
      files.model(net, names, cfg);
      r.biplot = xai::embedding_biplot(net, packed, {0}, names);
      finish_embedding_rep(r, social.opponent_group, spec.n_groups, derive_seed(seed, {4}));

      // Project group centroids on the distance arrow.
      const Eigen::VectorXd arrow = r.biplot.arrows.row(0).transpose();
      const double len = arrow.norm();
      r.centroid_projection.assign(static_cast<std::size_t>(spec.n_groups), kNaN);
      for (int g = 0; g < spec.n_groups; ++g) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(r.biplot.positions.cols());
        int count = 0;
        for (std::size_t k = 0; k < r.biplot.ids.size(); ++k) {
          if (r.true_groups[k] != g) continue;
          c += r.biplot.positions.row(static_cast<Eigen::Index>(k)).transpose();
          ++count;
        }
        if (count > 0 && len > 0.0) r.centroid_projection[static_cast<std::size_t>(g)] = c.dot(arrow) / (count * len);
      }
      r.centroid_order_ok = true;
      bool any_pair = false;
      for (int a = 0; a < spec.n_groups; ++a)
        for (int b = 0; b < spec.n_groups; ++b) {
          const double ea = spec.group_distance_effect[static_cast<std::size_t>(a)];
          const double eb = spec.group_distance_effect[static_cast<std::size_t>(b)];
          if (!(ea < eb)) continue;
          any_pair = true;
          if (!(r.centroid_projection[static_cast<std::size_t>(a)] < r.centroid_projection[static_cast<std::size_t>(b)]))
            r.centroid_order_ok = false;
        }
      if (!any_pair) r.centroid_order_ok = false;
      r.ok = true;
      write_biplot(files, r);
      std::vector<std::tuple<std::string, std::string, double>> m{
          {"dnn", "ari", r.cluster.ari},
          {"dnn", "silhouette", r.cluster.silhouette},
          {"dnn", "permutation_p", r.cluster.permutation_p},
          {"dnn", "centroid_order_ok", r.centroid_order_ok ? 1.0 : 0.0}};
      for (int g = 0; g < spec.n_groups; ++g)
        m.emplace_back("dnn", "projection_group" + std::to_string(g), r.centroid_projection[static_cast<std::size_t>(g)]);
      files.metrics(m);
    } catch (const Error& e) {
      errors[i] = short_error(e);
      files.metrics({});
    }
  });
  return collect(5, std::move(reps), std::move(errors));
}

// ------------------------------------------------------------------ summaries

namespace {

void status_rows(std::vector<SummaryRow>& out, int scenario, const RunStatus& s) {
  out.push_back({scenario, "all", "run", "attempted", static_cast<double>(s.attempted)});
  out.push_back({scenario, "all", "run", "completed", static_cast<double>(s.completed)});
  out.push_back({scenario, "all", "run", "completion_rate", s.completion_rate()});
}

}  // namespace

std::vector<SummaryRow> summary_rows(const Scenario1Result& r) {
  std::vector<SummaryRow> out;
  status_rows(out, 1, r.status);
  for (const auto& s : r.summaries) {
    const std::string cell = "beta=" + format_double(s.true_slope);
    out.push_back({1, s.model, cell, "n_completed", static_cast<double>(s.n_completed)});
    out.push_back({1, s.model, cell, "n_failed", static_cast<double>(s.n_failed)});
    out.push_back({1, s.model, cell, "mean_estimate", s.mean_estimate});
    out.push_back({1, s.model, cell, "bias", s.bias});
    out.push_back({1, s.model, cell, "coverage", s.coverage});
    out.push_back({1, s.model, cell, "rejection", s.rejection});
  }
  return out;
}

std::vector<SummaryRow> summary_rows(const Scenario2Result& r) {
  std::vector<SummaryRow> out;
  status_rows(out, 2, r.status);
  for (const auto& s : r.scores) {
    out.push_back({2, s.model, s.truth, "n_completed", static_cast<double>(s.n_completed)});
    out.push_back({2, s.model, s.truth, "curve_mse", s.mean_mse});
    out.push_back({2, s.model, s.truth, "truth_variance", s.truth_variance});
    out.push_back({2, s.model, s.truth, "relative_mse",
                   s.truth_variance > 0.0 ? s.mean_mse / s.truth_variance : kNaN});
  }
  return out;
}

std::vector<SummaryRow> summary_rows(const Scenario3Result& r) {
  std::vector<SummaryRow> out;
  status_rows(out, 3, r.status);
  const auto names = default_names(static_cast<std::size_t>(r.truth.rows()));
  for (const auto* m : {&r.glm, &r.dnn}) {
    for (const auto& c : m->cells) {
      const auto cell = cell_name(names, c.i, c.j);
      out.push_back({3, m->model, cell, "truth", c.truth});
      out.push_back({3, m->model, cell, "mean_estimate", c.mean_estimate});
      out.push_back({3, m->model, cell, "bias", c.bias});
      out.push_back({3, m->model, cell, "variance", c.variance});
      out.push_back({3, m->model, cell, "mse", c.mse});
    }
    out.push_back({3, m->model, "average", "mse_all", m->mean_mse()});
    out.push_back({3, m->model, "average", "mse_mains", m->mean_mse_mains()});
    out.push_back({3, m->model, "average", "mse_null_interactions", m->mean_mse_null_interactions()});
    out.push_back({3, m->model, "average", "mse_true_interactions", m->mean_mse_true_interactions()});
  }
  out.push_back({3, "dnn-glm", "average", "mse_all_difference", r.dnn.mean_mse() - r.glm.mean_mse()});
  return out;
}

std::vector<SummaryRow> summary_rows(const EmbeddingResult& r) {
  std::vector<SummaryRow> out;
  status_rows(out, r.scenario, r.status);
  double ari = 0.0, sil = 0.0, ari_ok = 0.0, shape_ok = 0.0, cos_ok = 0.0;
  int n = 0;
  for (const auto& rep : r.reps) {
    if (!rep.ok) continue;
    ++n;
    const std::string cell = "rep" + std::to_string(rep.rep);
    out.push_back({r.scenario, "dnn", cell, "ari", rep.cluster.ari});
    out.push_back({r.scenario, "dnn", cell, "silhouette", rep.cluster.silhouette});
    out.push_back({r.scenario, "dnn", cell, "permutation_p", rep.cluster.permutation_p});
    ari += rep.cluster.ari;
    sil += rep.cluster.silhouette;
    if (rep.cluster.ari >= 0.9) ari_ok += 1.0;
    if (r.scenario == 4) {
      out.push_back({4, "dnn", cell, "null_arrows_shortest", rep.null_arrows_shortest ? 1.0 : 0.0});
      out.push_back({4, "dnn", cell, "min_correlated_cosine", rep.min_correlated_cosine});
      if (rep.null_arrows_shortest) shape_ok += 1.0;
      if (rep.min_correlated_cosine > 0.7) cos_ok += 1.0;
    } else {
      out.push_back({5, "dnn", cell, "centroid_order_ok", rep.centroid_order_ok ? 1.0 : 0.0});
      if (rep.centroid_order_ok) shape_ok += 1.0;
    }
  }
  const double dn = n > 0 ? static_cast<double>(n) : kNaN;
  out.push_back({r.scenario, "dnn", "all", "ari_mean", ari / dn});
  out.push_back({r.scenario, "dnn", "all", "silhouette_mean", sil / dn});
  out.push_back({r.scenario, "dnn", "all", "share_ari_ge_0.9", ari_ok / dn});
  if (r.scenario == 4) {
    out.push_back({4, "dnn", "all", "share_null_arrows_shortest", shape_ok / dn});
    out.push_back({4, "dnn", "all", "share_correlated_cosine_gt_0.7", cos_ok / dn});
  } else {
    out.push_back({5, "dnn", "all", "share_centroid_order_ok", shape_ok / dn});
  }
  return out;
}

namespace {
constexpr const char* kSummaryHeader = "scenario,model,cell,metric,value";
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << kSummaryHeader << '\n';
  for (const auto& r : rows)
    out << r.scenario << ',' << r.model << ',' << r.cell << ',' << r.metric << ',' << format_double(r.value) << '\n';
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader)
    throw DataError(path + ": expected header '" + std::string(kSummaryHeader) + "'");
  std::vector<SummaryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 5) throw DataError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    SummaryRow r;
    try {
      std::size_t used = 0;
      r.scenario = std::stoi(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("scenario");
      r.value = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      // stod rejects "nan"/"inf" spellings on some platforms; accept ours.
      if (f[4] == "nan") r.value = kNaN;
      else if (f[4] == "inf") r.value = std::numeric_limits<double>::infinity();
      else if (f[4] == "-inf") r.value = -std::numeric_limits<double>::infinity();
      else throw DataError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
    r.model = f[1];
    r.cell = f[2];
    r.metric = f[3];
    rows.push_back(r);
  }
  return rows;
}

SummaryReport summarize(const std::vector<std::string>& inputs) {
  SummaryReport rep;
  if (inputs.empty()) {
    rep.warnings.push_back("no input files; report is empty");
    return rep;
  }
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) p /= "summary.csv";
    if (!fs::exists(p)) throw DataError("no summary found at " + p.string());
    auto rows = read_summary_csv(p.string());
    if (rows.empty()) rep.warnings.push_back(p.string() + " has no rows");
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  // Identity check on every cell carrying mse, variance and bias.
  std::map<std::tuple<int, std::string, std::string>, std::map<std::string, double>> cells;
  for (const auto& r : rep.rows) cells[{r.scenario, r.model, r.cell}][r.metric] = r.value;
  for (const auto& [key, m] : cells) {
    if (!m.count("mse") || !m.count("variance") || !m.count("bias")) continue;
    const double gap = std::abs(m.at("mse") - (m.at("variance") + m.at("bias") * m.at("bias")));
    if (std::isnan(gap)) continue;
    rep.identity_gap = std::max(rep.identity_gap, gap);
  }
  rep.identity_ok = rep.identity_gap <= 1e-9;
  if (!rep.identity_ok)
    rep.warnings.push_back("MSE = variance + bias^2 violated by " + format_double(rep.identity_gap));
  return rep;
}

std::string render_table(const SummaryReport& report) {
  std::size_t wm = 5, wc = 4, wt = 6;
  for (const auto& r : report.rows) {
    wm = std::max(wm, r.model.size());
    wc = std::max(wc, r.cell.size());
    wt = std::max(wt, r.metric.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(9) << "scenario" << "  " << std::setw(static_cast<int>(wm)) << "model" << "  "
      << std::setw(static_cast<int>(wc)) << "cell" << "  " << std::setw(static_cast<int>(wt)) << "metric" << "  value\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(9) << r.scenario << "  " << std::setw(static_cast<int>(wm)) << r.model << "  "
        << std::setw(static_cast<int>(wc)) << r.cell << "  " << std::setw(static_cast<int>(wt)) << r.metric << "  "
        << format_double(r.value) << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace ssf::bench
