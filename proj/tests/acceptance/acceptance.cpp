// Acceptance suite: one PASS/FAIL line per criterion. Run with criterion
// numbers as arguments to select a subset (default: all ten).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ssf/bench/scenarios.hpp"
#include "ssf/dataset.hpp"
#include "ssf/glm/clogit.hpp"
#include "ssf/model.hpp"
#include "ssf/net/train.hpp"
#include "ssf/packed.hpp"
#include "ssf/rng.hpp"
#include "ssf/runtime.hpp"
#include "ssf/sim/selection.hpp"
#include "ssf/sim/social.hpp"

namespace fs = std::filesystem;
using namespace ssf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// Scenario-1 settings shared by criteria 1-3. The network is smaller and
// trained for fewer epochs than the scenario defaults so that the 21 fits per
// repetition (full data plus 20 bootstrap refits) fit the time budget.
bench::ScenarioConfig scenario1(std::vector<double> grid, int reps, int bootstrap, std::uint64_t seed) {
  auto c = bench::ScenarioConfig::defaults(1);
  c.arch.hidden = {16, 16};
  c.train.epochs = 30;
  c.train.learning_rate = 0.01;
  c.true_effect_grid = std::move(grid);
  c.n_repetitions = reps;
  c.n_strata = 2000;
  c.n_controls = 9;
  c.bootstrap_replicates = bootstrap;
  c.seed = seed;
  c.write_artifacts = false;
  return c;
}

const bench::CalibrationSummary& summary_for(const bench::Scenario1Result& r, const std::string& model,
                                             double slope) {
  for (const auto& s : r.summaries)
    if (s.model == model && s.true_slope == slope) return s;
  throw std::runtime_error("no summary for " + model + " at slope " + fmt(slope));
}

// 1. Calibration under the null.
Outcome calibration() {
  const auto r = bench::run_scenario1(scenario1({0.0}, 400, 20, 101));
  const auto& g = summary_for(r, "glm", 0.0);
  const auto& d = summary_for(r, "dnn", 0.0);
  Outcome o;
  o.pass = within(g.rejection, 0.02, 0.09) && within(d.rejection, 0.02, 0.09);
  o.detail = "rejection at alpha 0.05 over 400 null reps: glm " + fmt(g.rejection) + " (n=" +
             std::to_string(g.n_completed) + "), dnn " + fmt(d.rejection) + " (n=" + std::to_string(d.n_completed) +
             "); band [0.02, 0.09]";
  return o;
}

// 2. Coverage at beta = -1 and 1.
Outcome coverage() {
  const auto r = bench::run_scenario1(scenario1({-1.0, 1.0}, 200, 20, 102));
  Outcome o{true, "95% CI coverage over 200 reps per slope:"};
  for (const char* m : {"glm", "dnn"}) {
    for (double b : {-1.0, 1.0}) {
      const auto& s = summary_for(r, m, b);
      o.pass = o.pass && within(s.coverage, 0.88, 0.99);
      o.detail += std::string(" ") + m + "@" + fmt(b, 0) + "=" + fmt(s.coverage, 2);
    }
  }
  o.detail += "; band [0.88, 0.99]";
  return o;
}

// 3. Bias of the point estimates across the slope grid.
Outcome unbiasedness() {
  const auto grid = bench::ScenarioConfig::defaults(1).true_effect_grid;
  const auto r = bench::run_scenario1(scenario1(grid, 100, 0, 103));
  double worst_glm = 0.0, worst_dnn = 0.0;
  std::string at_glm, at_dnn;
  for (double b : grid) {
    const double eg = std::abs(summary_for(r, "glm", b).bias);
    const double ed = std::abs(summary_for(r, "dnn", b).bias);
    if (eg >= worst_glm) worst_glm = eg, at_glm = fmt(b, 1);
    if (ed >= worst_dnn) worst_dnn = ed, at_dnn = fmt(b, 1);
  }
  Outcome o;
  o.pass = worst_glm <= 0.1 && worst_dnn <= 0.2;
  o.detail = "max |bias| over 9 slopes x 100 reps: glm " + fmt(worst_glm) + " at " + at_glm + " (limit 0.1), dnn " +
             fmt(worst_dnn) + " at " + at_dnn + " (limit 0.2)";
  return o;
}

// 4. Nonlinear curve recovery.
Outcome nonlinear() {
  auto c = bench::ScenarioConfig::defaults(2);
  c.seed = 104;
  c.write_artifacts = false;
  const auto r = bench::run_scenario2(c);
  std::map<std::string, std::map<std::string, bench::CurveScore>> s;
  for (const auto& sc : r.scores) s[sc.truth][sc.model] = sc;
  Outcome o{true, ""};
  const auto& hd = s.at("hump").at("dnn");
  const auto& hs = s.at("hump").at("spline");
  const double rel_d = hd.mean_mse / hd.truth_variance, rel_s = hs.mean_mse / hs.truth_variance;
  o.pass = rel_d < 0.25 && rel_s < 0.25;
  o.detail = "hump relative MSE dnn " + fmt(rel_d) + ", spline " + fmt(rel_s) + " (limit 0.25);";
  for (const auto& [truth, m] : s) {
    const double ratio = m.at("dnn").mean_mse / m.at("spline").mean_mse;
    o.pass = o.pass && ratio <= 1.5;
    o.detail += " " + truth + " dnn/spline MSE " + fmt(ratio, 2);
  }
  o.detail += " (limit 1.5)";
  return o;
}

// 5. Interaction matrix orderings.
Outcome interactions() {
  auto c = bench::ScenarioConfig::defaults(3);
  c.n_repetitions = 100;
  c.seed = 105;
  c.write_artifacts = false;
  const auto r = bench::run_scenario3(c);
  const double da = r.dnn.mean_mse(), ga = r.glm.mean_mse();
  const double dn = r.dnn.mean_mse_null_interactions(), gn = r.glm.mean_mse_null_interactions();
  const double dt = r.dnn.mean_mse_true_interactions(), gt = r.glm.mean_mse_true_interactions();
  Outcome o;
  const bool a = da < ga, n = gn > dn, t = dt > gt;
  o.pass = a && n && t;
  o.detail = std::string("overall dnn ") + fmt(da) + " < glm " + fmt(ga) + (a ? " ok" : " NO") + "; null glm " +
             fmt(gn) + " > dnn " + fmt(dn) + (n ? " ok" : " NO") + "; true dnn " + fmt(dt) + " > glm " + fmt(gt) +
             (t ? " ok" : " NO") + " (" + std::to_string(r.status.completed) + "/" +
             std::to_string(r.status.attempted) + " reps)";
  return o;
}

// 6. Individual embeddings.
Outcome embeddings4() {
  auto c = bench::ScenarioConfig::defaults(4);
  c.seed = 106;
  c.write_artifacts = false;
  const auto r = bench::run_scenario4(c);
  int good = 0, ari = 0, nulls = 0, cos = 0;
  for (const auto& rep : r.reps) {
    if (!rep.ok) continue;
    const bool a = rep.cluster.ari >= 0.9, n = rep.null_arrows_shortest, k = rep.min_correlated_cosine > 0.7;
    ari += a;
    nulls += n;
    cos += k;
    good += a && n && k;
  }
  Outcome o;
  o.pass = good >= 8;
  o.detail = std::to_string(good) + "/" + std::to_string(r.reps.size()) + " runs meet all three (ARI>=0.9: " +
             std::to_string(ari) + ", null arrows shortest: " + std::to_string(nulls) +
             ", correlated cosine>0.7: " + std::to_string(cos) + "); need >= 8";
  return o;
}

// 7. Opponent embeddings.
Outcome embeddings5() {
  auto c = bench::ScenarioConfig::defaults(5);
  c.seed = 107;
  c.write_artifacts = false;
  const auto r = bench::run_scenario5(c);
  int good = 0, ari = 0, order = 0;
  for (const auto& rep : r.reps) {
    if (!rep.ok) continue;
    const bool a = rep.cluster.ari >= 0.9, k = rep.centroid_order_ok;
    ari += a;
    order += k;
    good += a && k;
  }
  Outcome o;
  o.pass = good >= 8;
  o.detail = std::to_string(good) + "/" + std::to_string(r.reps.size()) + " runs meet both (ARI>=0.9: " +
             std::to_string(ari) + ", centroid order: " + std::to_string(order) + "); need >= 8";
  return o;
}

sim::SelectionSpec one_slope(double beta, int strata) {
  sim::SelectionSpec s;
  s.betas = {beta};
  s.n_strata = strata;
  s.n_controls = 9;
  return s;
}

// 8. Linear network against Newton, Newton against a likelihood grid.
Outcome oracles() {
  const auto grid = bench::ScenarioConfig::defaults(1).true_effect_grid;
  double worst_net = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto data = sim::simulate_selection(one_slope(grid[i % grid.size()], 2000), derive_seed(108, {1, i}));
    const auto p = pack_strata(data);
    const auto g = glm::fit_clogit_glm(p, data.feature_names, glm::FormulaSpec::main_only(1));
    net::ArchSpec a;
    a.n_features = 1;
    a.hidden = {};
    net::TrainConfig t;  // 150 epochs, Adam, learning rate 0.01
    t.seed = derive_seed(108, {2, i});
    const auto r = net::train(net::build_network(a, derive_seed(108, {3, i})), p, t);
    worst_net = std::max(worst_net, std::abs(r.net.params().layers.front().weight(0, 0) - g.coefficients[0]));
  }
  double worst_grid = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto data = sim::simulate_selection(one_slope(grid[(2 * i) % grid.size()], 200), derive_seed(108, {4, i}));
    const auto p = pack_strata(data);
    const auto f = glm::FormulaSpec::main_only(1);
    const auto g = glm::fit_clogit_glm(p, data.feature_names, f);
    const Eigen::MatrixXd design = glm::design_matrix(f, p.x);
    double best = -4.0, best_ll = -1e300;
    for (int k = 0; k <= 8000; ++k) {
      const double b = -4.0 + 0.001 * k;
      const double ll = glm::clogit_loglik(design, p, Eigen::VectorXd::Constant(1, b));
      if (ll > best_ll) best_ll = ll, best = b;
    }
    worst_grid = std::max(worst_grid, std::abs(best - g.coefficients[0]));
  }
  Outcome o;
  o.pass = worst_net <= 0.05 && worst_grid <= 0.002;
  o.detail = "max |linear net - Newton| over 20 datasets " + fmt(worst_net, 4) + " (limit 0.05); max |grid - Newton| "
             "over 10 datasets " + fmt(worst_grid, 4) + " (limit 0.002)";
  return o;
}

// 9. Numerical core.
Outcome numerics() {
  // Gradient check over activations, depths and embedding wirings.
  sim::SocialSpec social;
  social.n_steps = 2;
  const auto sd = sim::simulate_social(social, 109).data;
  const auto sp = pack_strata(sd);
  double worst_grad = 0.0;
  int n_configs = 0;
  for (const auto& h : std::vector<std::vector<int>>{{}, {8}, {8, 8}}) {
    for (auto act : {net::Activation::relu, net::Activation::selu, net::Activation::tanh}) {
      for (int emb = 0; emb < 4; ++emb) {
        net::ArchSpec a;
        a.n_features = 1;
        a.hidden = h;
        a.activation = act;
        const auto wiring = emb % 2 ? net::EmbeddingWiring::concat : net::EmbeddingWiring::modulation;
        if (emb == 1 || emb == 2) a.embeddings = net::EmbeddingSpec{sd.n_individuals, 2, EmbeddingTarget::individual, wiring};
        if (emb == 3) a.embeddings = net::EmbeddingSpec{sd.n_opponents, 2, EmbeddingTarget::opponent, wiring};
        auto n = net::build_network(a, derive_seed(109, {static_cast<std::uint64_t>(n_configs)}));
        for (auto& l : n.params().layers) l.bias.setConstant(0.1);
        for (Eigen::Index s = 0; s < 5; ++s) worst_grad = std::max(worst_grad, net::gradient_check(n, sp, s, 1e-5));
        ++n_configs;
      }
    }
  }

  // Softmax normalization and shift invariance on network scores.
  auto c3 = bench::ScenarioConfig::defaults(3);
  const auto data = sim::simulate_selection(bench::scenario3_spec(c3), 109);
  const auto p = pack_strata(data);
  net::ArchSpec a;
  a.n_features = p.n_features();
  a.hidden = {16, 16};
  const auto n = net::build_network(a, 109);
  double worst_sum = 0.0, worst_shift = 0.0;
  CounterRng rng(109);
  for (double scale : {1.0, 1000.0}) {
    const Eigen::VectorXd scores = n.score(p) * scale;
    const Eigen::VectorXd prob = stratum_softmax(scores, p);
    Eigen::VectorXd shifted = scores;
    for (Eigen::Index s = 0; s < p.n_strata(); ++s) {
      worst_sum = std::max(worst_sum, std::abs(prob.segment(p.start[s], p.size_of(s)).sum() - 1.0));
      shifted.segment(p.start[s], p.size_of(s)).array() += 200.0 * (rng.uniform() - 0.5);
    }
    worst_shift = std::max(worst_shift, std::abs(mean_conditional_nll(shifted, p) - mean_conditional_nll(scores, p)));
  }

  // MSE decomposition in every cell of a small interaction benchmark, both
  // in memory and after a round trip through summary.csv.
  c3.n_repetitions = 5;
  c3.n_strata = 500;
  c3.arch.hidden = {8};
  c3.train.epochs = 10;
  c3.seed = 109;
  c3.write_artifacts = false;
  const auto r = bench::run_scenario3(c3);
  double worst_identity = 0.0;
  int cells = 0;
  for (const auto* m : {&r.glm, &r.dnn}) {
    for (const auto& cell : m->cells) {
      worst_identity = std::max(worst_identity, std::abs(cell.mse - (cell.variance + cell.bias * cell.bias)));
      ++cells;
    }
  }
  const auto dir = fs::temp_directory_path() / "ssfkit_acceptance_numerics";
  fs::create_directories(dir);
  bench::write_summary_csv((dir / "summary.csv").string(), bench::summary_rows(r));
  const auto report = bench::summarize({dir.string()});
  worst_identity = std::max(worst_identity, report.identity_gap);
  fs::remove_all(dir);

  Outcome o;
  o.pass = worst_grad < 1e-5 && worst_sum <= 1e-12 && worst_shift <= 1e-10 && worst_identity <= 1e-9;
  std::ostringstream d;
  d << "gradient check " << worst_grad << " over " << n_configs << " architectures (limit 1e-5); softmax sum error "
    << worst_sum << " (limit 1e-12); shift NLL change " << worst_shift << " (limit 1e-10); MSE identity gap "
    << worst_identity << " over " << cells << " cells (limit 1e-9)";
  o.detail = d.str();
  return o;
}

// 10. Byte-level reproducibility of the command-line tool.
int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome reproducibility() {
#ifndef SSFKIT_CLI
  return {false, "ssfkit executable was not built (SSFKIT_BUILD_TOOLS=OFF)"};
#else
  const std::string exe = SSFKIT_CLI;
  if (!fs::exists(exe)) return {false, "ssfkit executable not found at " + exe};
  const auto root = fs::temp_directory_path() / "ssfkit_acceptance_repro";
  fs::remove_all(root);
  std::vector<std::string> failed_commands;
  auto pipeline = [&](const std::string& name, int threads) {
    const std::string d = (root / name).string();
    const std::string t = " --threads " + std::to_string(threads);
    const std::vector<std::string> cmds{
        "simulate --scenario 4 --strata 600 --seed 5 -o " + d + "/sim",
        "simulate --scenario 5 --strata 300 --seed 5 -o " + d + "/sim5",
        "fit --data " + d + "/sim/data.csv --model dnn --embed individual:2 --epochs 5 --seed 5 -o " + d + "/dnn",
        "fit --data " + d + "/sim/data.csv --model glm -o " + d + "/glm",
        "fit --data " + d + "/sim/data.csv --model spline --feature x2 --seed 5 -o " + d + "/spline",
        "explain ace --model " + d + "/dnn/model.json --data " + d + "/sim/data.csv --features x1,x16 --bootstrap 3" +
            " --seed 5" + t + " -o " + d + "/ace",
        "explain importance --model " + d + "/dnn/model.json --data " + d + "/sim/data.csv --permutations 2" +
            " --seed 5" + t + " -o " + d + "/importance",
        "explain interactions --model " + d + "/glm/model.json --data " + d + "/sim/data.csv --permutations 1" +
            " --seed 5" + t + " -o " + d + "/interactions",
        "explain ale --model " + d + "/spline/model.json --data " + d + "/sim/data.csv --feature x2 -o " + d + "/ale",
        "explain biplot --model " + d + "/dnn/model.json --data " + d + "/sim/data.csv --truth " + d +
            "/sim/truth.json -o " + d + "/biplot",
        "bench --scenario all --reps 2 --strata 300 --epochs 5 --hidden 8 --bootstrap 2 --seed 5" + t + " -o " + d +
            "/bench"};
    for (const auto& c : cmds)
      if (run(exe + " " + c) != 0) failed_commands.push_back(name + ": " + c);
    return tree(root / name);
  };
  const auto a = pipeline("a", 1);
  const auto b = pipeline("b", 1);
  const auto c = pipeline("c", 4);
  fs::remove_all(root);
  if (!failed_commands.empty()) return {false, "command failed: " + failed_commands.front()};
  int differ_runs = 0, differ_threads = 0;
  for (const auto& [path, bytes] : a) {
    if (!b.count(path) || b.at(path) != bytes) ++differ_runs;
    if (!c.count(path) || c.at(path) != bytes) ++differ_threads;
  }
  Outcome o;
  o.pass = differ_runs == 0 && differ_threads == 0 && a.size() == b.size() && a.size() == c.size() && !a.empty();
  o.detail = std::to_string(a.size()) + " CSV/JSON files from 11 commands; differing across runs: " +
             std::to_string(differ_runs) + ", across 1 vs 4 threads: " + std::to_string(differ_threads);
  return o;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"calibration", calibration},   {"coverage", coverage},       {"unbiasedness", unbiasedness},
      {"nonlinear recovery", nonlinear}, {"interaction matrix", interactions}, {"individual embeddings", embeddings4},
      {"opponent embeddings", embeddings5}, {"oracle equivalence", oracles}, {"numerical core", numerics},
      {"reproducibility", reproducibility}};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "usage: " << argv[0] << " [criterion 1-" << criteria.size() << "]...\n";
      return 2;
    }
    selected.push_back(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);

  int failed = 0;
  for (int k : selected) {
    const auto& [name, fn] = criteria[static_cast<std::size_t>(k - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << k << ". " << name << ": " << o.detail << "  [" << fmt(secs, 0)
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
