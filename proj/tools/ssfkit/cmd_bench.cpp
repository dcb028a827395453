#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "ssf/bench/scenarios.hpp"
#include "ssf/error.hpp"
#include "ssf/version.hpp"

namespace ssfcli {

namespace {

using nlohmann::json;

struct BenchOptions {
  CommonFlags common;
  std::string scenario = "all";
  int reps = 0;
  int strata = 0;
  int bootstrap = -1;
  int epochs = 0;
  std::string hidden;
  bool no_artifacts = false;
  CLI::Option* scenario_opt = nullptr;
  CLI::Option* hidden_opt = nullptr;
};

std::vector<int> scenarios_of(const BenchOptions& o, const RunConfig& rc) {
  std::string which = o.scenario;
  if (o.scenario_opt->count() == 0 && rc.scenario_overrides.contains("scenario")) {
    const auto& v = rc.scenario_overrides["scenario"];
    if (!v.is_number_integer()) throw ssf::ConfigError(o.common.config + ": 'scenario' must be an integer");
    which = std::to_string(v.get<int>());
  }
  if (which == "all") return {1, 2, 3, 4, 5};
  std::vector<int> out;
  for (int k : parse_int_list(which, "--scenario")) {
    if (k < 1 || k > 5) throw ssf::ConfigError("--scenario: must be 1-5 or all, got " + std::to_string(k));
    out.push_back(k);
  }
  if (out.empty()) throw ssf::ConfigError("--scenario: no scenario given");
  return out;
}

json status_json(const ssf::bench::RunStatus& s) {
  return {{"attempted", s.attempted},
          {"completed", s.completed},
          {"completion_rate", s.completion_rate()},
          {"failures", s.failures}};
}

void run(const BenchOptions& o) {
  const auto rc = load_run_config(o.common.config);
  const auto ks = scenarios_of(o, rc);
  std::vector<ssf::bench::ScenarioConfig> cfgs;
  for (int k : ks) {
    auto cfg = rc.scenario(k);
    cfg.scenario = k;
    apply_common(o.common, cfg);
    if (o.reps > 0) cfg.n_repetitions = o.reps;
    if (o.strata > 0) cfg.n_strata = o.strata;
    if (o.bootstrap >= 0) cfg.bootstrap_replicates = o.bootstrap;
    if (o.epochs > 0) cfg.train.epochs = o.epochs;
    if (o.hidden_opt->count() > 0) cfg.arch.hidden = parse_int_list(o.hidden, "--hidden");
    if (o.no_artifacts) cfg.write_artifacts = false;
    try {
      cfg.validate();
    } catch (const ssf::ConfigError& e) {
      throw ssf::ConfigError("scenario " + std::to_string(k) + ": " + e.what());
    }
    cfgs.push_back(cfg);
  }

  ensure_dir(o.common.out);
  json manifest;
  manifest["build_id"] = ssf::build_id();
  manifest["seed"] = cfgs.front().seed;
  manifest["scenarios"] = json::array();
  std::vector<ssf::bench::SummaryRow> all;
  bool shortfall = false;

  for (const auto& cfg : cfgs) {
    const std::string dir = o.common.out + "/scenario" + std::to_string(cfg.scenario);
    ensure_dir(dir);
    std::cerr << "scenario " << cfg.scenario << ": " << cfg.n_repetitions << " repetition(s)\n";
    ssf::bench::RunStatus status;
    std::vector<ssf::bench::SummaryRow> rows;
    switch (cfg.scenario) {
      case 1: {
        const auto r = ssf::bench::run_scenario1(cfg, dir);
        status = r.status;
        rows = ssf::bench::summary_rows(r);
        break;
      }
      case 2: {
        const auto r = ssf::bench::run_scenario2(cfg, dir);
        status = r.status;
        rows = ssf::bench::summary_rows(r);
        break;
      }
      case 3: {
        const auto r = ssf::bench::run_scenario3(cfg, dir);
        status = r.status;
        rows = ssf::bench::summary_rows(r);
        break;
      }
      case 4: {
        const auto r = ssf::bench::run_scenario4(cfg, dir);
        status = r.status;
        rows = ssf::bench::summary_rows(r);
        break;
      }
      default: {
        const auto r = ssf::bench::run_scenario5(cfg, dir);
        status = r.status;
        rows = ssf::bench::summary_rows(r);
        break;
      }
    }
    ssf::bench::write_summary_csv(dir + "/summary.csv", rows);
    all.insert(all.end(), rows.begin(), rows.end());

    // Results do not depend on the thread count, so it is not recorded.
    auto recorded = cfg;
    recorded.threads = 0;
    manifest["scenarios"].push_back({{"scenario", cfg.scenario},
                                     {"config", json::parse(ssf::bench::config_to_json(recorded))},
                                     {"status", status_json(status)}});
    const double rate = status.completion_rate();
    std::cerr << "scenario " << cfg.scenario << ": " << status.completed << "/" << status.attempted
              << " completed\n";
    for (const auto& f : status.failures) std::cerr << "  failed: " << f << "\n";
    if (rate < 0.9) shortfall = true;
  }

  ssf::bench::write_summary_csv(o.common.out + "/summary.csv", all);
  write_text(o.common.out + "/manifest.json", manifest.dump(1) + "\n");
  std::cout << "wrote " << o.common.out << "/summary.csv and " << o.common.out << "/manifest.json\n";
  if (shortfall) throw ExitStatus(kBenchShortfall, "fewer than 90% of repetitions completed; see manifest.json");
}

struct SummarizeOptions {
  std::vector<std::string> inputs;
  std::string out;
};

void run_summarize(const SummarizeOptions& o) {
  const auto report = ssf::bench::summarize(o.inputs);
  std::cout << ssf::bench::render_table(report);
  if (!o.out.empty()) ssf::bench::write_summary_csv(o.out, report.rows);
  if (!report.identity_ok)
    throw ExitStatus(kValidation, "MSE = variance + bias^2 does not hold in every cell (gap " +
                                      ssf::format_double(report.identity_gap) + ")");
}

}  // namespace

void add_bench(CLI::App& app) {
  auto o = std::make_shared<BenchOptions>();
  auto* sub = app.add_subcommand("bench", "Run simulation scenarios and write a results directory");
  o->scenario_opt = sub->add_option("--scenario", o->scenario, "Scenarios: 1-5, a comma list, or all");
  sub->add_option("--reps", o->reps, "Repetitions per cell (0 = scenario setting)");
  sub->add_option("--strata", o->strata, "Strata per dataset (0 = scenario setting)");
  sub->add_option("--bootstrap", o->bootstrap, "Scenario 1 bootstrap replicates (-1 = scenario setting, 0 = none)");
  sub->add_option("--epochs", o->epochs, "DNN training epochs (0 = scenario setting)");
  o->hidden_opt = sub->add_option("--hidden", o->hidden, "DNN hidden widths, comma separated (empty = scenario setting)");
  sub->add_flag("--no-artifacts", o->no_artifacts, "Skip per-repetition data and model files");
  o->common.add(*sub, true);
  sub->callback([o] { run(*o); });
}

void add_summarize(CLI::App& app) {
  auto o = std::make_shared<SummarizeOptions>();
  auto* sub = app.add_subcommand("summarize", "Merge summary.csv files and check the MSE decomposition");
  sub->add_option("inputs", o->inputs, "summary.csv files or bench directories");
  sub->add_option("-o,--out", o->out, "Write the merged rows to this CSV");
  sub->callback([o] { run_summarize(*o); });
}

void add_config(CLI::App& app) {
  auto* cfg = app.add_subcommand("config", "Inspect run configuration");
  cfg->require_subcommand(1);
  auto scenario = std::make_shared<int>(1);
  auto* show = cfg->add_subcommand("show-defaults", "Print every default as a run config document");
  show->add_option("--scenario", *scenario, "Scenario 1-5")->check(CLI::Range(1, 5));
  show->callback([scenario] { std::cout << default_run_config(*scenario); });
}

}  // namespace ssfcli
