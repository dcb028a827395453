#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "ssf/bench/scenarios.hpp"
#include "ssf/error.hpp"
#include "ssf/rng.hpp"
#include "ssf/sim/selection.hpp"
#include "ssf/sim/social.hpp"

namespace ssfcli {

namespace {

struct SimulateOptions {
  CommonFlags common;
  int scenario = 1;
  double beta = 1.0;
  std::string truth = "hump";
  int strata = 0;
  int controls = 0;
  int groups = 0;
  CLI::Option* strata_opt = nullptr;
  CLI::Option* controls_opt = nullptr;
  CLI::Option* groups_opt = nullptr;
};

std::vector<double> spaced_effects(int n) {
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int g = 0; g < n; ++g) e[static_cast<std::size_t>(g)] = n == 1 ? 0.0 : -2.0 + 4.0 * g / (n - 1);
  return e;
}

void run(const SimulateOptions& o) {
  auto rc = load_run_config(o.common.config);
  auto cfg = rc.scenario(o.scenario);
  apply_common(o.common, cfg);
  if (o.strata_opt->count() > 0) cfg.n_strata = o.strata;
  if (o.controls_opt->count() > 0) cfg.n_controls = o.controls;
  if (o.groups_opt->count() > 0) {
    if (o.scenario == 4) {
      cfg.n_groups = o.groups;
    } else if (o.scenario == 5) {
      if (o.groups != cfg.social.n_groups) cfg.social.group_distance_effect = spaced_effects(o.groups);
      cfg.social.n_groups = o.groups;
    } else {
      throw ssf::ConfigError("--groups applies to scenarios 4 and 5 only");
    }
  }
  if (o.scenario == 5 && o.strata_opt->count() > 0 && o.strata > 0) {
    const int ids = cfg.social.n_individuals();
    if (ids > 0) cfg.social.n_steps = (o.strata + ids - 1) / ids;
  }
  cfg.social.n_controls = cfg.n_controls;
  try {
    cfg.validate();
  } catch (const ssf::ConfigError& e) {
    throw ssf::ConfigError(std::string("invalid simulation settings: ") + e.what());
  }

  const auto data_seed = ssf::derive_seed(cfg.seed, {1});
  ssf::StrataDataset data;
  std::string truth;
  if (o.scenario == 5) {
    auto social = ssf::sim::simulate_social(cfg.social, data_seed);
    data = std::move(social.data);
    truth = ssf::sim::social_truth_json(cfg.social, data_seed);
  } else {
    ssf::sim::SelectionSpec spec;
    switch (o.scenario) {
      case 1:
        spec.betas = {o.beta};
        break;
      case 2:
        spec.betas = {1.0};
        spec.transforms = {{0, ssf::sim::transform_from_string(o.truth)}};
        break;
      case 3:
        spec = ssf::bench::scenario3_spec(cfg);
        break;
      default:
        spec = ssf::bench::scenario4_spec(cfg, ssf::derive_seed(cfg.seed, {5}));
        break;
    }
    spec.n_strata = cfg.n_strata;
    spec.n_controls = cfg.n_controls;
    data = ssf::sim::simulate_selection(spec, data_seed);
    truth = ssf::sim::selection_truth_json(spec, data_seed);
  }

  ensure_dir(o.common.out);
  const std::string dir = o.common.out + "/";
  ssf::write_csv_file(dir + "data.csv", data);
  write_text(dir + "truth.json", truth + "\n");
  std::cout << "wrote " << dir << "data.csv (" << data.n_strata() << " strata, " << data.n_records()
            << " records) and " << dir << "truth.json\n";
}

}  // namespace

void add_simulate(CLI::App& app) {
  auto o = std::make_shared<SimulateOptions>();
  auto* sub = app.add_subcommand("simulate", "Simulate a case/control dataset for one scenario");
  sub->add_option("--scenario", o->scenario, "Scenario 1-5")->check(CLI::Range(1, 5));
  sub->add_option("--beta", o->beta, "Scenario 1: true slope of x1");
  sub->add_option("--truth", o->truth, "Scenario 2: hump, wiggle, zero or identity");
  o->strata_opt = sub->add_option("--strata", o->strata,
                                  "Number of strata (0 = scenario setting; scenario 5 sets steps per individual)");
  o->controls_opt = sub->add_option("--controls", o->controls, "Controls per stratum (0 = scenario setting)");
  o->groups_opt = sub->add_option("--groups", o->groups,
                                  "Scenarios 4 and 5: number of groups (0 = scenario setting)");
  o->common.add(*sub, true);
  sub->callback([o] { run(*o); });
}

}  // namespace ssfcli
