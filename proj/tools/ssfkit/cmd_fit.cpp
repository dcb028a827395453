#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "fitting.hpp"
#include "ssf/error.hpp"
#include "ssf/model_io.hpp"

namespace ssfcli {

namespace {

struct FitOptions {
  CommonFlags common;
  std::string data;
  std::string model = "dnn";
  std::string formula = ".";
  std::string feature;
  std::string hidden = "32,32";
  std::string activation = "relu";
  double lr = 0.01;
  int epochs = 150;
  int batch = 50;
  std::string optimizer = "adam";
  double dropout = 0.0;
  double l2 = 0.0;
  double l1 = 0.0;
  std::string embed;
  std::string wiring = "concat";
  int early_stop = 0;
  int knots = 20;
  double penalty = 0.0;
  int folds = 5;
  std::map<std::string, CLI::Option*> given;

  bool set(const std::string& flag) const { return given.at(flag)->count() > 0; }
};

std::string fit_config_json(const RunConfig& rc, const ssf::bench::ScenarioConfig& cfg) {
  auto j = nlohmann::json::parse(ssf::bench::config_to_json(cfg));
  j["model"] = rc.model;
  j["formula"] = rc.formula;
  j["feature"] = rc.feature;
  j["embed"] = rc.embed;
  return j.dump();
}

void run(const FitOptions& o) {
  RunConfig rc = load_run_config(o.common.config);
  auto cfg = rc.scenario(1);
  apply_common(o.common, cfg);
  if (o.set("--model")) rc.model = o.model;
  if (o.set("--formula")) rc.formula = o.formula;
  if (o.set("--feature")) rc.feature = o.feature;
  if (o.set("--embed")) rc.embed = o.embed;
  if (o.set("--hidden")) cfg.arch.hidden = parse_int_list(o.hidden, "--hidden");
  if (o.set("--activation")) cfg.arch.activation = ssf::net::activation_from_string(o.activation);
  if (o.set("--dropout")) cfg.arch.dropout_rate = o.dropout;
  if (o.set("--l2")) cfg.arch.l2 = o.l2;
  if (o.set("--l1")) cfg.arch.l1 = o.l1;
  if (o.set("--wiring")) cfg.wiring = ssf::net::wiring_from_string(o.wiring);
  if (o.set("--lr")) cfg.train.learning_rate = o.lr;
  if (o.set("--epochs")) cfg.train.epochs = o.epochs;
  if (o.set("--batch")) cfg.train.batch_strata = o.batch;
  if (o.set("--optimizer")) cfg.train.optimizer = ssf::net::optimizer_from_string(o.optimizer);
  if (o.set("--early-stop")) {
    if (o.early_stop > 0)
      cfg.train.early_stop_patience = o.early_stop;
    else
      cfg.train.early_stop_patience.reset();
  }
  if (o.set("--knots")) cfg.spline.interior_knots = o.knots;
  if (o.set("--penalty")) {
    if (o.penalty > 0.0)
      cfg.spline.fixed_penalty = o.penalty;
    else
      cfg.spline.fixed_penalty.reset();
  }
  if (o.set("--folds")) cfg.spline.folds = o.folds;
  if (rc.model != "dnn" && rc.model != "glm" && rc.model != "spline")
    throw ssf::ConfigError("--model must be dnn, glm or spline, got '" + rc.model + "'");
  cfg.train.validate();
  cfg.spline.validate();

  const auto data = load_dataset(o.data);
  const auto& names = data.feature_names;
  const auto fit_config = fit_config_json(rc, cfg);
  ensure_dir(o.common.out);
  const std::string dir = o.common.out + "/";

  if (rc.model == "dnn") {
    const auto arch = dnn_arch(cfg, data, parse_embed(rc.embed));
    const auto packed = ssf::pack_strata(data);
    auto result = fit_dnn(arch, cfg.train, packed, cfg.seed);
    for (const auto& w : result.trace.warnings) std::cerr << "warning: " << w << "\n";
    std::ostringstream trace;
    trace << "epoch,train_nll,validation_nll\n";
    for (std::size_t e = 0; e < result.trace.train_nll.size(); ++e) {
      trace << e + 1 << ',' << ssf::format_double(result.trace.train_nll[e]) << ',';
      if (e < result.trace.validation_nll.size()) trace << ssf::format_double(result.trace.validation_nll[e]);
      trace << '\n';
    }
    write_text(dir + "trace.csv", trace.str());
    ssf::write_model_file(dir + "model.json", result.net, names, fit_config);
    std::cout << "dnn: " << result.trace.epochs_run() << " epochs, final train NLL "
              << ssf::format_double(result.trace.train_nll.empty() ? 0.0 : result.trace.train_nll.back())
              << ", " << result.net.parameter_count() << " parameters\n";
  } else if (rc.model == "glm") {
    const auto formula = ssf::glm::FormulaSpec::parse(rc.formula, names);
    auto fit = ssf::glm::fit_clogit_glm(data, formula);
    std::ostringstream trace;
    trace << "metric,value\n"
          << "converged," << (fit.converged ? 1 : 0) << '\n'
          << "iterations," << fit.n_iterations << '\n'
          << "loglik," << ssf::format_double(fit.loglik) << '\n';
    write_text(dir + "trace.csv", trace.str());
    const ssf::glm::GlmModel model(names.size(), fit);
    ssf::write_model_file(dir + "model.json", model, names, fit_config);
    if (!fit.converged)
      throw ExitStatus(kConvergence, "Newton iterations stopped after " + std::to_string(fit.n_iterations) +
                                         " steps without meeting the gradient tolerance");
    std::ostringstream wald;
    wald << "term,estimate,se,z,p_value,ci_low,ci_high\n";
    for (const auto& r : ssf::glm::wald_inference(fit))
      wald << r.term << ',' << ssf::format_double(r.estimate) << ',' << ssf::format_double(r.se) << ','
           << ssf::format_double(r.z) << ',' << ssf::format_double(r.p_value) << ',' << ssf::format_double(r.ci_low)
           << ',' << ssf::format_double(r.ci_high) << '\n';
    write_text(dir + "wald.csv", wald.str());
    std::cout << "glm: " << fit.term_names.size() << " terms, loglik " << ssf::format_double(fit.loglik) << " after "
              << fit.n_iterations << " iterations\n";
  } else {
    const std::size_t feature = rc.feature.empty() ? 0 : data.feature_index(rc.feature);
    auto fit = fit_spline(data, feature, cfg.spline, cfg.seed);
    std::ostringstream trace;
    trace << "metric,value\n"
          << "penalty," << ssf::format_double(fit.penalty) << '\n'
          << "loglik," << ssf::format_double(fit.loglik) << '\n'
          << "n_basis," << fit.n_basis() << '\n';
    write_text(dir + "trace.csv", trace.str());
    if (!fit.cv_nll.empty()) {
      std::ostringstream cv;
      cv << "penalty,cv_nll\n";
      for (std::size_t k = 0; k < fit.cv_nll.size(); ++k)
        cv << ssf::format_double(cfg.spline.penalty_grid[k]) << ',' << ssf::format_double(fit.cv_nll[k]) << '\n';
      write_text(dir + "cv.csv", cv.str());
    }
    const ssf::glm::SplineModel model(names.size(), fit);
    ssf::write_model_file(dir + "model.json", model, names, fit_config);
    std::cout << "spline on " << names[feature] << ": penalty " << ssf::format_double(fit.penalty) << ", loglik "
              << ssf::format_double(fit.loglik) << "\n";
  }
}

}  // namespace

void add_fit(CLI::App& app) {
  auto o = std::make_shared<FitOptions>();
  auto* sub = app.add_subcommand("fit", "Fit a DNN, conditional-logit GLM or penalized spline to a dataset");
  auto& g = o->given;
  sub->add_option("--data", o->data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  g["--model"] = sub->add_option("--model", o->model, "dnn, glm or spline");
  g["--formula"] = sub->add_option("--formula", o->formula, "GLM terms, e.g. \"x1 + x2 + x1:x2\"; \".\" = all mains");
  g["--feature"] = sub->add_option("--feature", o->feature, "Spline feature (first feature when empty)");
  g["--hidden"] = sub->add_option("--hidden", o->hidden, "Hidden widths, comma separated (empty = linear)");
  g["--activation"] = sub->add_option("--activation", o->activation, "relu, selu or tanh");
  g["--lr"] = sub->add_option("--lr", o->lr, "Learning rate");
  g["--epochs"] = sub->add_option("--epochs", o->epochs, "Training epochs");
  g["--batch"] = sub->add_option("--batch", o->batch, "Strata per mini-batch");
  g["--optimizer"] = sub->add_option("--optimizer", o->optimizer, "adam or sgd");
  g["--dropout"] = sub->add_option("--dropout", o->dropout, "Dropout rate on hidden layers");
  g["--l2"] = sub->add_option("--l2", o->l2, "L2 penalty on weights");
  g["--l1"] = sub->add_option("--l1", o->l1, "L1 penalty on weights");
  g["--embed"] = sub->add_option("--embed", o->embed, "Embedding <individual|opponent>:<dim> (empty = none)");
  g["--wiring"] = sub->add_option("--wiring", o->wiring, "Embedding wiring: concat or modulation");
  g["--early-stop"] = sub->add_option("--early-stop", o->early_stop, "Early-stopping patience in epochs (0 = off)");
  g["--knots"] = sub->add_option("--knots", o->knots, "Spline interior knots");
  g["--penalty"] = sub->add_option("--penalty", o->penalty, "Fixed spline penalty (0 = cross-validate)");
  g["--folds"] = sub->add_option("--folds", o->folds, "Spline cross-validation folds");
  o->common.add(*sub, true, true, false);
  sub->callback([o] { run(*o); });
}

}  // namespace ssfcli
