#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "fitting.hpp"
#include "ssf/error.hpp"
#include "ssf/model_io.hpp"
#include "ssf/parallel.hpp"
#include "ssf/xai/xai.hpp"
#include "svg.hpp"

namespace ssfcli {

namespace {

using ssf::format_double;

struct ExplainOptions {
  CommonFlags common;
  std::string model;
  std::string data;
  bool svg = false;
  // ace
  int bootstrap = 20;
  std::string features;
  double epsilon = 0.0;
  // importance / interactions
  int permutations = 10;
  // ale
  std::string feature;
  int bins = 20;
  // biplot
  std::string truth;
};

struct Loaded {
  ssf::ModelDocument doc;
  ssf::StrataDataset data;
  ssf::PackedStrata packed;
};

Loaded load(const ExplainOptions& o) {
  Loaded l;
  l.doc = ssf::read_model_file(o.model);
  l.data = load_dataset(o.data);
  if (l.doc.feature_names != l.data.feature_names) {
    std::ostringstream msg;
    msg << "model features [";
    for (std::size_t i = 0; i < l.doc.feature_names.size(); ++i) msg << (i ? "," : "") << l.doc.feature_names[i];
    msg << "] do not match dataset features [";
    for (std::size_t i = 0; i < l.data.feature_names.size(); ++i) msg << (i ? "," : "") << l.data.feature_names[i];
    msg << "]";
    throw ssf::CapabilityError(msg.str());
  }
  l.packed = ssf::pack_strata(l.data);
  return l;
}

std::vector<std::size_t> pick_features(const ssf::StrataDataset& d, const std::string& list) {
  std::vector<std::size_t> out;
  if (list.empty()) {
    for (std::size_t j = 0; j < d.n_features(); ++j) out.push_back(j);
    return out;
  }
  for (const auto& name : split(list, ',')) out.push_back(d.feature_index(name));
  return out;
}

std::string out_path(const ExplainOptions& o, const std::string& file) {
  ensure_dir(o.common.out);
  return o.common.out + "/" + file;
}

unsigned threads_of(const ExplainOptions& o) {
  return o.common.threads == 0 ? ssf::default_threads() : o.common.threads;
}

void run_ace(const ExplainOptions& o) {
  const auto l = load(o);
  const auto features = pick_features(l.data, o.features);
  const std::optional<double> eps = o.epsilon > 0.0 ? std::optional<double>(o.epsilon) : std::nullopt;
  std::vector<ssf::xai::EffectReport> reports;
  if (o.bootstrap == 0) {
    for (auto f : features) {
      ssf::xai::EffectReport r;
      r.feature = l.data.feature_names[f];
      r.estimate = ssf::xai::average_conditional_effect(*l.doc.model, l.packed, f, eps);
      reports.push_back(r);
    }
  } else {
    const auto rc = run_config_from_json(l.doc.fit_config, o.model + " fit_config");
    const auto cfg = rc.scenario(1);
    ssf::xai::BootstrapOptions b;
    b.replicates = o.bootstrap;
    b.seed = o.common.seed;
    b.threads = threads_of(o);
    b.epsilon = eps;
    reports = ssf::xai::bootstrap_inference(refitter(*l.doc.model, cfg.train, l.data.feature_names), l.packed,
                                            features, l.data.feature_names, b, l.doc.model.get());
  }

  std::ostringstream csv;
  csv << "feature,estimate,se,ci_low,ci_high,p_value,n_bootstrap,n_failed,degenerate_se\n";
  std::vector<svg::Bar> bars;
  for (const auto& r : reports) {
    csv << r.feature << ',' << format_double(r.estimate);
    if (o.bootstrap == 0) {
      csv << ",,,,,0,0,\n";
      bars.push_back({r.feature, r.estimate, std::nullopt, std::nullopt});
    } else {
      csv << ',' << format_double(r.se) << ',' << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ','
          << format_double(r.p_value) << ',' << r.n_bootstrap << ',' << r.n_failed << ','
          << (r.degenerate_se ? 1 : 0) << '\n';
      bars.push_back({r.feature, r.estimate, r.ci_low, r.ci_high});
    }
    if (r.n_failed > 0) std::cerr << "warning: " << r.feature << ": " << r.n_failed << " bootstrap replicate(s) failed\n";
  }
  write_text(out_path(o, "ace.csv"), csv.str());
  if (o.svg) write_text(out_path(o, "ace.svg"), svg::bar_chart("Average conditional effects", "effect", bars));
  std::cout << "wrote " << out_path(o, "ace.csv") << "\n";
}

void run_importance(const ExplainOptions& o, bool pairs) {
  const auto l = load(o);
  const auto t = ssf::xai::importance_table(*l.doc.model, l.packed, l.data.feature_names, o.permutations,
                                            o.common.seed, pairs, threads_of(o));
  std::ostringstream csv;
  std::vector<svg::Bar> bars;
  if (!pairs) {
    csv << "feature,importance,raw\n";
    for (std::size_t j = 0; j < t.features.size(); ++j) {
      csv << t.features[j] << ',' << format_double(t.single(j)) << ',' << format_double(t.singles[j]) << '\n';
      bars.push_back({t.features[j], t.single(j), std::nullopt, std::nullopt});
    }
  } else {
    csv << "feature_i,feature_j,importance,raw,cross_partial\n";
    for (const auto& [key, raw] : t.pairs) {
      const auto [i, j] = key;
      const double cp = ssf::xai::cross_partial_effect(*l.doc.model, l.packed, i, j);
      csv << t.features[i] << ',' << t.features[j] << ',' << format_double(t.pair(i, j)) << ','
          << format_double(raw) << ',' << format_double(cp) << '\n';
      bars.push_back({t.features[i] + ":" + t.features[j], t.pair(i, j), std::nullopt, std::nullopt});
    }
  }
  const std::string stem = pairs ? "interactions" : "importance";
  write_text(out_path(o, stem + ".csv"), csv.str());
  if (o.svg)
    write_text(out_path(o, stem + ".svg"),
               svg::bar_chart(pairs ? "Interaction importance" : "Permutation importance", "NLL increase", bars));
  std::cout << "wrote " << out_path(o, stem + ".csv") << "\n";
}

void run_ale(const ExplainOptions& o) {
  const auto l = load(o);
  const std::size_t f = o.feature.empty() ? 0 : l.data.feature_index(o.feature);
  const auto curve = ssf::xai::ale_curve(*l.doc.model, l.packed, f, o.bins);
  const auto mids = curve.bin_midpoints();
  std::ostringstream csv;
  csv << "bin_mid,effect,count\n";
  for (std::size_t b = 0; b < mids.size(); ++b)
    csv << format_double(mids[b]) << ',' << format_double(curve.centered_effect[b]) << ',' << curve.counts[b] << '\n';
  write_text(out_path(o, "ale.csv"), csv.str());
  if (o.svg)
    write_text(out_path(o, "ale.svg"), svg::line_chart("Accumulated local effect of " + l.data.feature_names[f],
                                                       l.data.feature_names[f], "centered effect", mids,
                                                       curve.centered_effect));
  std::cout << "wrote " << out_path(o, "ale.csv") << "\n";
}

std::map<int, int> read_groups(const std::string& path) {
  std::map<int, int> out;
  if (path.empty()) return out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ssf::ConfigError(path + ": not valid JSON: " + e.what());
  }
  for (const char* key : {"individual_group", "opponent_group"}) {
    if (j.contains(key) && j[key].is_array() && !j[key].empty()) {
      const auto g = j[key].get<std::vector<int>>();
      for (std::size_t i = 0; i < g.size(); ++i) out[static_cast<int>(i)] = g[i];
      return out;
    }
  }
  throw ssf::ConfigError(path + ": no individual_group or opponent_group array to label ids with");
}

void run_biplot(const ExplainOptions& o) {
  const auto l = load(o);
  if (!l.doc.model->embedding_target())
    throw ssf::CapabilityError("biplot needs a model with an embedding table; " + l.doc.model->kind() +
                               " model in " + o.model + " has none (fit with --embed individual:2)");
  const auto groups = read_groups(o.truth);
  const auto features = pick_features(l.data, o.features);
  const std::optional<double> eps = o.epsilon > 0.0 ? std::optional<double>(o.epsilon) : std::nullopt;
  const auto b = ssf::xai::embedding_biplot(*l.doc.model, l.packed, features, l.data.feature_names, eps);
  if (b.rank_deficient) std::cerr << "warning: embedding positions are rank deficient; arrows are not identified\n";

  const auto dim = b.positions.cols();
  std::ostringstream pos, arr;
  pos << "id";
  arr << "feature";
  for (Eigen::Index k = 0; k < dim; ++k) {
    pos << ",dim" << k + 1;
    arr << (k == 0 ? ",u" : k == 1 ? ",v" : ",w" + std::to_string(k + 1));
  }
  pos << ",group\n";
  arr << '\n';
  std::vector<svg::Point> points;
  for (std::size_t i = 0; i < b.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    pos << b.ids[i];
    for (Eigen::Index k = 0; k < dim; ++k) pos << ',' << format_double(b.positions(r, k));
    const auto it = groups.find(b.ids[i]);
    pos << ',';
    if (it != groups.end()) pos << it->second;
    pos << '\n';
    points.push_back({std::to_string(b.ids[i]), b.positions(r, 0), dim > 1 ? b.positions(r, 1) : 0.0,
                      it != groups.end() ? it->second : -1});
  }
  std::vector<svg::Arrow> arrows;
  for (std::size_t f = 0; f < b.features.size(); ++f) {
    const auto r = static_cast<Eigen::Index>(f);
    arr << b.features[f];
    for (Eigen::Index k = 0; k < dim; ++k) arr << ',' << format_double(b.arrows(r, k));
    arr << '\n';
    arrows.push_back({b.features[f], b.arrows(r, 0), dim > 1 ? b.arrows(r, 1) : 0.0});
  }
  write_text(out_path(o, "biplot_positions.csv"), pos.str());
  write_text(out_path(o, "biplot_arrows.csv"), arr.str());
  if (o.svg) write_text(out_path(o, "biplot.svg"), svg::biplot("Embedding bi-plot", points, arrows));
  std::cout << "wrote " << out_path(o, "biplot_positions.csv") << " and " << out_path(o, "biplot_arrows.csv")
            << "\n";
}

CLI::App* base(CLI::App& parent, const std::string& name, const std::string& help,
               const std::shared_ptr<ExplainOptions>& o, bool seeded) {
  auto* sub = parent.add_subcommand(name, help);
  sub->add_option("--model", o->model, "Model JSON written by fit or bench")->required()->check(CLI::ExistingFile);
  sub->add_option("--data", o->data, "Dataset CSV with the model's features")->required()->check(CLI::ExistingFile);
  sub->add_flag("--svg", o->svg, "Also render a standalone SVG plot");
  sub->add_option("-o,--out", o->common.out, "Output directory")->required();
  if (seeded) {
    o->common.seed_opt = sub->add_option("--seed", o->common.seed, "Master seed");
    o->common.threads_opt =
        sub->add_option("--threads", o->common.threads, "Worker threads (0 = available parallelism)");
  }
  return sub;
}

}  // namespace

void add_explain(CLI::App& app) {
  auto* ex = app.add_subcommand("explain", "Explain a fitted model: effects, importance, ALE curves, bi-plots");
  ex->require_subcommand(1);

  auto ace = std::make_shared<ExplainOptions>();
  auto* s = base(*ex, "ace", "Average conditional effects with bootstrap inference", ace, true);
  s->add_option("--bootstrap", ace->bootstrap, "Bootstrap replicates (0 = estimates only)");
  s->add_option("--features", ace->features, "Comma-separated features (empty = all)");
  s->add_option("--epsilon", ace->epsilon, "Finite-difference step (0 = 0.1 feature SD)");
  s->callback([ace] { run_ace(*ace); });

  auto imp = std::make_shared<ExplainOptions>();
  s = base(*ex, "importance", "Permutation importance per feature", imp, true);
  s->add_option("--permutations", imp->permutations, "Permutations averaged per feature");
  s->callback([imp] { run_importance(*imp, false); });

  auto inter = std::make_shared<ExplainOptions>();
  s = base(*ex, "interactions", "Pairwise interaction importance and cross-partial effects", inter, true);
  s->add_option("--permutations", inter->permutations, "Permutations averaged per pair");
  s->callback([inter] { run_importance(*inter, true); });

  auto ale = std::make_shared<ExplainOptions>();
  s = base(*ex, "ale", "Accumulated local effect curve of one feature", ale, false);
  s->add_option("--feature", ale->feature, "Feature name (first feature when empty)");
  s->add_option("--bins", ale->bins, "Quantile bins");
  s->callback([ale] { run_ale(*ale); });

  auto bi = std::make_shared<ExplainOptions>();
  s = base(*ex, "biplot", "Embedding positions with per-feature effect arrows", bi, false);
  s->add_option("--truth", bi->truth, "truth.json used to label ids with their group")->check(CLI::ExistingFile);
  s->add_option("--features", bi->features, "Comma-separated features (empty = all)");
  s->add_option("--epsilon", bi->epsilon, "Finite-difference step (0 = 0.1 feature SD)");
  s->callback([bi] { run_biplot(*bi); });
}

}  // namespace ssfcli
