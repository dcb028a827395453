#include "common.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ssf/error.hpp"

namespace ssfcli {

using nlohmann::json;

void CommonFlags::add(CLI::App& app, bool with_out, bool out_required, bool with_threads) {
  app.add_option("--config", config, "JSON run config (unknown keys are rejected)")->check(CLI::ExistingFile);
  seed_opt = app.add_option("--seed", seed, "Master seed");
  if (with_threads) threads_opt = app.add_option("--threads", threads, "Worker threads (0 = available parallelism)");
  if (with_out) {
    auto* o = app.add_option("-o,--out", out, "Output directory");
    if (out_required) o->required();
  }
}

ssf::bench::ScenarioConfig RunConfig::scenario(int k) const {
  return ssf::bench::config_from_json(scenario_overrides.dump(), ssf::bench::ScenarioConfig::defaults(k));
}

RunConfig run_config_from_json(const std::string& text, const std::string& origin) {
  RunConfig rc;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ssf::ConfigError(origin + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ssf::ConfigError(origin + ": run config must be a JSON object");
  auto take = [&](const char* key, std::string& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ssf::ConfigError(origin + ": config key '" + key + "' must be a string");
    field = j[key].get<std::string>();
    j.erase(key);
  };
  take("model", rc.model);
  take("formula", rc.formula);
  take("feature", rc.feature);
  take("embed", rc.embed);
  rc.scenario_overrides = j;
  // Validate the remaining keys now so errors name the origin.
  try {
    (void)rc.scenario(1);
  } catch (const ssf::ConfigError& e) {
    throw ssf::ConfigError(origin + ": " + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  return run_config_from_json(read_text(path), path);
}

std::string default_run_config(int scenario) {
  auto j = json::parse(ssf::bench::config_to_json(ssf::bench::ScenarioConfig::defaults(scenario)));
  RunConfig rc;
  j["model"] = rc.model;
  j["formula"] = rc.formula;
  j["feature"] = rc.feature;
  j["embed"] = rc.embed;
  return j.dump(1) + "\n";
}

void apply_common(const CommonFlags& f, ssf::bench::ScenarioConfig& c) {
  if (f.seed_opt && f.seed_opt->count() > 0) c.seed = f.seed;
  if (f.threads_opt && f.threads_opt->count() > 0) c.threads = f.threads;
}

ssf::StrataDataset load_dataset(const std::string& path, bool quiet) {
  auto d = ssf::read_csv_file(path);
  const auto report = ssf::validate_dataset(d);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << path << ": " << report.violations.size() << " validation violation(s)";
    for (const auto& v : report.violations) {
      std::cerr << "  [" << v.rule << "]";
      if (v.stratum_id) std::cerr << " stratum " << *v.stratum_id;
      std::cerr << ": " << v.message << "\n";
    }
    throw ExitStatus(kValidation, msg.str());
  }
  if (!d.centered) {
    if (!quiet) std::cerr << "note: " << path << " is not centered; centering with its pooled column means\n";
    d = ssf::center_covariates(d);
  }
  return d;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep)) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const auto& s : split(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ssf::ConfigError(flag + ": '" + s + "' is not an integer");
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ssf::DataError("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ssf::DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ssf::DataError("cannot create directory " + path + ": " + ec.message());
}

}  // namespace ssfcli
