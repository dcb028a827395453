#include "ssf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ssf/error.hpp"

namespace ssf {

std::size_t StrataDataset::n_strata() const {
  std::unordered_set<std::int64_t> ids;
  for (const auto& r : records) ids.insert(r.stratum_id);
  return ids.size();
}

std::size_t StrataDataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) {
    throw DataError("unknown feature '" + name + "'");
  }
  return static_cast<std::size_t>(it - feature_names.begin());
}

ValidationReport validate_dataset(const StrataDataset& d) {
  ValidationReport report;
  auto add = [&](std::optional<std::int64_t> sid, const char* rule, std::string msg) {
    report.violations.push_back({sid, rule, std::move(msg)});
  };

  if (d.records.empty()) {
    add(std::nullopt, rules::kEmpty, "dataset has no records");
    return report;
  }

  const std::size_t p = d.n_features();
  // Ordered so that violations come out sorted by stratum id.
  std::map<std::int64_t, std::pair<int, int>> strata;  // id -> (records, cases)
  std::map<std::int64_t, bool> reported_nan;
  std::map<std::int64_t, bool> reported_len;

  for (const auto& r : d.records) {
    auto& [count, cases] = strata[r.stratum_id];
    ++count;
    if (r.is_case) ++cases;

    if (r.covariates.size() != p && !reported_len[r.stratum_id]) {
      reported_len[r.stratum_id] = true;
      add(r.stratum_id, rules::kCovariateLength,
          "record has " + std::to_string(r.covariates.size()) + " covariates, expected " +
              std::to_string(p));
    }
    const bool finite = std::all_of(r.covariates.begin(), r.covariates.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite && !reported_nan[r.stratum_id]) {
      reported_nan[r.stratum_id] = true;
      add(r.stratum_id, rules::kNonFinite, "covariate contains NaN or infinity");
    }
    if (r.step_length && !(*r.step_length >= 0.0)) {
      add(r.stratum_id, rules::kStepLength,
          "step length " + format_double(*r.step_length) + " is negative or NaN");
    }
    if (r.turning_angle &&
        !(*r.turning_angle > -std::numbers::pi && *r.turning_angle <= std::numbers::pi)) {
      add(r.stratum_id, rules::kTurningAngle,
          "turning angle " + format_double(*r.turning_angle) + " outside (-pi, pi]");
    }
    if (r.individual_id && (*r.individual_id < 0 || *r.individual_id >= d.n_individuals)) {
      add(r.stratum_id, rules::kIdRange,
          "individual id " + std::to_string(*r.individual_id) + " outside [0, " +
              std::to_string(d.n_individuals) + ")");
    }
    if (r.opponent_id && (*r.opponent_id < 0 || *r.opponent_id >= d.n_opponents)) {
      add(r.stratum_id, rules::kIdRange,
          "opponent id " + std::to_string(*r.opponent_id) + " outside [0, " +
              std::to_string(d.n_opponents) + ")");
    }
  }

  for (const auto& [sid, counts] : strata) {
    const auto [count, cases] = counts;
    if (count < 2) {
      add(sid, rules::kTooFewCandidates,
          "stratum has " + std::to_string(count) + " record(s); need a case and at least one control");
    }
    if (cases != 1) {
      add(sid, rules::kCaseCount, "stratum has " + std::to_string(cases) + " cases, expected 1");
    }
  }

  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.stratum_id.value_or(-1) < b.stratum_id.value_or(-1);
                   });
  return report;
}

std::vector<double> column_means(const StrataDataset& d) {
  const std::size_t p = d.n_features();
  std::vector<double> mean(p, 0.0);
  if (d.records.empty()) return mean;
  for (const auto& r : d.records) {
    for (std::size_t j = 0; j < p; ++j) mean[j] += r.covariates[j];
  }
  for (auto& m : mean) m /= static_cast<double>(d.records.size());
  return mean;
}

std::vector<double> column_sds(const StrataDataset& d) {
  const std::size_t p = d.n_features();
  const auto mean = column_means(d);
  std::vector<double> ss(p, 0.0);
  for (const auto& r : d.records) {
    for (std::size_t j = 0; j < p; ++j) {
      const double c = r.covariates[j] - mean[j];
      ss[j] += c * c;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(d.records.size(), 1));
  for (auto& s : ss) s = std::sqrt(s / n);
  return ss;
}

StrataDataset center_covariates(const StrataDataset& d, CenterOptions opts) {
  if (d.centered) {
    throw DataError("dataset is already centered; refusing to center twice");
  }
  StrataDataset out = d;
  const std::size_t p = d.n_features();
  std::vector<double> mean = column_means(d);
  std::vector<double> scale(p, 1.0);
  if (opts.standardize) {
    scale = column_sds(d);
    for (auto& s : scale) {
      if (s == 0.0) s = 1.0;
    }
  }
  for (auto& r : out.records) {
    for (std::size_t j = 0; j < p; ++j) r.covariates[j] = (r.covariates[j] - mean[j]) / scale[j];
  }
  // Second pass removes the rounding residue of the first so that the
  // recomputed mean is zero to working precision.
  const auto residual = column_means(out);
  for (auto& r : out.records) {
    for (std::size_t j = 0; j < p; ++j) r.covariates[j] -= residual[j];
  }
  for (std::size_t j = 0; j < p; ++j) mean[j] += residual[j] * scale[j];

  out.centered = true;
  out.offsets = std::move(mean);
  out.scales = std::move(scale);
  return out;
}

StrataDataset uncenter_covariates(const StrataDataset& d) {
  if (!d.centered || d.offsets.size() != d.n_features()) {
    throw DataError("dataset carries no centering offsets to invert");
  }
  StrataDataset out = d;
  const std::size_t p = d.n_features();
  for (auto& r : out.records) {
    for (std::size_t j = 0; j < p; ++j) {
      r.covariates[j] = r.covariates[j] * d.scales[j] + d.offsets[j];
    }
  }
  out.centered = false;
  out.offsets.clear();
  out.scales.clear();
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

namespace {

constexpr const char* kFixedHeader[] = {"stratum_id", "case", "id", "opp_id", "sl_", "ta_"};
constexpr std::size_t kFixedColumns = 6;

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" +
                    std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line_no) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse integer '" +
                    std::string(s) + "'");
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const StrataDataset& d) {
  for (std::size_t i = 0; i < kFixedColumns; ++i) {
    if (i) out << ',';
    out << kFixedHeader[i];
  }
  for (const auto& name : d.feature_names) out << ',' << name;
  out << '\n';
  for (const auto& r : d.records) {
    out << r.stratum_id << ',' << (r.is_case ? 1 : 0) << ',';
    if (r.individual_id) out << *r.individual_id;
    out << ',';
    if (r.opponent_id) out << *r.opponent_id;
    out << ',';
    if (r.step_length) out << format_double(*r.step_length);
    out << ',';
    if (r.turning_angle) out << format_double(*r.turning_angle);
    for (double v : r.covariates) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const StrataDataset& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  write_csv(f, d);
}

StrataDataset read_csv(std::istream& in) {
  StrataDataset d;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);
  if (header.size() < kFixedColumns) throw DataError("CSV header has too few columns");
  for (std::size_t i = 0; i < kFixedColumns; ++i) {
    if (header[i] != kFixedHeader[i]) {
      throw DataError("CSV header column " + std::to_string(i + 1) + " must be '" +
                      kFixedHeader[i] + "', found '" + std::string(header[i]) + "'");
    }
  }
  for (std::size_t i = kFixedColumns; i < header.size(); ++i) {
    d.feature_names.emplace_back(header[i]);
  }
  const std::size_t p = d.feature_names.size();

  int max_ind = -1;
  int max_opp = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != kFixedColumns + p) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(kFixedColumns + p) + " cells, found " +
                      std::to_string(cells.size()));
    }
    StepRecord r;
    r.stratum_id = parse_int<std::int64_t>(cells[0], line_no);
    const int c = parse_int<int>(cells[1], line_no);
    if (c != 0 && c != 1) {
      throw DataError("line " + std::to_string(line_no) + ": case must be 0 or 1");
    }
    r.is_case = c == 1;
    if (!cells[2].empty()) {
      r.individual_id = parse_int<int>(cells[2], line_no);
      max_ind = std::max(max_ind, *r.individual_id);
    }
    if (!cells[3].empty()) {
      r.opponent_id = parse_int<int>(cells[3], line_no);
      max_opp = std::max(max_opp, *r.opponent_id);
    }
    if (!cells[4].empty()) r.step_length = parse_double(cells[4], line_no);
    if (!cells[5].empty()) r.turning_angle = parse_double(cells[5], line_no);
    r.covariates.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
      r.covariates.push_back(parse_double(cells[kFixedColumns + j], line_no));
    }
    d.records.push_back(std::move(r));
  }
  d.n_individuals = max_ind + 1;
  d.n_opponents = max_opp + 1;

  if (!d.records.empty() && p > 0) {
    const auto means = column_means(d);
    d.centered = std::all_of(means.begin(), means.end(),
                             [](double m) { return std::isfinite(m) && std::abs(m) < 1e-9; });
  }
  return d;
}

StrataDataset read_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  return read_csv(f);
}

}  // namespace ssf
