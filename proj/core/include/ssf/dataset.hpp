#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssf {

/// One candidate step (observed case or sampled control) of a stratum.
struct StepRecord {
  std::int64_t stratum_id = 0;
  bool is_case = false;
  std::vector<double> covariates;
  std::optional<int> individual_id;
  std::optional<int> opponent_id;
  std::optional<double> step_length;
  std::optional<double> turning_angle;
};

/// Case/control step records grouped by stratum. This is the exchange format
/// between the simulators, the fitters and the command-line tool.
struct StrataDataset {
  std::vector<StepRecord> records;
  std::vector<std::string> feature_names;
  int n_individuals = 0;
  int n_opponents = 0;
  bool centered = false;
  // Per-column offsets subtracted (and scales divided) by centering; empty
  // when the dataset was never centered by this library.
  std::vector<double> offsets;
  std::vector<double> scales;

  std::size_t n_features() const noexcept { return feature_names.size(); }
  std::size_t n_records() const noexcept { return records.size(); }
  std::size_t n_strata() const;

  /// Index of a named feature; throws DataError when absent.
  std::size_t feature_index(const std::string& name) const;
};

struct Violation {
  std::optional<std::int64_t> stratum_id;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

// Rule names used in ValidationReport.
namespace rules {
inline constexpr const char* kTooFewCandidates = "min_candidates";
inline constexpr const char* kCaseCount = "one_case_per_stratum";
inline constexpr const char* kCovariateLength = "covariate_length";
inline constexpr const char* kNonFinite = "finite_covariates";
inline constexpr const char* kStepLength = "nonnegative_step_length";
inline constexpr const char* kTurningAngle = "turning_angle_range";
inline constexpr const char* kIdRange = "id_range";
inline constexpr const char* kEmpty = "non_empty";
}  // namespace rules

/// Lists every violated dataset invariant. Never throws for bad data.
ValidationReport validate_dataset(const StrataDataset& d);

struct CenterOptions {
  bool standardize = false;
};

/// Subtracts the pooled (cases and controls together) column mean from every
/// covariate, optionally dividing by the pooled standard deviation. Throws
/// DataError when the input is already centered.
StrataDataset center_covariates(const StrataDataset& d, CenterOptions opts = {});

/// Inverse of center_covariates using the stored offsets and scales.
StrataDataset uncenter_covariates(const StrataDataset& d);

/// Per-column pooled mean and (population) standard deviation.
std::vector<double> column_means(const StrataDataset& d);
std::vector<double> column_sds(const StrataDataset& d);

/// CSV with header `stratum_id,case,id,opp_id,sl_,ta_,<features...>`. Empty
/// cells encode absent optional fields. Doubles are written in shortest
/// round-trip form so output is byte-stable.
void write_csv(std::ostream& out, const StrataDataset& d);
void write_csv_file(const std::string& path, const StrataDataset& d);

/// Parses the CSV format above. Data whose columns all have |mean| < 1e-9 is
/// flagged as centered. Throws DataError on malformed input.
StrataDataset read_csv(std::istream& in);
StrataDataset read_csv_file(const std::string& path);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace ssf
