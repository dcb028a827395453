#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "ssf/bench/config.hpp"
#include "ssf/bench/metrics.hpp"
#include "ssf/sim/selection.hpp"
#include "ssf/xai/xai.hpp"

namespace ssf::bench {

/// One row of the long-format summary: scenario,model,cell,metric,value.
struct SummaryRow {
  int scenario = 0;
  std::string model;
  std::string cell;
  std::string metric;
  double value = 0.0;
};

/// Bookkeeping shared by all scenarios.
struct RunStatus {
  int attempted = 0;  // repetitions (for scenario 1: slope x repetition)
  int completed = 0;  // repetitions in which every model succeeded
  std::vector<std::string> failures;  // "rep<i>/<model>: message"

  double completion_rate() const noexcept {
    return attempted == 0 ? 1.0 : static_cast<double>(completed) / attempted;
  }
};

struct Scenario1Row {
  int rep = 0;
  double true_slope = 0.0;
  std::string model;
  bool ok = false;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

struct Scenario1Result {
  RunStatus status;
  std::vector<Scenario1Row> rows;
  std::vector<CalibrationSummary> summaries;  // glm rows then dnn rows, grid order
};

struct CurveScore {
  std::string truth;
  std::string model;  // "dnn" (ALE) or "spline"
  int n_completed = 0;
  double mean_mse = 0.0;
  double truth_variance = 0.0;  // of the centered truth on the grid
};

struct Scenario2Row {
  int rep = 0;
  std::string truth;
  bool ok = false;
  double dnn_mse = 0.0;
  double spline_mse = 0.0;
  double truth_variance = 0.0;
};

struct Scenario2Result {
  RunStatus status;
  std::vector<Scenario2Row> rows;
  std::vector<CurveScore> scores;
};

struct Scenario3Result {
  RunStatus status;
  Eigen::MatrixXd truth;  // 9 x 9, mains on the diagonal, interactions above
  EffectMatrix glm;
  EffectMatrix dnn;
};

/// Per-repetition outcome of an embedding scenario.
struct EmbeddingRep {
  int rep = 0;
  bool ok = false;
  ClusterSummary cluster;
  xai::BiplotResult biplot;
  std::vector<int> true_groups;  // aligned with biplot.ids
  // Scenario 4: null arrows are the shortest; correlated arrows align.
  bool null_arrows_shortest = false;
  double min_correlated_cosine = 0.0;
  // Scenario 5: group centroids projected on the distance arrow follow the
  // order of the true distance effects.
  bool centroid_order_ok = false;
  std::vector<double> centroid_projection;  // per group
};

struct EmbeddingResult {
  int scenario = 4;
  RunStatus status;
  std::vector<EmbeddingRep> reps;
};

/// Scenario-4 generating spec: x1..x10 drawn independently per group,
/// x11..x15 a shared per-group latent plus N(0, 0.2) jitter, x16..x20 null;
/// individual i belongs to group i / (n_individuals / n_groups).
sim::SelectionSpec scenario4_spec(const ScenarioConfig& cfg, std::uint64_t seed);

/// Scenario-3 generating spec: signed ramp of main effects with x5 null and
/// interactions (x1,x8) = +1, (x3,x7) = -1, (x4,x6) = +1.
sim::SelectionSpec scenario3_spec(const ScenarioConfig& cfg);

/// Runs repetitions in parallel; a failing repetition is recorded and
/// excluded. With `out_dir`, files go to <out_dir>/rep<i>/.
Scenario1Result run_scenario1(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir = {});
Scenario2Result run_scenario2(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir = {});
Scenario3Result run_scenario3(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir = {});
EmbeddingResult run_scenario4(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir = {});
EmbeddingResult run_scenario5(const ScenarioConfig& cfg, const std::optional<std::string>& out_dir = {});

std::vector<SummaryRow> summary_rows(const Scenario1Result& r);
std::vector<SummaryRow> summary_rows(const Scenario2Result& r);
std::vector<SummaryRow> summary_rows(const Scenario3Result& r);
std::vector<SummaryRow> summary_rows(const EmbeddingResult& r);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

struct SummaryReport {
  std::vector<SummaryRow> rows;
  std::vector<std::string> warnings;
  // Largest |mse - (variance + bias^2)| over effect cells; 0 when none.
  double identity_gap = 0.0;
  bool identity_ok = true;  // gap <= 1e-9
};

/// Merges summary CSV files (or directories holding summary.csv) and checks
/// the MSE = variance + bias^2 identity per effect cell. Throws DataError on
/// schema mismatch.
SummaryReport summarize(const std::vector<std::string>& inputs);

/// Fixed-width text rendering of a report.
std::string render_table(const SummaryReport& report);

}  // namespace ssf::bench
