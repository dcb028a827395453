#include "ssf/xai/xai.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ssf/error.hpp"
#include "ssf/parallel.hpp"
#include "ssf/rng.hpp"

namespace ssf::xai {

namespace {

void check_feature(const PackedStrata& d, std::size_t feature) {
  if (static_cast<Eigen::Index>(feature) >= d.n_features())
    throw ConfigError("feature index " + std::to_string(feature) + " out of range");
}

double resolve_epsilon(const PackedStrata& d, std::size_t feature, std::optional<double> eps) {
  const double sd = feature_sd(d, feature);
  const double e = eps.value_or(0.1 * sd);
  if (!(e > 0.0) || e > 0.5 * sd * (1.0 + 1e-12))
    throw ConfigError("ACE epsilon " + std::to_string(e) + " must lie in (0, 0.5*SD] = (0, " +
                      std::to_string(0.5 * sd) + "]");
  return e;
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Permutation r of the record columns; shared by every feature and pair.
std::vector<Eigen::Index> permutation(Eigen::Index n, std::uint64_t seed, int r) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  CounterRng rng(derive_seed(seed, {0x5045524D, static_cast<std::uint64_t>(r)}));
  shuffle(perm, rng);
  return perm;
}

double nll_permuted(const ScoringModel& m, const PackedStrata& d, const std::vector<std::size_t>& cols,
                    const std::vector<Eigen::Index>& perm) {
  Eigen::MatrixXd x = d.x;
  for (auto c : cols) {
    const auto row = static_cast<Eigen::Index>(c);
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(row, k) = d.x(row, perm[static_cast<std::size_t>(k)]);
  }
  return mean_conditional_nll(m.score(x, d.individual, d.opponent), d);
}

}  // namespace

double feature_sd(const PackedStrata& d, std::size_t feature) {
  check_feature(d, feature);
  auto row = d.x.row(static_cast<Eigen::Index>(feature));
  if (row.size() < 2) return 0.0;
  const double mean = row.mean();
  return std::sqrt((row.array() - mean).square().sum() / static_cast<double>(row.size() - 1));
}

double default_epsilon(const PackedStrata& d, std::size_t feature) { return 0.1 * feature_sd(d, feature); }

double average_conditional_effect(const ScoringModel& m, const PackedStrata& d, std::size_t feature,
                                  std::optional<double> epsilon) {
  check_feature(d, feature);
  const double e = resolve_epsilon(d, feature, epsilon);
  const auto row = static_cast<Eigen::Index>(feature);
  Eigen::MatrixXd xp = d.x, xm = d.x;
  xp.row(row).array() += e;
  xm.row(row).array() -= e;
  Eigen::VectorXd diff = m.score(xp, d.individual, d.opponent) - m.score(xm, d.individual, d.opponent);
  return diff.mean() / (2.0 * e);
}

double cross_partial_effect(const ScoringModel& m, const PackedStrata& d, std::size_t i, std::size_t j,
                            std::optional<double> eps_i, std::optional<double> eps_j) {
  check_feature(d, i);
  check_feature(d, j);
  if (i == j) throw ConfigError("cross-partial needs two distinct features");
  const double ei = resolve_epsilon(d, i, eps_i), ej = resolve_epsilon(d, j, eps_j);
  auto shifted = [&](double si, double sj) {
    Eigen::MatrixXd x = d.x;
    x.row(static_cast<Eigen::Index>(i)).array() += si;
    x.row(static_cast<Eigen::Index>(j)).array() += sj;
    return m.score(x, d.individual, d.opponent);
  };
  Eigen::VectorXd v = shifted(ei, ej) - shifted(ei, -ej) - shifted(-ei, ej) + shifted(-ei, -ej);
  return v.mean() / (4.0 * ei * ej);
}

std::vector<EffectReport> bootstrap_inference(const Fitter& fitter, const PackedStrata& d,
                                              const std::vector<std::size_t>& features,
                                              const std::vector<std::string>& feature_names,
                                              const BootstrapOptions& opts, const ScoringModel* full_model) {
  if (opts.replicates < 2) throw ConfigError("bootstrap needs at least 2 replicates");
  if (opts.max_retries < 0) throw ConfigError("bootstrap retries must be >= 0");
  if (d.n_strata() == 0) throw DataError("cannot bootstrap an empty dataset");
  std::vector<double> eps;
  for (auto f : features) eps.push_back(resolve_epsilon(d, f, opts.epsilon));

  std::unique_ptr<ScoringModel> owned;
  if (!full_model) {
    owned = fitter(d, derive_seed(opts.seed, {0x46554C4C}));
    full_model = owned.get();
  }

  const auto nf = features.size();
  const auto reps = static_cast<std::size_t>(opts.replicates);
  // Row r holds replicate r's ACEs; NaN marks an excluded replicate.
  std::vector<std::vector<double>> ace(reps, std::vector<double>(nf, std::nan("")));
  parallel_for(reps, opts.threads, [&](std::size_t r) {
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
      const auto key = derive_seed(opts.seed, {0x424F4F54, r, static_cast<std::uint64_t>(attempt)});
      CounterRng rng(key);
      std::vector<Eigen::Index> pick(static_cast<std::size_t>(d.n_strata()));
      for (auto& s : pick) s = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(d.n_strata()));
      PackedStrata sample = select_strata(d, pick);
      try {
        auto model = fitter(sample, derive_seed(key, {1}));
        for (std::size_t k = 0; k < nf; ++k)
          ace[r][k] = average_conditional_effect(*model, d, features[k], eps[k]);
        return;
      } catch (const ConvergenceError&) {
      }
    }
  });

  std::vector<EffectReport> out;
  for (std::size_t k = 0; k < nf; ++k) {
    EffectReport e;
    e.feature = features[k] < feature_names.size() ? feature_names[features[k]]
                                                   : "x" + std::to_string(features[k] + 1);
    e.estimate = average_conditional_effect(*full_model, d, features[k], eps[k]);
    std::vector<double> vals;
    for (std::size_t r = 0; r < reps; ++r) {
      if (std::isnan(ace[r][k])) ++e.n_failed;
      else vals.push_back(ace[r][k]);
    }
    e.n_bootstrap = static_cast<int>(vals.size());
    if (vals.size() < 2)
      throw ConvergenceError("fewer than 2 bootstrap replicates converged for " + e.feature);
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    e.se = std::sqrt(ss / static_cast<double>(vals.size() - 1));
    e.ci_low = e.estimate - 1.96 * e.se;
    e.ci_high = e.estimate + 1.96 * e.se;
    if (e.se > 0.0) {
      e.p_value = two_sided_p(e.estimate / e.se);
    } else {
      e.p_value = 1.0;
      e.degenerate_se = true;
    }
    out.push_back(e);
  }
  return out;
}

double permutation_importance(const ScoringModel& m, const PackedStrata& d, std::size_t feature,
                              int n_permutations, std::uint64_t seed) {
  check_feature(d, feature);
  if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");
  const double base = mean_conditional_nll(m, d);
  double total = 0.0;
  for (int r = 0; r < n_permutations; ++r)
    total += nll_permuted(m, d, {feature}, permutation(d.n_records(), seed, r)) - base;
  return total / n_permutations;
}

double interaction_importance(const ScoringModel& m, const PackedStrata& d, std::size_t i, std::size_t j,
                              int n_permutations, std::uint64_t seed) {
  check_feature(d, i);
  check_feature(d, j);
  if (i == j) throw ConfigError("interaction importance needs two distinct features");
  if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");
  const double base = mean_conditional_nll(m, d);
  double total = 0.0;
  for (int r = 0; r < n_permutations; ++r) {
    const auto perm = permutation(d.n_records(), seed, r);
    // Summed in an order that does not depend on which of i, j comes first.
    const double ni = nll_permuted(m, d, {i}, perm), nj = nll_permuted(m, d, {j}, perm);
    total += nll_permuted(m, d, {i, j}, perm) - (ni + nj) + base;
  }
  return total / n_permutations;
}

double ImportanceTable::single(std::size_t i) const { return std::max(singles.at(i), 0.0); }

double ImportanceTable::pair_raw(std::size_t i, std::size_t j) const {
  return pairs.at({std::min(i, j), std::max(i, j)});
}

double ImportanceTable::pair(std::size_t i, std::size_t j) const { return std::max(pair_raw(i, j), 0.0); }

ImportanceTable importance_table(const ScoringModel& m, const PackedStrata& d,
                                 const std::vector<std::string>& feature_names, int n_permutations,
                                 std::uint64_t seed, bool with_pairs, unsigned threads) {
  const auto nf = static_cast<std::size_t>(d.n_features());
  ImportanceTable t;
  t.features = feature_names;
  t.singles.assign(nf, 0.0);
  parallel_for(nf, threads, [&](std::size_t f) {
    t.singles[f] = permutation_importance(m, d, f, n_permutations, seed);
  });
  if (with_pairs) {
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t j = i + 1; j < nf; ++j) keys.emplace_back(i, j);
    std::vector<double> vals(keys.size());
    parallel_for(keys.size(), threads, [&](std::size_t k) {
      vals[k] = interaction_importance(m, d, keys[k].first, keys[k].second, n_permutations, seed);
    });
    for (std::size_t k = 0; k < keys.size(); ++k) t.pairs[keys[k]] = vals[k];
  }
  return t;
}

std::vector<double> AleCurve::bin_midpoints() const {
  std::vector<double> mid;
  for (std::size_t k = 0; k + 1 < bin_edges.size(); ++k) mid.push_back(0.5 * (bin_edges[k] + bin_edges[k + 1]));
  return mid;
}

double AleCurve::evaluate(double x) const {
  if (edge_effect.empty()) return 0.0;
  if (x <= bin_edges.front()) return edge_effect.front();
  if (x >= bin_edges.back()) return edge_effect.back();
  auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
  const auto k = static_cast<std::size_t>(it - bin_edges.begin());
  const double t = (x - bin_edges[k - 1]) / (bin_edges[k] - bin_edges[k - 1]);
  return edge_effect[k - 1] + t * (edge_effect[k] - edge_effect[k - 1]);
}

AleCurve ale_curve(const ScoringModel& m, const PackedStrata& d, std::size_t feature, int n_bins) {
  check_feature(d, feature);
  if (n_bins < 2) throw ConfigError("ALE needs at least 2 bins");
  const auto row = static_cast<Eigen::Index>(feature);
  const Eigen::Index n = d.n_records();
  std::vector<double> sorted(d.x.row(row).begin(), d.x.row(row).end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty() || sorted.front() == sorted.back())
    throw DataError("ALE feature is constant");

  AleCurve c;
  for (int k = 0; k <= n_bins; ++k) {
    const double h = static_cast<double>(n - 1) * k / n_bins;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    c.bin_edges.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  for (int k = 1; k <= n_bins; ++k) {
    if (!(c.bin_edges[k] > c.bin_edges[k - 1]))
      throw DataError("feature has too many ties for " + std::to_string(n_bins) + " ALE bins");
  }

  // Record k falls in bin b when edge[b] < x <= edge[b+1]; bin 0 also takes edge[0].
  std::vector<int> bin(static_cast<std::size_t>(n));
  Eigen::MatrixXd lo = d.x, hi = d.x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = d.x(row, k);
    auto it = std::lower_bound(c.bin_edges.begin() + 1, c.bin_edges.end() - 1, v);
    const int b = static_cast<int>(it - (c.bin_edges.begin() + 1));
    bin[static_cast<std::size_t>(k)] = b;
    lo(row, k) = c.bin_edges[static_cast<std::size_t>(b)];
    hi(row, k) = c.bin_edges[static_cast<std::size_t>(b) + 1];
  }
  Eigen::VectorXd diff = m.score(hi, d.individual, d.opponent) - m.score(lo, d.individual, d.opponent);

  std::vector<double> local(static_cast<std::size_t>(n_bins), 0.0);
  c.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    local[static_cast<std::size_t>(bin[static_cast<std::size_t>(k)])] += diff[k];
    ++c.counts[static_cast<std::size_t>(bin[static_cast<std::size_t>(k)])];
  }
  std::vector<double> acc(static_cast<std::size_t>(n_bins) + 1, 0.0);
  for (std::size_t b = 0; b < local.size(); ++b)
    acc[b + 1] = acc[b] + (c.counts[b] ? local[b] / static_cast<double>(c.counts[b]) : 0.0);

  std::vector<double> mid(local.size());
  double weighted = 0.0;
  for (std::size_t b = 0; b < local.size(); ++b) {
    mid[b] = 0.5 * (acc[b] + acc[b + 1]);
    weighted += static_cast<double>(c.counts[b]) * mid[b];
  }
  const double shift = weighted / static_cast<double>(n);
  for (std::size_t b = 0; b < local.size(); ++b) c.centered_effect.push_back(mid[b] - shift);
  for (double a : acc) c.edge_effect.push_back(a - shift);
  return c;
}

BiplotResult embedding_biplot(const ScoringModel& m, const PackedStrata& d,
                              const std::vector<std::size_t>& features,
                              const std::vector<std::string>& feature_names, std::optional<double> epsilon) {
  const auto target = m.embedding_target();
  if (!target) throw CapabilityError("bi-plot requires a model with an embedding layer (" + m.kind() + " has none)");
  const auto& id_col = *target == EmbeddingTarget::individual ? d.individual : d.opponent;

  std::set<int> present;
  for (int id : id_col)
    if (id >= 0) present.insert(id);
  if (present.size() < 3) throw DataError("bi-plot needs at least 3 distinct ids, found " + std::to_string(present.size()));

  BiplotResult r;
  r.ids.assign(present.begin(), present.end());
  for (auto f : features) {
    check_feature(d, f);
    r.features.push_back(f < feature_names.size() ? feature_names[f] : "x" + std::to_string(f + 1));
  }
  std::vector<double> eps;
  for (auto f : features) eps.push_back(resolve_epsilon(d, f, epsilon));

  const auto n_ids = static_cast<Eigen::Index>(r.ids.size());
  const auto dim = m.embedding_position(r.ids.front()).size();
  r.positions.resize(n_ids, dim);
  r.per_id_effect.resize(n_ids, static_cast<Eigen::Index>(features.size()));
  for (Eigen::Index a = 0; a < n_ids; ++a) {
    const int id = r.ids[static_cast<std::size_t>(a)];
    r.positions.row(a) = m.embedding_position(id).transpose();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < d.n_records(); ++k)
      if (id_col[static_cast<std::size_t>(k)] == id) cols.push_back(k);
    Eigen::MatrixXd x(d.n_features(), static_cast<Eigen::Index>(cols.size()));
    std::vector<int> ind(cols.size()), opp(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      x.col(static_cast<Eigen::Index>(c)) = d.x.col(cols[c]);
      ind[c] = d.individual[static_cast<std::size_t>(cols[c])];
      opp[c] = d.opponent[static_cast<std::size_t>(cols[c])];
    }
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto row = static_cast<Eigen::Index>(features[f]);
      Eigen::MatrixXd xp = x, xm = x;
      xp.row(row).array() += eps[f];
      xm.row(row).array() -= eps[f];
      r.per_id_effect(a, static_cast<Eigen::Index>(f)) =
          (m.score(xp, ind, opp) - m.score(xm, ind, opp)).mean() / (2.0 * eps[f]);
    }
  }

  Eigen::MatrixXd design(n_ids, dim + 1);
  design.col(0).setOnes();
  design.rightCols(dim) = r.positions;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  r.rank_deficient = cod.rank() < dim + 1;
  Eigen::MatrixXd coef = cod.solve(r.per_id_effect);  // (dim + 1) x features
  r.arrows = coef.bottomRows(dim).transpose();
  return r;
}

}  // namespace ssf::xai
