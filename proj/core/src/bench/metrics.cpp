#include "ssf/bench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ssf/error.hpp"
#include "ssf/rng.hpp"

namespace ssf::bench {

CalibrationSummary calibrate(const std::string& model, double true_slope,
                             const std::vector<RepEstimate>& reps, int n_failed, double alpha) {
  CalibrationSummary s;
  s.model = model;
  s.true_slope = true_slope;
  s.n_completed = static_cast<int>(reps.size());
  s.n_failed = n_failed;
  if (reps.empty()) {
    s.mean_estimate = s.bias = s.coverage = s.rejection = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  int covered = 0, rejected = 0;
  for (const auto& r : reps) {
    sum += r.estimate;
    if (r.ci_low <= true_slope && true_slope <= r.ci_high) ++covered;
    if (r.p_value < alpha) ++rejected;
  }
  const double n = static_cast<double>(reps.size());
  s.mean_estimate = sum / n;
  s.bias = s.mean_estimate - true_slope;
  s.coverage = covered / n;
  s.rejection = rejected / n;
  return s;
}

const EffectCell& EffectMatrix::cell(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  for (const auto& c : cells)
    if (c.i == i && c.j == j) return c;
  throw ConfigError("no effect cell (" + std::to_string(i) + ", " + std::to_string(j) + ")");
}

namespace {

template <typename Pred>
double mean_mse_where(const std::vector<EffectCell>& cells, Pred keep) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : cells) {
    if (!keep(c)) continue;
    sum += c.mse;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

}  // namespace

double EffectMatrix::mean_mse() const {
  return mean_mse_where(cells, [](const EffectCell&) { return true; });
}
double EffectMatrix::mean_mse_mains() const {
  return mean_mse_where(cells, [](const EffectCell& c) { return c.i == c.j; });
}
double EffectMatrix::mean_mse_null_interactions() const {
  return mean_mse_where(cells, [](const EffectCell& c) { return c.i != c.j && c.truth == 0.0; });
}
double EffectMatrix::mean_mse_true_interactions() const {
  return mean_mse_where(cells, [](const EffectCell& c) { return c.i != c.j && c.truth != 0.0; });
}

double EffectMatrix::identity_gap() const {
  double worst = 0.0;
  for (const auto& c : cells) worst = std::max(worst, std::abs(c.mse - (c.variance + c.bias * c.bias)));
  return worst;
}

EffectMatrix effect_matrix(const std::string& model, const Eigen::MatrixXd& truth,
                           const std::vector<Eigen::MatrixXd>& estimates) {
  EffectMatrix m;
  m.model = model;
  m.p = static_cast<std::size_t>(truth.rows());
  const double n = static_cast<double>(estimates.size());
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = i; j < truth.cols(); ++j) {
      EffectCell c;
      c.i = static_cast<std::size_t>(i);
      c.j = static_cast<std::size_t>(j);
      c.truth = truth(i, j);
      c.n = static_cast<int>(estimates.size());
      if (estimates.empty()) {
        c.mean_estimate = c.bias = c.variance = c.mse = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (const auto& e : estimates) sum += e(i, j);
        c.mean_estimate = sum / n;
        double ss = 0.0, se = 0.0;
        for (const auto& e : estimates) {
          ss += (e(i, j) - c.mean_estimate) * (e(i, j) - c.mean_estimate);
          se += (e(i, j) - c.truth) * (e(i, j) - c.truth);
        }
        c.bias = c.mean_estimate - c.truth;
        c.variance = ss / n;
        c.mse = se / n;
      }
      m.cells.push_back(c);
    }
  }
  return m;
}

namespace {

KMeansResult lloyd(const Eigen::MatrixXd& x, int k, CounterRng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  // k-means++ seeding.
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
  Eigen::VectorXd d2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = (centers.topRows(c).rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff();
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    }
    centers.row(c) = x.row(pick);
  }

  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (r.labels[static_cast<std::size_t>(i)] != best) {
        r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++count[static_cast<std::size_t>(r.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) centers.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
  }
  r.centers = centers;
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (x.row(i) - centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return r;
}

double choose2(double v) { return v * (v - 1.0) / 2.0; }

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, std::uint64_t seed) {
  if (k < 1 || k > points.rows()) throw ConfigError("k-means needs 1 <= k <= number of points");
  if (restarts < 1) throw ConfigError("k-means needs at least one restart");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    auto run = lloyd(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ConfigError("label vectors differ in length");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, v] : table) index += choose2(v);
  for (const auto& [_, v] : ra) sa += choose2(v);
  for (const auto& [_, v] : rb) sb += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  // Identical trivial partitions (one cluster each, or all singletons).
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  std::map<int, int> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (sizes[own] == 1) continue;  // silhouette of a singleton is 0
    std::map<int, double> dist;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[labels[static_cast<std::size_t>(j)]] += (points.row(i) - points.row(j)).norm();
    }
    const double a = dist[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : dist)
      if (l != own) b = std::min(b, s / sizes[l]);
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

double ari_permutation_p(const std::vector<int>& labels, const std::vector<int>& truth,
                         int n_permutations, std::uint64_t seed) {
  const double observed = adjusted_rand_index(labels, truth);
  CounterRng rng(seed);
  std::vector<int> perm = truth;
  int at_least = 0;
  for (int r = 0; r < n_permutations; ++r) {
    shuffle(perm, rng);
    if (adjusted_rand_index(labels, perm) >= observed - 1e-12) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + n_permutations);
}

ClusterSummary cluster_embeddings(const Eigen::MatrixXd& positions, const std::vector<int>& truth,
                                  int n_groups, std::uint64_t seed) {
  ClusterSummary s;
  s.n_groups = n_groups;
  auto km = kmeans(positions, n_groups, 20, derive_seed(seed, {0x4B4D}));
  s.cluster_labels = km.labels;
  s.ari = adjusted_rand_index(km.labels, truth);
  s.silhouette = mean_silhouette(positions, km.labels);
  s.permutation_p = ari_permutation_p(km.labels, truth, 999, derive_seed(seed, {0x415249}));
  return s;
}

}  // namespace ssf::bench
