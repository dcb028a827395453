#include "ssf/glm/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssf/error.hpp"
#include "ssf/rng.hpp"
#include "newton.hpp"

namespace ssf::glm {

void SplineSettings::validate() const {
  if (interior_knots < 1) throw ConfigError("spline needs at least one interior knot");
  if (degree < 1 || degree > 5) throw ConfigError("spline degree must be in [1, 5]");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (fixed_penalty) {
    if (!(*fixed_penalty >= 0.0) || !std::isfinite(*fixed_penalty))
      throw ConfigError("spline penalty must be finite and >= 0");
  } else {
    if (penalty_grid.empty()) throw ConfigError("spline penalty grid is empty");
    for (double l : penalty_grid)
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("spline penalty must be finite and >= 0");
  }
}

std::vector<double> quantile_knots(std::vector<double> values, int interior, int degree) {
  std::sort(values.begin(), values.end());
  std::vector<double> uniq = values;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < static_cast<std::size_t>(interior) + 2) {
    throw DataError("spline needs more distinct covariate values (" + std::to_string(uniq.size()) +
                    ") than knots (" + std::to_string(interior + 2) + ")");
  }
  const double n = static_cast<double>(values.size());
  std::vector<double> inner;
  for (int i = 1; i <= interior; ++i) {
    const double h = (n - 1.0) * i / (interior + 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    inner.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  for (std::size_t i = 1; i < inner.size(); ++i) {
    if (!(inner[i] > inner[i - 1]))
      throw DataError("covariate has too many ties for " + std::to_string(interior) + " quantile knots");
  }
  if (!(inner.front() > values.front()) || !(inner.back() < values.back()))
    throw DataError("covariate has too many ties at its range ends for quantile knots");
  std::vector<double> knots(static_cast<std::size_t>(degree) + 1, values.front());
  knots.insert(knots.end(), inner.begin(), inner.end());
  knots.insert(knots.end(), static_cast<std::size_t>(degree) + 1, values.back());
  return knots;
}

Eigen::VectorXd bspline_basis(const std::vector<double>& knots, int degree, double x) {
  const int nb = static_cast<int>(knots.size()) - degree - 1;
  if (nb < 1) throw std::invalid_argument("knot vector too short");
  if (!(x >= knots.front() && x <= knots.back()))
    throw DataError("spline argument " + std::to_string(x) + " outside the knot range");
  int span = degree;
  while (span < nb - 1 && knots[static_cast<std::size_t>(span) + 1] <= x) ++span;

  std::vector<double> n(static_cast<std::size_t>(degree) + 1, 0.0), left(n.size()), right(n.size());
  n[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nb);
  for (int r = 0; r <= degree; ++r) out[span - degree + r] = n[r];
  return out;
}

Eigen::MatrixXd bspline_design(const std::vector<double>& knots, int degree, const Eigen::RowVectorXd& x) {
  const auto nb = static_cast<Eigen::Index>(knots.size()) - degree - 1;
  Eigen::MatrixXd b(nb, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) b.col(i) = bspline_basis(knots, degree, x[i]);
  return b;
}

namespace {

std::vector<double> greville(const std::vector<double>& knots, int degree) {
  const std::size_t nb = knots.size() - static_cast<std::size_t>(degree) - 1;
  std::vector<double> g(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    double s = 0.0;
    for (int k = 1; k <= degree; ++k) s += knots[j + static_cast<std::size_t>(k)];
    g[j] = s / degree;
  }
  return g;
}

constexpr double kRidge = 1e-6;

}  // namespace

Eigen::MatrixXd second_difference_matrix(const std::vector<double>& knots, int degree) {
  const auto g = greville(knots, degree);
  const auto nb = static_cast<Eigen::Index>(g.size());
  if (nb < 3) return Eigen::MatrixXd::Zero(0, nb);
  const double hbar = (g.back() - g.front()) / static_cast<double>(nb - 1);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nb - 2, nb);
  for (Eigen::Index i = 1; i + 1 < nb; ++i) {
    const double h0 = g[i] - g[i - 1], h1 = g[i + 1] - g[i];
    d(i - 1, i - 1) = hbar / h0;
    d(i - 1, i) = -hbar / h0 - hbar / h1;
    d(i - 1, i + 1) = hbar / h1;
  }
  return d;
}

namespace {

struct PenalizedFit {
  Eigen::VectorXd beta;
  double loglik = 0.0;
};

PenalizedFit fit_penalized(const Eigen::MatrixXd& design, const PackedStrata& p, const Eigen::MatrixXd& dtd,
                           double lambda) {
  Eigen::MatrixXd pen = lambda * dtd;
  pen.diagonal().array() += kRidge;
  NewtonOptions opts;
  // Rounding in the penalty gradient grows with lambda.
  opts.gradient_tol = 1e-8 * (1.0 + 2.0 * pen.diagonal().maxCoeff());
  opts.separation_bound = std::numeric_limits<double>::infinity();
  opts.max_iterations = 100;
  auto r = detail::newton_clogit(design, p, &pen, opts);
  if (!r.singular.empty()) throw ConvergenceError("singular penalized spline Hessian");
  if (!r.beta.allFinite()) throw ConvergenceError("spline fit diverged");
  PenalizedFit out;
  out.beta = r.beta;
  out.loglik = clogit_loglik(design, p, r.beta);
  return out;
}

}  // namespace

SplineFit fit_clogit_spline(const StrataDataset& d, std::size_t feature, const SplineSettings& s) {
  s.validate();
  if (feature >= d.n_features())
    throw ConfigError("spline feature index " + std::to_string(feature) + " out of range");
  const PackedStrata p = pack_strata(d);
  const Eigen::RowVectorXd xs = p.x.row(static_cast<Eigen::Index>(feature));

  SplineFit fit;
  fit.feature = feature;
  fit.basis_degree = s.degree;
  fit.knots = quantile_knots(std::vector<double>(xs.data(), xs.data() + xs.size()), s.interior_knots, s.degree);
  const Eigen::MatrixXd design = bspline_design(fit.knots, s.degree, xs);
  const Eigen::MatrixXd dm = second_difference_matrix(fit.knots, s.degree);
  const Eigen::MatrixXd dtd = dm.transpose() * dm;

  if (s.fixed_penalty) {
    fit.penalty = *s.fixed_penalty;
  } else if (s.penalty_grid.size() == 1) {
    fit.penalty = s.penalty_grid.front();
  } else {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p.n_strata()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    CounterRng rng(derive_seed(s.seed, {0x53504C}));
    shuffle(order, rng);
    const int folds = std::min<int>(s.folds, static_cast<int>(order.size()));
    if (folds < 2) throw DataError("too few strata for cross-validation");

    std::vector<PackedStrata> train(folds), test(folds);
    std::vector<Eigen::MatrixXd> train_design(folds), test_design(folds);
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (std::size_t i = 0; i < order.size(); ++i)
        (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? te : tr).push_back(order[i]);
      train[f] = select_strata(p, tr);
      test[f] = select_strata(p, te);
      train_design[f] = bspline_design(fit.knots, s.degree, train[f].x.row(static_cast<Eigen::Index>(feature)));
      test_design[f] = bspline_design(fit.knots, s.degree, test[f].x.row(static_cast<Eigen::Index>(feature)));
    }
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : s.penalty_grid) {
      double held_out = 0.0;
      Eigen::Index n_test = 0;
      for (int f = 0; f < folds; ++f) {
        auto pf = fit_penalized(train_design[f], train[f], dtd, lambda);
        held_out -= clogit_loglik(test_design[f], test[f], pf.beta);
        n_test += test[f].n_strata();
      }
      const double cv = held_out / static_cast<double>(n_test);
      fit.cv_nll.push_back(cv);
      if (cv < best) {
        best = cv;
        fit.penalty = lambda;
      }
    }
  }

  auto pf = fit_penalized(design, p, dtd, fit.penalty);
  fit.coefficients = pf.beta;
  fit.loglik = pf.loglik;
  return fit;
}

Eigen::VectorXd spline_curve(const SplineFit& fit, const Eigen::VectorXd& grid) {
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    v[i] = bspline_basis(fit.knots, fit.basis_degree, grid[i]).dot(fit.coefficients);
  if (v.size() > 0) v.array() -= v.mean();
  return v;
}

double spline_value(const SplineFit& fit, double x) {
  const double lo = fit.lower(), hi = fit.upper();
  auto at = [&](double u) { return bspline_basis(fit.knots, fit.basis_degree, u).dot(fit.coefficients); };
  if (x >= lo && x <= hi) return at(x);
  const double h = 1e-6 * (hi - lo);
  if (x < lo) return at(lo) + (at(lo + h) - at(lo)) / h * (x - lo);
  return at(hi) + (at(hi) - at(hi - h)) / h * (x - hi);
}

SplineModel::SplineModel(std::size_t n_features, SplineFit fit) : n_features_(n_features), fit_(std::move(fit)) {
  if (fit_.feature >= n_features_) throw ConfigError("spline feature index out of range");
  if (static_cast<std::size_t>(fit_.coefficients.size()) != fit_.n_basis())
    throw ConfigError("spline coefficient count does not match the knot vector");
}

Eigen::VectorXd SplineModel::score(const Eigen::MatrixXd& x, std::span<const int>, std::span<const int>) const {
  if (static_cast<std::size_t>(x.rows()) != n_features_)
    throw DataError("spline model expects " + std::to_string(n_features_) + " features");
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    out[i] = spline_value(fit_, x(static_cast<Eigen::Index>(fit_.feature), i));
  return out;
}

}  // namespace ssf::glm
