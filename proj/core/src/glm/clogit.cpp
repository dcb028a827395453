#include "ssf/glm/clogit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ssf/error.hpp"
#include "newton.hpp"

namespace ssf::glm {

void FormulaSpec::validate(std::size_t n_features) const {
  if (n_terms() == 0) throw ConfigError("formula has no terms");
  std::set<std::size_t> mains;
  for (auto j : main_effects) {
    if (j >= n_features)
      throw ConfigError("formula main effect index " + std::to_string(j) + " out of range");
    if (!mains.insert(j).second)
      throw ConfigError("duplicate main effect " + std::to_string(j));
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (auto [p, q] : interactions) {
    if (p >= n_features || q >= n_features)
      throw ConfigError("formula interaction index out of range");
    if (p == q) throw ConfigError("interaction of a feature with itself");
    if (!pairs.insert({std::min(p, q), std::max(p, q)}).second)
      throw ConfigError("duplicate interaction term");
  }
}

std::vector<std::string> FormulaSpec::term_names(const std::vector<std::string>& features) const {
  auto name = [&](std::size_t j) {
    return j < features.size() ? features[j] : "x" + std::to_string(j + 1);
  };
  std::vector<std::string> out;
  for (auto j : main_effects) out.push_back(name(j));
  for (auto [p, q] : interactions) out.push_back(name(p) + ":" + name(q));
  return out;
}

std::string FormulaSpec::to_string(const std::vector<std::string>& features) const {
  std::string s;
  for (const auto& t : term_names(features)) {
    if (!s.empty()) s += " + ";
    s += t;
  }
  return s;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::size_t lookup(const std::string& name, const std::vector<std::string>& features) {
  auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) throw ConfigError("unknown feature '" + name + "' in formula");
  return static_cast<std::size_t>(it - features.begin());
}

}  // namespace

FormulaSpec FormulaSpec::parse(const std::string& text, const std::vector<std::string>& features) {
  FormulaSpec f;
  auto add_main = [&](std::size_t j) {
    if (std::find(f.main_effects.begin(), f.main_effects.end(), j) == f.main_effects.end())
      f.main_effects.push_back(j);
  };
  auto add_pair = [&](std::size_t p, std::size_t q) {
    if (p == q) throw ConfigError("interaction of a feature with itself");
    for (auto [a, b] : f.interactions)
      if ((a == p && b == q) || (a == q && b == p)) return;
    f.interactions.emplace_back(p, q);
  };

  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, '+')) {
    tok = trim(tok);
    if (tok.empty()) throw ConfigError("empty term in formula '" + text + "'");
    if (tok == ".") {
      for (std::size_t j = 0; j < features.size(); ++j) add_main(j);
      continue;
    }
    auto colon = tok.find(':');
    auto star = tok.find('*');
    if (colon != std::string::npos || star != std::string::npos) {
      auto at = colon != std::string::npos ? colon : star;
      auto a = lookup(trim(tok.substr(0, at)), features);
      auto b = lookup(trim(tok.substr(at + 1)), features);
      if (star != std::string::npos) {
        add_main(a);
        add_main(b);
      }
      add_pair(a, b);
      continue;
    }
    add_main(lookup(tok, features));
  }
  f.validate(features.size());
  return f;
}

FormulaSpec FormulaSpec::main_only(std::size_t n_features) {
  FormulaSpec f;
  for (std::size_t j = 0; j < n_features; ++j) f.main_effects.push_back(j);
  return f;
}

FormulaSpec FormulaSpec::all_pairs(std::size_t n_features) {
  FormulaSpec f = main_only(n_features);
  for (std::size_t p = 0; p < n_features; ++p)
    for (std::size_t q = p + 1; q < n_features; ++q) f.interactions.emplace_back(p, q);
  return f;
}

Eigen::MatrixXd design_matrix(const FormulaSpec& f, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(f.n_terms()), x.cols());
  Eigen::Index r = 0;
  for (auto j : f.main_effects) out.row(r++) = x.row(static_cast<Eigen::Index>(j));
  for (auto [p, q] : f.interactions)
    out.row(r++) = x.row(static_cast<Eigen::Index>(p)).cwiseProduct(x.row(static_cast<Eigen::Index>(q)));
  return out;
}

double clogit_loglik(const Eigen::MatrixXd& design, const PackedStrata& d, const Eigen::VectorXd& beta,
                     Eigen::VectorXd* gradient) {
  Eigen::RowVectorXd eta = beta.transpose() * design;
  if (gradient) gradient->setZero(design.rows());
  double ll = 0.0;
  for (Eigen::Index s = 0; s < d.n_strata(); ++s) {
    const Eigen::Index a = d.start[s], n = d.size_of(s);
    auto seg = eta.segment(a, n);
    const double m = seg.maxCoeff();
    Eigen::RowVectorXd w = (seg.array() - m).exp();
    const double z = w.sum();
    ll += eta[d.case_col[s]] - m - std::log(z);
    if (gradient) {
      w /= z;
      *gradient += design.col(d.case_col[s]) - design.middleCols(a, n) * w.transpose();
    }
  }
  return ll;
}

namespace detail {

NewtonResult newton_clogit(const Eigen::MatrixXd& design, const PackedStrata& d,
                           const Eigen::MatrixXd* penalty, const NewtonOptions& opts) {
  const Eigen::Index k = design.rows();
  NewtonResult r;
  r.beta = Eigen::VectorXd::Zero(k);

  auto objective = [&](const Eigen::VectorXd& b, Eigen::VectorXd* g) {
    double v = clogit_loglik(design, d, b, g);
    if (penalty) {
      v -= b.dot(*penalty * b);
      if (g) *g -= 2.0 * (*penalty * b);
    }
    return v;
  };

  Eigen::VectorXd g;
  double f = objective(r.beta, &g);
  for (r.iterations = 0;; ++r.iterations) {
    if (g.cwiseAbs().maxCoeff() < opts.gradient_tol) {
      r.converged = true;
      break;
    }
    if (r.iterations >= opts.max_iterations) break;

    r.information = information(design, d, r.beta, penalty);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(r.information);
    const double scale = std::max(r.information.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    bool singular = ldlt.info() != Eigen::Success ||
                    ldlt.vectorD().minCoeff() <= 1e-12 * scale;
    if (singular) {
      r.singular = singular_directions(r.information);
      return r;
    }
    Eigen::VectorXd step = ldlt.solve(g);
    double t = 1.0;
    Eigen::VectorXd next, gn;
    double fn = 0.0;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      next = r.beta + t * step;
      fn = objective(next, &gn);
      if (std::isfinite(fn) && fn >= f - 1e-12 * std::abs(f)) break;
    }
    r.beta = next;
    f = fn;
    g = gn;
    if (r.beta.cwiseAbs().maxCoeff() > opts.separation_bound) {
      r.separated = true;
      return r;
    }
  }
  r.gradient = g;
  r.objective = f;
  r.information = information(design, d, r.beta, penalty);
  return r;
}

Eigen::MatrixXd information(const Eigen::MatrixXd& design, const PackedStrata& d,
                            const Eigen::VectorXd& beta, const Eigen::MatrixXd* penalty) {
  const Eigen::Index k = design.rows();
  Eigen::RowVectorXd eta = beta.transpose() * design;
  // Weighted within-stratum centered design: I = Q Q^T.
  Eigen::MatrixXd q(k, design.cols());
  for (Eigen::Index s = 0; s < d.n_strata(); ++s) {
    const Eigen::Index a = d.start[s], n = d.size_of(s);
    auto seg = eta.segment(a, n);
    Eigen::RowVectorXd w = (seg.array() - seg.maxCoeff()).exp();
    w /= w.sum();
    auto block = design.middleCols(a, n);
    Eigen::VectorXd mean = block * w.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      q.col(a + i) = (block.col(i) - mean) * std::sqrt(w[i]);
  }
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k, k);
  info.selfadjointView<Eigen::Lower>().rankUpdate(q);
  info = info.selfadjointView<Eigen::Lower>();
  if (penalty) info += 2.0 * *penalty;
  return info;
}

std::vector<std::size_t> singular_directions(const Eigen::MatrixXd& info) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const auto& ev = es.eigenvalues();
  const double tol = std::max(ev.cwiseAbs().maxCoeff(), 1.0) * 1e-10;
  std::vector<std::size_t> cols;
  for (Eigen::Index j = 0; j < info.rows(); ++j) {
    for (Eigen::Index e = 0; e < ev.size(); ++e) {
      if (ev[e] <= tol && std::abs(es.eigenvectors()(j, e)) > 1e-6) {
        cols.push_back(static_cast<std::size_t>(j));
        break;
      }
    }
  }
  return cols;
}

}  // namespace detail

namespace {

// Covariance from information; terms in a null direction get +inf variance.
Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& info, std::vector<std::size_t>& singular) {
  singular = detail::singular_directions(info);
  const Eigen::Index k = info.rows();
  if (singular.empty()) {
    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    return 0.5 * (cov + cov.transpose());
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < k; ++j)
    if (std::find(singular.begin(), singular.end(), static_cast<std::size_t>(j)) == singular.end())
      keep.push_back(j);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  if (!keep.empty()) {
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = info(keep[a], keep[b]);
    Eigen::MatrixXd inv = sub.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) cov(keep[a], keep[b]) = 0.5 * (inv(a, b) + inv(b, a));
  }
  for (auto j : singular) cov(j, j) = std::numeric_limits<double>::infinity();
  return cov;
}

std::string join_terms(const std::vector<std::string>& names, const std::vector<std::size_t>& idx) {
  std::string s;
  for (auto j : idx) {
    if (!s.empty()) s += ", ";
    s += j < names.size() ? names[j] : std::to_string(j);
  }
  return s;
}

}  // namespace

ClogitFit fit_clogit_glm(const PackedStrata& d, const std::vector<std::string>& feature_names,
                         const FormulaSpec& f, NewtonOptions opts) {
  f.validate(static_cast<std::size_t>(d.n_features()));
  ClogitFit fit;
  fit.formula = f;
  fit.term_names = f.term_names(feature_names);
  Eigen::MatrixXd design = design_matrix(f, d.x);

  auto r = detail::newton_clogit(design, d, nullptr, opts);
  if (r.separated) {
    throw ConvergenceError("separation detected: a coefficient exceeded |beta| > " +
                           std::to_string(opts.separation_bound) + " during Newton iterations");
  }
  if (!r.singular.empty()) {
    throw ConvergenceError("singular Hessian (rank-deficient design) in terms: " +
                           join_terms(fit.term_names, r.singular));
  }
  fit.coefficients = r.beta;
  fit.converged = r.converged;
  fit.n_iterations = r.iterations;
  fit.loglik = r.objective;
  fit.covariance = covariance_of(r.information, fit.singular_terms);
  return fit;
}

ClogitFit fit_clogit_glm(const StrataDataset& d, const FormulaSpec& f, NewtonOptions opts) {
  if (!d.centered)
    throw DataError("fit_clogit_glm requires centered covariates; call center_covariates first");
  return fit_clogit_glm(pack_strata(d), d.feature_names, f, opts);
}

double two_sided_p(double z) noexcept { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<WaldRow> wald_inference(const ClogitFit& fit) {
  if (!fit.converged)
    throw ConvergenceError("Wald inference requires a converged fit (stopped after " +
                           std::to_string(fit.n_iterations) + " iterations)");
  std::vector<WaldRow> rows;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    WaldRow w;
    w.term = static_cast<std::size_t>(j) < fit.term_names.size() ? fit.term_names[j]
                                                                 : "b" + std::to_string(j + 1);
    w.estimate = fit.coefficients[j];
    w.se = std::sqrt(std::max(fit.covariance(j, j), 0.0));
    w.z = w.se > 0.0 ? w.estimate / w.se : 0.0;
    w.p_value = w.se > 0.0 ? two_sided_p(w.z) : 1.0;
    w.ci_low = w.estimate - 1.96 * w.se;
    w.ci_high = w.estimate + 1.96 * w.se;
    rows.push_back(w);
  }
  return rows;
}

GlmModel::GlmModel(std::size_t n_features, ClogitFit fit) : n_features_(n_features), fit_(std::move(fit)) {
  fit_.formula.validate(n_features_);
  if (static_cast<std::size_t>(fit_.coefficients.size()) != fit_.formula.n_terms())
    throw ConfigError("GLM coefficient count does not match the formula");
}

Eigen::VectorXd GlmModel::score(const Eigen::MatrixXd& x, std::span<const int>, std::span<const int>) const {
  if (static_cast<std::size_t>(x.rows()) != n_features_)
    throw DataError("GLM expects " + std::to_string(n_features_) + " features, got " +
                    std::to_string(x.rows()));
  return (fit_.coefficients.transpose() * design_matrix(fit_.formula, x)).transpose();
}

}  // namespace ssf::glm
