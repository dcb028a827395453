#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ssf/dataset.hpp"
#include "ssf/packed.hpp"

namespace testing {

// Stratum s gets covariates fn(s, i) for candidate i; candidate `case_of(s)` is the case.
inline ssf::StrataDataset make_dataset(int n_strata, int k, std::size_t n_features,
                                       const std::function<std::vector<double>(int, int)>& fn,
                                       const std::function<int(int)>& case_of) {
  ssf::StrataDataset d;
  for (std::size_t j = 0; j < n_features; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  for (int s = 0; s < n_strata; ++s) {
    for (int i = 0; i < k; ++i) {
      ssf::StepRecord r;
      r.stratum_id = s;
      r.is_case = i == case_of(s);
      r.covariates = fn(s, i);
      d.records.push_back(r);
    }
  }
  return d;
}

// Conditional log-likelihood of a single slope, written directly from the
// definition with no shared code.
inline double loglik_1d(const ssf::StrataDataset& d, double beta) {
  double ll = 0.0;
  std::size_t a = 0;
  while (a < d.records.size()) {
    std::size_t b = a;
    while (b < d.records.size() && d.records[b].stratum_id == d.records[a].stratum_id) ++b;
    double z = 0.0, eta_case = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      const double e = beta * d.records[i].covariates[0];
      z += std::exp(e);
      if (d.records[i].is_case) eta_case = e;
    }
    ll += eta_case - std::log(z);
    a = b;
  }
  return ll;
}

// Exhaustive grid maximizer of loglik_1d.
inline double grid_mle_1d(const ssf::StrataDataset& d, double lo, double hi, double step) {
  double best = lo, best_ll = -INFINITY;
  const int n = static_cast<int>(std::llround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) {
    const double b = lo + i * step;
    const double ll = loglik_1d(d, b);
    if (ll > best_ll) {
      best_ll = ll;
      best = b;
    }
  }
  return best;
}

}  // namespace testing
