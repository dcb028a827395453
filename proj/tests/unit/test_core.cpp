#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "ssf/error.hpp"
#include "ssf/model.hpp"
#include "ssf/packed.hpp"
#include "ssf/rng.hpp"

using namespace ssf;

namespace {

StrataDataset small_valid() {
  return testing::make_dataset(
      3, 6, 2, [](int s, int i) { return std::vector<double>{0.1 * s + i, -0.2 * i}; },
      [](int s) { return s % 6; });
}

bool has_rule(const ValidationReport& r, const std::string& rule) {
  for (const auto& v : r.violations)
    if (v.rule == rule) return true;
  return false;
}

}  // namespace

TEST_CASE("validate: well-formed dataset has no violations") {
  auto r = validate_dataset(small_valid());
  CHECK(r.ok());
  CHECK(r.violations.empty());
}

TEST_CASE("validate: two cases in one stratum") {
  auto d = small_valid();
  d.records[8].is_case = true;  // stratum 1 already has candidate 1 as case
  auto r = validate_dataset(d);
  CHECK_FALSE(r.ok());
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].rule == rules::kCaseCount);
  REQUIRE(r.violations[0].stratum_id.has_value());
  CHECK(*r.violations[0].stratum_id == 1);
}

TEST_CASE("validate: NaN covariate") {
  auto d = small_valid();
  d.records[3].covariates[1] = std::nan("");
  auto r = validate_dataset(d);
  CHECK_FALSE(r.ok());
  CHECK(has_rule(r, rules::kNonFinite));
}

TEST_CASE("validate: other invariants") {
  SUBCASE("stratum with one record") {
    auto d = small_valid();
    StepRecord lone;
    lone.stratum_id = 99;
    lone.is_case = true;
    lone.covariates = {0.0, 0.0};
    d.records.push_back(lone);
    CHECK(has_rule(validate_dataset(d), rules::kTooFewCandidates));
  }
  SUBCASE("ragged covariates") {
    auto d = small_valid();
    d.records[2].covariates.push_back(1.0);
    CHECK(has_rule(validate_dataset(d), rules::kCovariateLength));
  }
  SUBCASE("negative step length") {
    auto d = small_valid();
    d.records[0].step_length = -1.0;
    CHECK(has_rule(validate_dataset(d), rules::kStepLength));
  }
  SUBCASE("turning angle outside (-pi, pi]") {
    auto d = small_valid();
    d.records[0].turning_angle = -M_PI;
    CHECK(has_rule(validate_dataset(d), rules::kTurningAngle));
    d.records[0].turning_angle = M_PI;
    CHECK(validate_dataset(d).ok());
  }
  SUBCASE("no case") {
    auto d = small_valid();
    for (auto& r : d.records)
      if (r.stratum_id == 2) r.is_case = false;
    CHECK(has_rule(validate_dataset(d), rules::kCaseCount));
  }
  SUBCASE("empty") { CHECK_FALSE(validate_dataset(StrataDataset{}).ok()); }
}

TEST_CASE("validate leaves input unchanged") {
  auto d = small_valid();
  d.records[0].covariates[0] = std::nan("");
  std::ostringstream before, after;
  write_csv(before, d);
  (void)validate_dataset(d);
  write_csv(after, d);
  CHECK(before.str() == after.str());
}

TEST_CASE("center: column [0, 0.5, 1]") {
  auto d = testing::make_dataset(
      1, 3, 1, [](int, int i) { return std::vector<double>{0.5 * i}; }, [](int) { return 0; });
  auto c = center_covariates(d);
  CHECK(c.centered);
  CHECK(c.records[0].covariates[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(std::abs(c.records[1].covariates[0]) < 1e-15);
  CHECK(c.records[2].covariates[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("center: all-zero column unchanged") {
  auto d = testing::make_dataset(
      2, 3, 1, [](int, int) { return std::vector<double>{0.0}; }, [](int) { return 1; });
  auto c = center_covariates(d);
  for (const auto& r : c.records) CHECK(r.covariates[0] == 0.0);
}

TEST_CASE("center: uniform column of 10000 has mean 0") {
  CounterRng rng(5);
  auto d = testing::make_dataset(
      1000, 10, 1, [&](int, int) { return std::vector<double>{rng.uniform()}; }, [](int) { return 0; });
  auto c = center_covariates(d);
  long double sum = 0.0L;
  for (const auto& r : c.records) sum += r.covariates[0];
  CHECK(std::abs(static_cast<double>(sum / c.records.size())) < 1e-10);
}

TEST_CASE("center: refuses double centering; preserves structure; round-trips") {
  CounterRng rng(9);
  auto d = testing::make_dataset(
      40, 5, 3, [&](int, int) { return std::vector<double>{rng.uniform(), 3.0 + rng.uniform(), -rng.uniform()}; },
      [](int s) { return s % 5; });
  for (bool standardize : {false, true}) {
    auto c = center_covariates(d, {standardize});
    CHECK_THROWS_AS(center_covariates(c), DataError);
    CHECK(validate_dataset(c).ok());
    REQUIRE(c.records.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      CHECK(c.records[i].stratum_id == d.records[i].stratum_id);
      CHECK(c.records[i].is_case == d.records[i].is_case);
    }
    auto back = uncenter_covariates(c);
    for (std::size_t i = 0; i < d.records.size(); ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(back.records[i].covariates[j] - d.records[i].covariates[j]) < 1e-12);
    if (standardize) {
      for (double sd : column_sds(c)) CHECK(sd == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("CSV round trip is exact and byte stable") {
  auto d = small_valid();
  d.records[0].individual_id = 3;
  d.records[1].opponent_id = 0;
  d.records[2].step_length = 0.1 + 0.2;
  d.records[3].turning_angle = -1.0 / 3.0;
  d.n_individuals = 4;
  d.n_opponents = 1;
  std::ostringstream a;
  write_csv(a, d);
  CHECK(a.str().rfind("stratum_id,case,id,opp_id,sl_,ta_,x1,x2\n", 0) == 0);
  std::istringstream in(a.str());
  auto e = read_csv(in);
  REQUIRE(e.records.size() == d.records.size());
  CHECK(e.feature_names == d.feature_names);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    CHECK(e.records[i].covariates == d.records[i].covariates);
    CHECK(e.records[i].individual_id == d.records[i].individual_id);
    CHECK(e.records[i].opponent_id == d.records[i].opponent_id);
    CHECK(e.records[i].step_length == d.records[i].step_length);
    CHECK(e.records[i].turning_angle == d.records[i].turning_angle);
  }
  std::ostringstream b;
  write_csv(b, e);
  CHECK(a.str() == b.str());
}

TEST_CASE("CSV reader flags centered data and rejects malformed input") {
  auto c = center_covariates(small_valid());
  std::ostringstream a;
  write_csv(a, c);
  std::istringstream in(a.str());
  CHECK(read_csv(in).centered);

  std::istringstream bad("stratum_id,case\n1,0\n");
  CHECK_THROWS_AS(read_csv(bad), DataError);
  std::istringstream bad_num("stratum_id,case,id,opp_id,sl_,ta_,x1\n0,1,,,,,abc\n");
  CHECK_THROWS_AS(read_csv(bad_num), DataError);
}

TEST_CASE("stratum_nll hand values") {
  std::vector<double> tied{0.3, 0.3, 0.3, 0.3};
  CHECK(stratum_nll(tied, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(stratum_nll(tied, 2) == doctest::Approx(1.3863).epsilon(1e-4));
  std::vector<double> a{10.0, 0.0};
  CHECK(stratum_nll(a, 0) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-14));
  CHECK(stratum_nll(a, 0) == doctest::Approx(4.54e-5).epsilon(1e-3));
  std::vector<double> b{0.0, 10.0};
  CHECK(stratum_nll(b, 0) == doctest::Approx(10.0000454).epsilon(1e-9));
  CHECK_THROWS(stratum_nll(b, 2));
}

TEST_CASE("stratum_nll is stable for huge scores and shift invariant") {
  std::vector<double> s{1000.0, 999.0, 998.0};
  CHECK(std::isfinite(stratum_nll(s, 2)));
  CounterRng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(7);
    for (auto& x : v) x = 10.0 * (rng.uniform() - 0.5);
    const double shift = 100.0 * (rng.uniform() - 0.5);
    std::vector<double> w = v;
    for (auto& x : w) x += shift;
    const auto c = static_cast<std::size_t>(rng() % 7);
    CHECK(std::abs(stratum_nll(v, c) - stratum_nll(w, c)) < 1e-10);
  }
}

TEST_CASE("pack, softmax and select_strata") {
  auto d = small_valid();
  auto p = pack_strata(d);
  CHECK(p.n_strata() == 3);
  CHECK(p.n_records() == 18);
  CHECK(p.n_features() == 2);
  for (Eigen::Index s = 0; s < 3; ++s) CHECK(p.case_col[s] == p.start[s] + s % 6);

  CounterRng rng(3);
  Eigen::VectorXd scores(18);
  for (auto& x : scores) x = 20.0 * (rng.uniform() - 0.5);
  auto prob = stratum_softmax(scores, p);
  for (Eigen::Index s = 0; s < 3; ++s) CHECK(std::abs(prob.segment(p.start[s], 6).sum() - 1.0) < 1e-12);

  auto sel = select_strata(p, {2, 2, 0});
  CHECK(sel.n_strata() == 3);
  CHECK(sel.x.col(0) == p.x.col(p.start[2]));
  CHECK(sel.case_col[1] == 6 + (p.case_col[2] - p.start[2]));

  auto broken = d;
  broken.records[1].is_case = true;
  CHECK_THROWS_AS(pack_strata(broken), DataError);
}

TEST_CASE("mean_conditional_nll of zero scores is log k") {
  auto p = pack_strata(small_valid());
  CHECK(mean_conditional_nll(Eigen::VectorXd::Zero(18), p) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
}

TEST_CASE("derive_seed separates streams and is order sensitive") {
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
  CounterRng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  CounterRng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK((v >= 0.0 && v < 1.0));
  }
}
