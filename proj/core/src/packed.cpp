#include "ssf/packed.hpp"

#include <unordered_map>

#include "ssf/error.hpp"

namespace ssf {

PackedStrata pack_strata(const StrataDataset& d) {
  const auto report = validate_dataset(d);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw DataError("invalid dataset (" + std::to_string(report.violations.size()) +
                    " violation(s)); first: " + v.rule + ": " + v.message);
  }

  std::unordered_map<std::int64_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::int64_t> ids;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto sid = d.records[i].stratum_id;
    auto [it, inserted] = slot.emplace(sid, members.size());
    if (inserted) {
      members.emplace_back();
      ids.push_back(sid);
    }
    members[it->second].push_back(i);
  }

  PackedStrata p;
  const auto n = static_cast<Eigen::Index>(d.records.size());
  const auto f = static_cast<Eigen::Index>(d.n_features());
  p.x.resize(f, n);
  p.individual.reserve(d.records.size());
  p.opponent.reserve(d.records.size());
  p.stratum_id = std::move(ids);
  p.start.reserve(members.size() + 1);
  p.case_col.reserve(members.size());

  Eigen::Index col = 0;
  for (const auto& m : members) {
    p.start.push_back(col);
    for (std::size_t i : m) {
      const auto& r = d.records[i];
      for (Eigen::Index j = 0; j < f; ++j) p.x(j, col) = r.covariates[static_cast<std::size_t>(j)];
      p.individual.push_back(r.individual_id.value_or(-1));
      p.opponent.push_back(r.opponent_id.value_or(-1));
      if (r.is_case) p.case_col.push_back(col);
      ++col;
    }
  }
  p.start.push_back(col);
  return p;
}

PackedStrata select_strata(const PackedStrata& p, const std::vector<Eigen::Index>& strata) {
  Eigen::Index total = 0;
  for (auto s : strata) total += p.size_of(s);

  PackedStrata out;
  out.x.resize(p.x.rows(), total);
  out.individual.reserve(static_cast<std::size_t>(total));
  out.opponent.reserve(static_cast<std::size_t>(total));
  out.start.reserve(strata.size() + 1);
  Eigen::Index col = 0;
  for (auto s : strata) {
    const auto b = p.start[s];
    const auto len = p.size_of(s);
    out.start.push_back(col);
    out.stratum_id.push_back(p.stratum_id[s]);
    out.case_col.push_back(col + (p.case_col[s] - b));
    out.x.middleCols(col, len) = p.x.middleCols(b, len);
    for (Eigen::Index k = 0; k < len; ++k) {
      out.individual.push_back(p.individual[b + k]);
      out.opponent.push_back(p.opponent[b + k]);
    }
    col += len;
  }
  out.start.push_back(col);
  return out;
}

}  // namespace ssf
