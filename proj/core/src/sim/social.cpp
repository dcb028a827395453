#include "ssf/sim/social.hpp"

#include <Eigen/Core>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>

#include "ssf/error.hpp"
#include "ssf/rng.hpp"
#include "ssf/sim/selection.hpp"

namespace ssf::sim {

void SocialSpec::validate() const {
  if (n_groups < 1) throw ConfigError("n_groups must be >= 1");
  if (individuals_per_group < 1) throw ConfigError("individuals_per_group must be >= 1");
  if (n_individuals() < 2) throw ConfigError("social simulation needs at least two individuals");
  if (group_distance_effect.size() != static_cast<std::size_t>(n_groups)) {
    throw ConfigError("group_distance_effect needs one entry per group (" + std::to_string(n_groups) +
                      "), got " + std::to_string(group_distance_effect.size()));
  }
  if (!(arena.x_max > arena.x_min) || !(arena.y_max > arena.y_min)) {
    throw ConfigError("arena bounds are empty");
  }
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (n_controls < 1) throw ConfigError("n_controls must be >= 1");
  kernel.validate();
}

namespace {

bool inside(const Arena& a, Point2 p) noexcept {
  return p.x >= a.x_min && p.x <= a.x_max && p.y >= a.y_min && p.y <= a.y_max;
}

double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

SocialSimulation simulate_social(const SocialSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = spec.n_individuals();
  const int k = spec.n_controls + 1;
  CounterRng init_rng(derive_seed(seed, {1}));
  CounterRng move_rng(derive_seed(seed, {2}));
  CounterRng pick_rng(derive_seed(seed, {3}));

  std::vector<Point2> pos(static_cast<std::size_t>(n));
  std::vector<double> heading(static_cast<std::size_t>(n));
  const Arena& a = spec.arena;
  for (int i = 0; i < n; ++i) {
    pos[i] = {a.x_min + (a.x_max - a.x_min) * init_rng.uniform(),
              a.y_min + (a.y_max - a.y_min) * init_rng.uniform()};
    heading[i] = std::numbers::pi * (2.0 * init_rng.uniform() - 1.0);
  }

  SocialSimulation out;
  out.opponent_group.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.opponent_group[i] = spec.group_of(i);

  StrataDataset& d = out.data;
  d.feature_names = {"dist"};
  d.n_individuals = n;
  d.n_opponents = n;
  d.records.reserve(static_cast<std::size_t>(spec.n_steps) * n * k);

  std::vector<Point2> next(pos.size());
  std::vector<double> next_heading(heading.size());
  std::int64_t stratum = 0;
  std::vector<CandidateStep> cand;
  cand.reserve(static_cast<std::size_t>(k));
  Eigen::VectorXd score(k);

  for (int t = 0; t < spec.n_steps; ++t) {
    for (int i = 0; i < n; ++i) {
      int opp = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dist = distance(pos[i], pos[j]);
        if (dist < best) {
          best = dist;
          opp = j;
        }
      }

      cand.clear();
      long attempts = 0;
      long rejected = 0;
      while (static_cast<int>(cand.size()) < k) {
        auto c = sample_candidates(pos[i], heading[i], spec.kernel, 1, move_rng).front();
        ++attempts;
        if (inside(a, c.position)) {
          cand.push_back(c);
        } else {
          ++rejected;
          if (attempts >= 100 && rejected * 100 > attempts * 99) {
            throw DataError("arena too small for the movement kernel: over 99% of candidate steps "
                            "fall outside the arena");
          }
        }
      }

      // Raw distances enter the selection score; pooled centering afterwards
      // subtracts one constant from every candidate, which leaves
      // within-stratum probabilities unchanged.
      const double beta = spec.group_distance_effect[static_cast<std::size_t>(spec.group_of(opp))];
      for (int c = 0; c < k; ++c) score[c] = beta * distance(cand[c].position, pos[opp]);
      if (!score.allFinite()) throw DataError("social selection score is not finite");
      Eigen::VectorXd prob = (score.array() - score.maxCoeff()).exp();
      prob /= prob.sum();
      const auto chosen = draw_categorical(prob, pick_rng.uniform());

      for (int c = 0; c < k; ++c) {
        StepRecord r;
        r.stratum_id = stratum;
        r.is_case = c == chosen;
        r.covariates = {distance(cand[c].position, pos[opp])};
        r.individual_id = i;
        r.opponent_id = opp;
        r.step_length = cand[c].length;
        r.turning_angle = cand[c].turn;
        d.records.push_back(std::move(r));
      }
      const auto& pick = cand[static_cast<std::size_t>(chosen)].position;
      next[i] = pick;
      next_heading[i] = std::atan2(pick.y - pos[i].y, pick.x - pos[i].x);
      ++stratum;
    }
    pos.swap(next);
    heading.swap(next_heading);
  }

  d = center_covariates(d);
  return out;
}

std::string social_truth_json(const SocialSpec& spec, std::uint64_t seed) {
  nlohmann::json j;
  j["kind"] = "social";
  j["seed"] = seed;
  j["n_groups"] = spec.n_groups;
  j["individuals_per_group"] = spec.individuals_per_group;
  j["group_distance_effect"] = spec.group_distance_effect;
  j["arena"] = {spec.arena.x_min, spec.arena.x_max, spec.arena.y_min, spec.arena.y_max};
  j["kernel"] = {{"gamma_shape", spec.kernel.gamma_shape},
                 {"gamma_rate", spec.kernel.gamma_rate},
                 {"vm_mu", spec.kernel.vm_mu},
                 {"vm_kappa", spec.kernel.vm_kappa}};
  j["n_steps"] = spec.n_steps;
  j["n_controls"] = spec.n_controls;
  std::vector<int> groups;
  for (int i = 0; i < spec.n_individuals(); ++i) groups.push_back(spec.group_of(i));
  j["opponent_group"] = groups;
  return j.dump(2) + "\n";
}

SocialSpec social_spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SocialSpec s;
    s.n_groups = j.at("n_groups").get<int>();
    s.individuals_per_group = j.at("individuals_per_group").get<int>();
    s.group_distance_effect = j.at("group_distance_effect").get<std::vector<double>>();
    const auto box = j.at("arena").get<std::vector<double>>();
    if (box.size() != 4) throw ConfigError("arena must have four bounds");
    s.arena = {box[0], box[1], box[2], box[3]};
    const auto& kj = j.at("kernel");
    s.kernel = {kj.at("gamma_shape").get<double>(), kj.at("gamma_rate").get<double>(),
                kj.at("vm_mu").get<double>(), kj.at("vm_kappa").get<double>()};
    s.n_steps = j.at("n_steps").get<int>();
    s.n_controls = j.at("n_controls").get<int>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed social truth JSON: ") + e.what());
  }
}

}  // namespace ssf::sim
