#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssf/rng.hpp"

namespace ssf::sim {

/// Selection-independent movement kernel: Gamma step lengths and von Mises
/// turning angles.
struct MovementKernel {
  double gamma_shape = 2.0;
  double gamma_rate = 1.0;
  double vm_mu = 0.0;
  double vm_kappa = 0.5;

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct StepObservation {
  double step_length = 0.0;
  double turning_angle = 0.0;
};

struct CandidateStep {
  Point2 position;
  double length = 0.0;
  double turn = 0.0;  // relative to the heading, in (-pi, pi]
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a) noexcept;

/// von Mises draw by the Best-Fisher rejection sampler.
double sample_von_mises(double mu, double kappa, CounterRng& rng);

/// Maximum-likelihood Gamma (Newton on the shape) plus circular-mean /
/// A-inverse von Mises estimates. Needs >= 30 observations with positive
/// lengths; throws DataError on degenerate input.
MovementKernel fit_movement_kernel(std::span<const StepObservation> steps);

/// n candidate endpoints from `origin`, each displaced by a Gamma length at
/// bearing heading + turn.
std::vector<Point2> sample_candidate_steps(Point2 origin, double heading,
                                           const MovementKernel& kernel, int n,
                                           std::uint64_t seed);

std::vector<CandidateStep> sample_candidates(Point2 origin, double heading,
                                             const MovementKernel& kernel, int n,
                                             CounterRng& rng);

}  // namespace ssf::sim
