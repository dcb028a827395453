#include "ssf/sim/kernel.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "ssf/error.hpp"

namespace ssf::sim {

using std::numbers::pi;

void MovementKernel::validate() const {
  if (!(gamma_shape > 0.0) || !std::isfinite(gamma_shape)) throw ConfigError("gamma_shape must be > 0");
  if (!(gamma_rate > 0.0) || !std::isfinite(gamma_rate)) throw ConfigError("gamma_rate must be > 0");
  if (!(vm_mu > -pi && vm_mu <= pi)) throw ConfigError("vm_mu must lie in (-pi, pi]");
  if (!(vm_kappa >= 0.0) || !std::isfinite(vm_kappa)) throw ConfigError("vm_kappa must be >= 0");
}

double wrap_angle(double a) noexcept {
  a = std::remainder(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

double sample_von_mises(double mu, double kappa, CounterRng& rng) {
  if (kappa < 1e-8) return wrap_angle(mu + pi * (2.0 * rng.uniform() - 1.0));
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  while (true) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double z = std::cos(pi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double u3 = rng.uniform();
      const double theta = std::acos(std::clamp(f, -1.0, 1.0));
      return wrap_angle(mu + (u3 > 0.5 ? theta : -theta));
    }
  }
}

namespace {

// Best & Fisher approximation to the inverse of A(kappa) = I1/I0.
double a_inverse(double rbar) {
  if (rbar < 0.53) return 2.0 * rbar + rbar * rbar * rbar + 5.0 * std::pow(rbar, 5) / 6.0;
  if (rbar < 0.85) return -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar);
  return 1.0 / (rbar * rbar * rbar - 4.0 * rbar * rbar + 3.0 * rbar);
}

}  // namespace

MovementKernel fit_movement_kernel(std::span<const StepObservation> steps) {
  if (steps.size() < 30) {
    throw std::invalid_argument("fit_movement_kernel needs >= 30 observations, got " +
                                std::to_string(steps.size()));
  }
  const double n = static_cast<double>(steps.size());
  double sum = 0.0, sum_log = 0.0, sum_cos = 0.0, sum_sin = 0.0;
  double min_len = steps.front().step_length, max_len = min_len;
  double min_ang = steps.front().turning_angle, max_ang = min_ang;
  for (const auto& s : steps) {
    if (!(s.step_length > 0.0)) throw std::invalid_argument("step lengths must be > 0");
    sum += s.step_length;
    sum_log += std::log(s.step_length);
    sum_cos += std::cos(s.turning_angle);
    sum_sin += std::sin(s.turning_angle);
    min_len = std::min(min_len, s.step_length);
    max_len = std::max(max_len, s.step_length);
    min_ang = std::min(min_ang, s.turning_angle);
    max_ang = std::max(max_ang, s.turning_angle);
  }
  if (min_len == max_len) throw DataError("all step lengths are equal; Gamma fit is degenerate");
  if (min_ang == max_ang) throw DataError("all turning angles are equal; von Mises fit is degenerate");

  const double mean = sum / n;
  const double s = std::log(mean) - sum_log / n;  // > 0 by Jensen
  double shape = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(shape) - boost::math::digamma(shape) - s;
    const double df = 1.0 / shape - boost::math::trigamma(shape);
    double next = shape - f / df;
    if (next <= 0.0) next = shape / 2.0;
    const bool done = std::abs(next - shape) < 1e-12 * shape;
    shape = next;
    if (done) break;
  }

  MovementKernel k;
  k.gamma_shape = shape;
  k.gamma_rate = shape / mean;
  const double c = sum_cos / n;
  const double sn = sum_sin / n;
  k.vm_mu = wrap_angle(std::atan2(sn, c));
  k.vm_kappa = a_inverse(std::min(std::hypot(c, sn), 1.0 - 1e-12));
  return k;
}

std::vector<CandidateStep> sample_candidates(Point2 origin, double heading,
                                             const MovementKernel& kernel, int n,
                                             CounterRng& rng) {
  if (n < 1) throw std::invalid_argument("sample_candidate_steps needs n >= 1");
  kernel.validate();
  std::gamma_distribution<double> length(kernel.gamma_shape, 1.0 / kernel.gamma_rate);
  std::vector<CandidateStep> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    CandidateStep c;
    c.length = length(rng);
    c.turn = sample_von_mises(kernel.vm_mu, kernel.vm_kappa, rng);
    const double bearing = heading + c.turn;
    c.position = {origin.x + c.length * std::cos(bearing), origin.y + c.length * std::sin(bearing)};
    out.push_back(c);
  }
  return out;
}

std::vector<Point2> sample_candidate_steps(Point2 origin, double heading,
                                           const MovementKernel& kernel, int n,
                                           std::uint64_t seed) {
  CounterRng rng(seed);
  auto steps = sample_candidates(origin, heading, kernel, n, rng);
  std::vector<Point2> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.position);
  return out;
}

}  // namespace ssf::sim
