#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssf/net/network.hpp"
#include "ssf/packed.hpp"
#include "ssf/rng.hpp"

namespace ssf::net {

enum class Optimizer { sgd, adam };

const char* to_string(Optimizer o) noexcept;
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 150;
  double learning_rate = 0.01;
  int batch_strata = 50;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
  // Early stopping holds out validation_fraction of the strata and stops
  // after `patience` epochs without improvement, restoring the best weights.
  std::optional<int> early_stop_patience;
  double validation_fraction = 0.1;

  void validate() const;
};

struct FitTrace {
  std::vector<double> train_nll;       // per-epoch mean stratum NLL
  std::vector<double> validation_nll;  // empty without early stopping
  std::vector<std::string> warnings;

  std::size_t epochs_run() const noexcept { return train_nll.size(); }
};

struct TrainResult {
  SsfNetwork net;
  FitTrace trace;
};

/// Mean stratum NLL over `strata` (indices into `data`) and, when `grad` is
/// non-null, its exact gradient. The penalty l2 |theta|^2 + l1 |theta|_1 is
/// added when `with_penalty` is set. Dropout is active only when
/// `dropout_rng` is non-null.
double loss_and_gradient(const SsfNetwork& net, const PackedStrata& data,
                         std::span<const Eigen::Index> strata, Parameters* grad,
                         bool with_penalty = true, CounterRng* dropout_rng = nullptr);

/// Minimizes mean stratum NLL plus penalty with mini-batches of strata,
/// reshuffled every epoch from cfg.seed. Throws ConvergenceError if the loss
/// becomes non-finite.
TrainResult train(SsfNetwork net, const PackedStrata& data, const TrainConfig& cfg);
TrainResult train(SsfNetwork net, const StrataDataset& data, const TrainConfig& cfg);

/// Max relative error between the analytic gradient of one stratum's NLL and
/// central finite differences over every parameter:
/// |a - n| / max(|a| + |n|, 1e-4). Requires epsilon in (0, 1e-3].
double gradient_check(const SsfNetwork& net, const PackedStrata& data, Eigen::Index stratum,
                      double epsilon);
double gradient_check(const SsfNetwork& net, const std::vector<StepRecord>& stratum,
                      double epsilon);

}  // namespace ssf::net
