#pragma once

// Template members of ssf::net::Parameters.

namespace ssf::net {

template <typename Fn>
void Parameters::for_each(Fn&& fn) {
  for (auto& l : layers) {
    fn(Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()));
    fn(Eigen::Map<Eigen::VectorXd>(l.bias.data(), l.bias.size()));
  }
  if (embedding.size()) fn(Eigen::Map<Eigen::VectorXd>(embedding.data(), embedding.size()));
  if (modulation.size()) fn(Eigen::Map<Eigen::VectorXd>(modulation.data(), modulation.size()));
}

template <typename Fn>
void Parameters::for_each(Fn&& fn) const {
  for (const auto& l : layers) {
    fn(Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size()));
    fn(Eigen::Map<const Eigen::VectorXd>(l.bias.data(), l.bias.size()));
  }
  if (embedding.size()) fn(Eigen::Map<const Eigen::VectorXd>(embedding.data(), embedding.size()));
  if (modulation.size()) {
    fn(Eigen::Map<const Eigen::VectorXd>(modulation.data(), modulation.size()));
  }
}

}  // namespace ssf::net
