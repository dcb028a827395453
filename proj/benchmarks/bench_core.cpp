#include <benchmark/benchmark.h>

#include <numeric>

#include "ssf/glm/clogit.hpp"
#include "ssf/glm/spline.hpp"
#include "ssf/net/train.hpp"
#include "ssf/packed.hpp"
#include "ssf/runtime.hpp"
#include "ssf/sim/selection.hpp"
#include "ssf/xai/xai.hpp"

namespace {

ssf::StrataDataset dataset(int strata, std::size_t features) {
  ssf::sim::SelectionSpec spec;
  spec.n_features = features;
  spec.betas.assign(features, 0.5);
  spec.n_strata = strata;
  return ssf::sim::simulate_selection(spec, 42);
}

ssf::net::SsfNetwork network(std::size_t features, int width) {
  ssf::net::ArchSpec a;
  a.n_features = features;
  a.hidden = {width, width};
  return ssf::net::build_network(a, 7);
}

void BM_Forward(benchmark::State& state) {
  const auto d = ssf::pack_strata(dataset(static_cast<int>(state.range(0)), 9));
  const auto net = network(9, 32);
  for (auto _ : state) benchmark::DoNotOptimize(net.score(d));
  state.SetItemsProcessed(state.iterations() * d.n_records());
}
BENCHMARK(BM_Forward)->Arg(200)->Arg(2000);

void BM_LossAndGradient(benchmark::State& state) {
  const auto d = ssf::pack_strata(dataset(2000, 9));
  const auto net = network(9, static_cast<int>(state.range(0)));
  std::vector<Eigen::Index> batch(50);
  std::iota(batch.begin(), batch.end(), Eigen::Index{0});
  auto grad = net.params().zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(ssf::net::loss_and_gradient(net, d, batch, &grad));
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_LossAndGradient)->Arg(16)->Arg(32)->Arg(64);

void BM_TrainEpoch(benchmark::State& state) {
  const auto d = ssf::pack_strata(dataset(2000, 1));
  ssf::net::TrainConfig t;
  t.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(ssf::net::train(network(1, 32), d, t).trace.train_nll.back());
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_ClogitNewton(benchmark::State& state) {
  const auto raw = dataset(2000, static_cast<std::size_t>(state.range(0)));
  const auto d = ssf::pack_strata(raw);
  const auto f = ssf::glm::FormulaSpec::all_pairs(raw.n_features());
  for (auto _ : state) benchmark::DoNotOptimize(ssf::glm::fit_clogit_glm(d, raw.feature_names, f).loglik);
}
BENCHMARK(BM_ClogitNewton)->Arg(1)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_SplineFixedPenalty(benchmark::State& state) {
  const auto d = dataset(2000, 1);
  ssf::glm::SplineSettings s;
  s.fixed_penalty = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(ssf::glm::fit_clogit_spline(d, 0, s).loglik);
}
BENCHMARK(BM_SplineFixedPenalty)->Unit(benchmark::kMillisecond);

void BM_AverageConditionalEffect(benchmark::State& state) {
  const auto d = ssf::pack_strata(dataset(2000, 9));
  const auto net = network(9, 32);
  for (auto _ : state) benchmark::DoNotOptimize(ssf::xai::average_conditional_effect(net, d, 0));
}
BENCHMARK(BM_AverageConditionalEffect)->Unit(benchmark::kMillisecond);

void BM_AleCurve(benchmark::State& state) {
  const auto d = ssf::pack_strata(dataset(2000, 1));
  const auto net = network(1, 32);
  for (auto _ : state) benchmark::DoNotOptimize(ssf::xai::ale_curve(net, d, 0, 20).centered_effect);
}
BENCHMARK(BM_AleCurve)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  ssf::configure_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
