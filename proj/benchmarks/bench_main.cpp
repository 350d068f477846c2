#include "pinn/loss.hpp"
#include "pinn/network.hpp"
#include "pinn/optim.hpp"
#include "pinn/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace pinn;

namespace {

void BM_ShmLossAndGradient(benchmark::State& state) {
  const ProblemSpec problem{ShmParams::from_omega0(20.0)};
  const NetworkParams net = init_network({1, 64, 64, 64, 64, 1}, 0);
  const PointSet pts = build_point_set(SamplingPlan::shm_default(), problem);
  const LossWeights w = LossWeights::shm_default();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_loss_parts(net, pts, problem, w));
  }
}
BENCHMARK(BM_ShmLossAndGradient)->Unit(benchmark::kMillisecond);

void BM_WaveLossAndGradient(benchmark::State& state) {
  const ProblemSpec problem{WaveParams{1.0}};
  const NetworkParams net = init_network({2, 64, 64, 64, 64, 1}, 0);
  const PointSet pts = build_point_set(SamplingPlan::wave_default(), problem);
  const LossWeights w = LossWeights::wave_default();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_loss_parts(net, pts, problem, w, threads));
  }
}
BENCHMARK(BM_WaveLossAndGradient)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const NetworkParams net = init_network({2, 64, 64, 64, 64, 1}, 0);
  const Eigen::MatrixXd points = Eigen::MatrixXd::Random(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(net, points));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(512)->Arg(10000);

void BM_Sobol(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sobol_2d(static_cast<std::size_t>(state.range(0)), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sobol)->Arg(512)->Arg(1 << 16);

void BM_LbfgsDirection(benchmark::State& state) {
  optim::LbfgsState s;
  const Eigen::Index n = 12737;
  for (int i = 0; i < s.options.memory; ++i) {
    const Eigen::VectorXd step = Eigen::VectorXd::Random(n);
    s.history.push_back({step, 2.0 * step, 1.0 / (2.0 * step.squaredNorm())});
  }
  const Eigen::VectorXd g = Eigen::VectorXd::Random(n);
  for (auto _ : state) benchmark::DoNotOptimize(optim::lbfgs_direction(s, g));
}
BENCHMARK(BM_LbfgsDirection);

}  // namespace
BENCHMARK_MAIN();
