#include <benchmark/benchmark.h>

#include <tattnet/metrics.hpp>
#include <tattnet/model.hpp>
#include <tattnet/synthetic.hpp>
#include <tattnet/tensor.hpp>

#include <random>

using namespace tattnet;

namespace {

PatientJourney journey_with_visits(std::size_t T) {
  SyntheticConfig c;
  c.journeys = 1;
  c.min_visits = c.max_visits = T;
  return generate_synthetic(c, 7).front();
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  ModelParams model = assemble_model(ModelConfig{});
  const PatientJourney j = journey_with_visits(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(forward(tape, model, j).y_hat.value()[1]);
  }
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(28)->Arg(48)->Unit(benchmark::kMicrosecond);

static void BM_ForwardBackward(benchmark::State& state) {
  ModelParams model = assemble_model(ModelConfig{});
  const PatientJourney j = journey_with_visits(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    Var loss = journey_loss(forward(tape, model, j).y_hat, j.label, ClassWeights{});
    tape.backward(loss);
    benchmark::ClobberMemory();
  }
  model.zero_grad();
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(28)->Arg(48)->Unit(benchmark::kMicrosecond);

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Tensor a({n, n}), b({n, n});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = normal(rng), b[i] = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b)[0]);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64);

static void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit;
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(unit(rng));
    s.labels.push_back(i % 5 == 0 ? 1 : 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auroc(s));
}
BENCHMARK(BM_Auroc)->Arg(300)->Arg(10000);

BENCHMARK_MAIN();
