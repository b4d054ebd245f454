// Parallel kernels against their serial references on the benchmark feeder.

#include <benchmark/benchmark.h>

#include <random>

#include "pmufdl/campaign.hpp"
#include "pmufdl/grid_io.hpp"

using namespace pmufdl;

namespace {

const GridModel& bench() {
  static const GridModel g = loadGrid(std::string(PMUFDL_DATA_DIR) + "/benchmark17.json");
  return g;
}

const EstimatorBank& bank() {
  static const EstimatorBank b(bench(), bench().monitoredNodes(),
                               computeClusters(bench(), bench().monitoredNodes()),
                               NoiseParams{});
  return b;
}

Eigen::VectorXd randomMeasurement() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 100.0);
  Eigen::VectorXd z(bank().layout().measurementSize());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return z;
}

void BM_BankParallel(benchmark::State& state) {
  const Eigen::VectorXd z = randomMeasurement();
  for (auto _ : state) benchmark::DoNotOptimize(bank().evaluate(z));
}
BENCHMARK(BM_BankParallel);

void BM_BankSerial(benchmark::State& state) {
  const Eigen::VectorXd z = randomMeasurement();
  for (auto _ : state) benchmark::DoNotOptimize(bank().evaluateSerial(z));
}
BENCHMARK(BM_BankSerial);

CampaignOptions campaignOptions(benchmark::State& state) {
  CampaignOptions opt;
  opt.runs = static_cast<std::size_t>(state.range(0));
  return opt;
}

const std::vector<FaultScenario>& scenarios() {
  static const auto s =
      loadScenarios(std::string(PMUFDL_DATA_DIR) + "/scenarios.json", bench());
  return s;
}

void BM_CampaignParallel(benchmark::State& state) {
  const CampaignOptions opt = campaignOptions(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(runCampaign(bench(), bench().monitoredNodes(), scenarios(), opt));
  }
}
BENCHMARK(BM_CampaignParallel)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CampaignSerial(benchmark::State& state) {
  const CampaignOptions opt = campaignOptions(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        runCampaignSerial(bench(), bench().monitoredNodes(), scenarios(), opt));
  }
}
BENCHMARK(BM_CampaignSerial)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
