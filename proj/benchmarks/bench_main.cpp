#include <benchmark/benchmark.h>

#include "mdpn/assignment.hpp"
#include "mdpn/heatmap.hpp"
#include "mdpn/pipeline.hpp"
#include "mdpn/sequence.hpp"
#include "mdpn/suppression.hpp"
#include "mdpn/trainer.hpp"

namespace {

using namespace mdpn;

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  CostMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c(i, j) = rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_hungarian(c));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_Decode(benchmark::State& state) {
  const auto& set = builtin_joint_set("posetrack");
  Rng rng(2);
  std::vector<std::optional<GridPoint>> joints;
  for (std::size_t i = 0; i < set.count(); ++i) joints.push_back(GridPoint{rng.uniform(4, 43), rng.uniform(4, 59)});
  const Heatmap h = render_target(joints, 2.25, 64, 48).heatmap;
  const DecodeOptions opts{state.range(0) ? 1.0 : 0.0, true};
  for (auto _ : state) benchmark::DoNotOptimize(decode(h, opts));
}
BENCHMARK(BM_Decode)->Arg(0)->Arg(1);

void BM_OksNms(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<PersonInstance> v(n);
  for (auto& p : v) {
    p.joint_set = "posetrack";
    p.box = {rng.uniform(0, 500), rng.uniform(0, 300), 100, 200};
    p.score = rng.uniform();
    for (int k = 0; k < 15; ++k) p.keypoints.push_back({p.box.x + rng.uniform(0, 100), p.box.y + rng.uniform(0, 200), 1, true});
  }
  const OksConstants consts;
  for (auto _ : state) benchmark::DoNotOptimize(oks_nms(v, 0.4, consts));
}
BENCHMARK(BM_OksNms)->Arg(8)->Arg(64);

void BM_PipelineGoldenSequence(benchmark::State& state) {
  const Sequence seq = make_sequence();
  const PipelineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(cfg, seq.frames));
}
BENCHMARK(BM_PipelineGoldenSequence)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  std::vector<DomainData> domains;
  for (const auto& d : default_domains()) domains.push_back({d, 16, 0});
  const Datasets data = make_datasets(domains, 1);
  ToyNetworkConfig cfg{1, 32, 24, 16, {{"coco", 17}, {"mpii", 16}, {"posetrack", 15}}};
  ToyNetwork net = ToyNetwork::initialise(cfg, 1);
  std::vector<Sample> batch;
  for (const auto& [name, samples] : data.train) batch.push_back(samples.front());
  batch.push_back(data.train.at("coco")[1]);
  for (auto _ : state) {
    const auto g = gradients(net, batch, LossSpec::ohkm(8));
    sgd_update(net, g, 1e-3);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
