// Throughput benchmarks for the hot paths: feature pooling, movement
// prediction, tubelet growth (sequential vs batched), and LSTM stepping.

#include <benchmark/benchmark.h>

#include <random>

#include "tubekit/classifier.hpp"
#include "tubekit/experiments.hpp"
#include "tubekit/rng.hpp"
#include "tubekit/synthworld.hpp"
#include "tubekit/tpn.hpp"
#include "tubekit/tubelet.hpp"

namespace {

using namespace tubekit;

SyntheticVideo bench_video() {
  WorldConfig config;
  config.frames = 41;
  SyntheticVideo video = generate_video(config, 42);
  attach_proposals(video, ProposalConfig{});
  return video;
}

TpnModel bench_model(const SyntheticVideo& video, int window) {
  TpnModel model;
  model.window = window;
  model.feature_dim = video.oracle.feature_dim;
  model.layer = DenseLayer(static_cast<std::size_t>(window) * model.feature_dim,
                           4 * static_cast<std::size_t>(window - 1), "bench");
  auto rng = make_rng(7);
  model.layer.init_gaussian(0.01, rng);
  const std::size_t dim = 4 * static_cast<std::size_t>(window - 1);
  model.stats.window = window;
  model.stats.mean.assign(dim, 0.0);
  model.stats.stddev.assign(dim, 1.0);
  return model;
}

void bm_feature_pooling(benchmark::State& state) {
  const SyntheticVideo video = bench_video();
  const FeatureOracle oracle(video);
  const std::vector<Box>& boxes = video.proposals.front().boxes;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle.regression_features(boxes, 0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(boxes.size()));
}
BENCHMARK(bm_feature_pooling);

void bm_tubelet_growth_sequential(benchmark::State& state) {
  const SyntheticVideo video = bench_video();
  const FeatureOracle oracle(video);
  const TpnModel model = bench_model(video, 5);
  const std::vector<Box> anchors(video.proposals.front().boxes.begin(),
                                 video.proposals.front().boxes.begin() +
                                     static_cast<std::ptrdiff_t>(state.range(0)));
  for (auto _ : state) {
    for (const Box& anchor : anchors) {
      benchmark::DoNotOptimize(generate_tubelet(model, oracle, anchor, 0, video.frames));
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_tubelet_growth_sequential)->Arg(1)->Arg(4)->Arg(16);

void bm_tubelet_growth_batched(benchmark::State& state) {
  const SyntheticVideo video = bench_video();
  const FeatureOracle oracle(video);
  const TpnModel model = bench_model(video, 5);
  const std::vector<Box> anchors(video.proposals.front().boxes.begin(),
                                 video.proposals.front().boxes.begin() +
                                     static_cast<std::ptrdiff_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_batch(model, oracle, anchors, 0, video.frames));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_tubelet_growth_batched)->Arg(1)->Arg(4)->Arg(16);

void bm_lstm_step(benchmark::State& state) {
  LstmCell cell(32, 64, "bench.lstm");
  auto rng = make_rng(3);
  cell.init_gaussian(0.1, rng);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec x(32);
  for (double& v : x) v = dist(rng);
  LstmState s = cell.initial_state();
  for (auto _ : state) {
    s = cell.step(s, x);
    benchmark::DoNotOptimize(s.h.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_lstm_step);

}  // namespace

BENCHMARK_MAIN();
