#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "kupred/despace.hpp"
#include "kupred/embed.hpp"
#include "kupred/svm.hpp"

using namespace kupred;

namespace {

std::vector<double> random_vec(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = dist(rng);
  return v;
}

void BM_KernelRbf(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto x = random_vec(200, rng);
  auto y = random_vec(200, rng);
  svm::SvmParams params;
  params.gamma = 0.005;
  for (auto _ : state)
    benchmark::DoNotOptimize(kernel_eval(params, x, y));
}
BENCHMARK(BM_KernelRbf);

void BM_SmoBinary(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  svm::Matrix x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = random_vec(16, rng);
    int label = i % 2 == 0 ? 1 : -1;
    row[0] += 3.0 * label;
    x.push_back(std::move(row));
    y.push_back(label);
  }
  svm::SvmParams params;
  params.kernel = svm::Kernel::Linear;
  params.c = 10.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(svm::train_binary(x, y, params));
}
BENCHMARK(BM_SmoBinary)->Arg(128)->Arg(512);

void BM_DeTuneQuadratic(benchmark::State& state) {
  de::ParamSpace space;
  space.params.push_back(de::ParamDef::continuous("C", 1.0, 50.0, 1.0));
  de::Objective objective = [](const de::Candidate& c) {
    double v = std::get<double>(c.values[0]);
    return -(v - 25.0) * (v - 25.0);
  };
  de::DeConfig cfg;
  cfg.population_factor = 20;
  cfg.max_generations = 10;
  for (auto _ : state)
    benchmark::DoNotOptimize(de::tune(space, objective, cfg));
}
BENCHMARK(BM_DeTuneQuadratic);

void BM_SkipGramEpoch(benchmark::State& state) {
  embed::Corpus corpus;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> word(0, 99);
  for (int d = 0; d < 200; ++d) {
    embed::TokenSeq doc;
    for (int i = 0; i < 30; ++i)
      doc.push_back("w" + std::to_string(word(rng)));
    corpus.push_back(std::move(doc));
  }
  embed::SkipGramConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 1;
  cfg.min_count = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(embed::train_skipgram(corpus, cfg));
}
BENCHMARK(BM_SkipGramEpoch);

}  // namespace

BENCHMARK_MAIN();
