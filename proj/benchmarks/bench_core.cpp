#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "pipewright/metrics.hpp"
#include "pipewright/pipeline_io.hpp"
#include "pipewright/synthesis.hpp"
#include "pipewright/validator.hpp"

using namespace pipewright;

namespace {

const FunctionCatalog& cat() { return FunctionCatalog::builtin(); }

Pipeline fixture(const std::string& name) {
  std::ifstream in(std::string(PIPEWRIGHT_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_json(ss.str(), cat());
}

Pipeline synth(int n, std::uint64_t seed) {
  SynthesisConfig c;
  c.n_function_nodes = n;
  c.seed = seed;
  return expand_pipeline(c);
}

// Same graph with node ids reversed in order, so matching cannot lean on
// identical ids.
Pipeline renamed(const Pipeline& p) {
  Pipeline q = p;
  std::map<std::string, std::string> ids;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) ids[q.nodes[i].id] = "n" + std::to_string(q.nodes.size() - i);
  for (auto& n : q.nodes) n.id = ids[n.id];
  for (auto& e : q.edges) {
    e.from.node = ids[e.from.node];
    e.to.node = ids[e.to.node];
  }
  q.metadata.clear();
  return q;
}

}  // namespace

static void BM_Validate(benchmark::State& state) {
  Pipeline p = synth(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(validate(p, cat()));
  state.counters["nodes"] = static_cast<double>(p.nodes.size());
}
BENCHMARK(BM_Validate)->Arg(2)->Arg(8)->Arg(16);

static void BM_ValidateFigure1(benchmark::State& state) {
  Pipeline p = fixture("figure1.json");
  for (auto _ : state) benchmark::DoNotOptimize(validate(p, cat()));
}
BENCHMARK(BM_ValidateFigure1);

static void BM_ExactMatch(benchmark::State& state) {
  Pipeline a = synth(static_cast<int>(state.range(0)), 5);
  Pipeline b = renamed(a);
  for (auto _ : state) benchmark::DoNotOptimize(exact_match(b, a, MatchConfig{}));
}
BENCHMARK(BM_ExactMatch)->Arg(2)->Arg(8)->Arg(16);

static void BM_GedFigure9(benchmark::State& state) {
  Pipeline gen = fixture("fig9c.json");
  Pipeline ref = fixture("fig9d.json");
  for (auto _ : state) benchmark::DoNotOptimize(ged(gen, ref, MatchConfig{}));
}
BENCHMARK(BM_GedFigure9);

static void BM_GedDubbing(benchmark::State& state) {
  Pipeline ref = fixture("figure1.json");
  Pipeline gen = renamed(ref);
  for (auto _ : state) benchmark::DoNotOptimize(ged(gen, ref, MatchConfig{}));
}
BENCHMARK(BM_GedDubbing)->Unit(benchmark::kMicrosecond);

static void BM_Synthesize(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synth(static_cast<int>(state.range(0)), seed++));
}
BENCHMARK(BM_Synthesize)->Arg(1)->Arg(4)->Arg(8);

static void BM_JsonRoundTrip(benchmark::State& state) {
  const std::string text = serialize_pipeline_json(fixture("figure1.json"));
  for (auto _ : state) benchmark::DoNotOptimize(serialize_pipeline_json(parse_pipeline_json(text, cat())));
}
BENCHMARK(BM_JsonRoundTrip);
BENCHMARK_MAIN();
