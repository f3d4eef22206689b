// OpenMP batch scoring against the serial reference. The model is the one a
// full Scenario IV run leaves behind; range(0) is the batch size.

#include <benchmark/benchmark.h>

#include <map>

#include "nevil/loop.hpp"
#include "nevil/oracle.hpp"
#include "nevil/synthetic.hpp"

using namespace nevil;

namespace {

struct Fixture {
  CompositeModel model;
  Batch batch;
};

const Fixture& fixture(int B, ClassifierKind kind) {
  static std::map<std::pair<int, ClassifierKind>, Fixture> cache;
  auto key = std::make_pair(B, kind);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  RunConfig cfg;
  cfg.batch_size = B;
  cfg.classifier = kind;
  cfg.fusion.threshold = 0.9;
  const Dataset ds = assemble_batches(build_scenario(ScenarioId::IV, {}, 7), B);
  ScriptedOracle oracle;
  LearnerState state{CompositeModel(cfg.decay_base), std::nullopt};
  for (const auto& slot : ds.slots) {
    if (!slot.empty()) state = run_time_slot(state, slot, oracle, cfg).next;
  }
  Batch largest = ds.slots.back().batches.front();
  for (const auto& slot : ds.slots) {
    for (const auto& b : slot.batches) {
      if (b.size() > largest.size()) largest = b;
    }
  }
  return cache.emplace(key, Fixture{state.model, largest}).first->second;
}

template <PosteriorMatrix (*Score)(const CompositeModel&, const Batch&), ClassifierKind Kind>
void BM_score(benchmark::State& st) {
  const auto& f = fixture(static_cast<int>(st.range(0)), Kind);
  for (auto _ : st) benchmark::DoNotOptimize(Score(f.model, f.batch));
  st.counters["members"] = static_cast<double>(f.model.size());
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

}  // namespace

BENCHMARK(BM_score<score_batch, ClassifierKind::gaussian_nb>)->Name("nb/parallel")->Arg(50)->Arg(250)->Arg(1000);
BENCHMARK(BM_score<score_batch_serial, ClassifierKind::gaussian_nb>)->Name("nb/serial")->Arg(50)->Arg(250)->Arg(1000);
BENCHMARK(BM_score<score_batch, ClassifierKind::gmm>)->Name("gmm/parallel")->Arg(50)->Arg(250)->Arg(1000);
BENCHMARK(BM_score<score_batch_serial, ClassifierKind::gmm>)->Name("gmm/serial")->Arg(50)->Arg(250)->Arg(1000);

BENCHMARK_MAIN();
