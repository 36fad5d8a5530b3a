// Serial reference against the OpenMP kernel on a 2D smooth bump.
#include <benchmark/benchmark.h>

#include "bdns/harness.hpp"
#include "bdns/kernels.hpp"

namespace {

struct Setup {
  bdns::PeriodicGrid grid;
  bdns::ViscosityLaw law = bdns::ViscosityLaw::power_sum({{1.0, 1.0}, {1.0, 2.0}});
  bdns::State state;

  explicit Setup(int n) : grid(bdns::PeriodicGrid::square(n, n)) {
    state = bdns::state_from_profile(
        bdns::make_profile("smooth_bump", nlohmann::json{{"velocity", 0.3}}, grid), grid);
  }
};

void BM_rhs_serial(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)));
  bdns::FlowParams fp{&s.law, 2.0, 1e-10};
  bdns::State out;
  bdns::RhsWorkspace ws;
  for (auto _ : st) {
    bdns::rhs_serial(s.grid, fp, s.state, out, ws);
    benchmark::DoNotOptimize(out.rho.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(s.grid.cell_count()));
}

void BM_rhs_omp(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)));
  bdns::FlowParams fp{&s.law, 2.0, 1e-10};
  bdns::State out;
  bdns::RhsWorkspace ws;
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) {
    bdns::rhs_omp(s.grid, fp, s.state, out, ws, threads);
    benchmark::DoNotOptimize(out.rho.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(s.grid.cell_count()));
}

}  // namespace

BENCHMARK(BM_rhs_serial)->Arg(64)->Arg(128)->Arg(256)->UseRealTime()->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_rhs_omp)
    ->ArgsProduct({{64, 128, 256}, {1, 2, 4, 8}})
    ->ArgNames({"n", "threads"})
    ->UseRealTime()
    ->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
