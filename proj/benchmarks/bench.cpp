#include <benchmark/benchmark.h>

#include "wavesense/senseiver.hpp"
#include "wavesense/swe.hpp"

using namespace wavesense;

namespace {

GridSpec bench_grid(int n) { return {130.0, 160.0, 20.0, 50.0, n, n}; }

void BM_SWEStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BathymetryGrid bathy = synth_bathymetry(bench_grid(n), BathyProfile::seamount);
    const PhysicalConstants consts;
    SWEState s = initial_condition({GeoPoint(142.0, 36.0), 5.0, 250.0}, bathy);
    for (auto _ : state) {
        s = step(s, bathy, consts, 5.0, BoundaryCondition::sponge);
        benchmark::DoNotOptimize(s.h.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_SWEStep)->Arg(64)->Arg(96)->Arg(128);

void BM_Decode(benchmark::State& state) {
    const BathymetryGrid bathy = synth_bathymetry(bench_grid(64), BathyProfile::flat);
    ModelConfig cfg;
    cfg.num_freq_bands = 8;
    const ModelParams params = init_params(cfg);
    const Matrix a_q = ocean_query_encodings(bathy, cfg);

    SensorReadings readings;
    for (int k = 0; k < 8; ++k) {
        readings.locations.emplace_back(135.0 + 2.0 * k, 30.0 + k);
        readings.values.push_back(0.01 * k);
    }
    const Matrix a_s = encode_positions(readings.locations, bathy, cfg);
    const Matrix z = encode(readings, a_s, params);

    for (auto _ : state) {
        Eigen::VectorXd out = decode(z, a_q, params);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * a_q.rows());
}
BENCHMARK(BM_Decode);

void BM_EncodeFrame(benchmark::State& state) {
    const BathymetryGrid bathy = synth_bathymetry(bench_grid(64), BathyProfile::flat);
    ModelConfig cfg;
    cfg.num_freq_bands = 8;
    const ModelParams params = init_params(cfg);

    SensorReadings readings;
    for (int k = 0; k < 8; ++k) {
        readings.locations.emplace_back(135.0 + 2.0 * k, 30.0 + k);
        readings.values.push_back(0.01 * k);
    }
    const Matrix a_s = encode_positions(readings.locations, bathy, cfg);

    for (auto _ : state) {
        Matrix z = encode(readings, a_s, params);
        benchmark::DoNotOptimize(z.data());
    }
}
BENCHMARK(BM_EncodeFrame);

}  // namespace

BENCHMARK_MAIN();
