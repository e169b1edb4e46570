// Serial reference vs OpenMP kernels on a 64x64 noisy DR acquisition.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "nvmag/dr_demod.hpp"
#include "nvmag/lockin.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/sensitivity.hpp"

namespace {

using namespace nvmag;

constexpr std::size_t kSide = 64;
constexpr std::size_t kFrames = 8;

LockInSetup bench_setup() {
    NVConfiguration nv;
    nv.bias_field = 3e-3 * alignment_direction(Alignment::Axis001);
    OdmrModel line;
    line.linewidth = 1.25e6;
    line.contrast = 0.01;
    line.scheme = DriveScheme::TripleTone;
    AcquisitionProtocol p;
    p.width = kSide;
    p.height = kSide;
    p.f_mod = 10e3;
    p.n_cyc = 4;
    p.photon_rate = 1e10;
    return make_setup(nv, line, p);
}

// Per-pixel field gradient so every pixel takes its own deficit path.
Movie gradient_movie(const LockInSetup& s) {
    const std::size_t n = kSide * kSide;
    const std::size_t steps = kFrames;
    std::vector<double> v(steps * n);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < n; ++i)
            v[t * n + i] = 50e-9 * std::sin(0.01 * static_cast<double>(i) + 0.3 * static_cast<double>(t));
    return Movie(s.protocol.frame_duration(), n, std::move(v));
}

Execution exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_SimulateFrames(benchmark::State& state) {
    const auto s = bench_setup();
    const Movie field = gradient_movie(s);
    const Movie drift = Movie::constant(0.0, field.duration());
    for (auto _ : state) {
        auto frames = simulate_frames(s, field, drift, kFrames, exec_of(state));
        benchmark::DoNotOptimize(frames);
    }
    state.SetItemsProcessed(state.iterations() * kFrames * kSide * kSide);
}

void BM_Demodulate(benchmark::State& state) {
    const auto s = bench_setup();
    const auto cal = calibrate_slope(s);
    const Plane alpha = alpha_map(s.protocol, cal);
    const Movie field = gradient_movie(s);
    const auto frames = simulate_frames(s, field, Movie::constant(0.0, field.duration()), kFrames);
    for (auto _ : state) {
        for (const auto& f : frames) {
            auto m = demodulate(f, alpha.span(), cal, exec_of(state));
            benchmark::DoNotOptimize(m);
        }
    }
    state.SetItemsProcessed(state.iterations() * kFrames * kSide * kSide);
}

void BM_EtaFromSeries(benchmark::State& state) {
    const auto s = bench_setup();
    const auto cal = calibrate_slope(s);
    const Movie zero = Movie::constant(0.0, 64 * s.protocol.frame_duration());
    std::vector<Plane> series;
    for (const auto& f : simulate_frames(s, zero, zero, 64)) series.push_back(demodulate(f, cal));
    for (auto _ : state) {
        auto eta = eta_from_series(series, s.protocol.frame_duration(), exec_of(state));
        benchmark::DoNotOptimize(eta);
    }
    state.SetItemsProcessed(state.iterations() * series.size() * kSide * kSide);
}

}  // namespace

BENCHMARK(BM_SimulateFrames)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Demodulate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EtaFromSeries)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
