#include <benchmark/benchmark.h>

#include <random>

#include "rotstar/grid.hpp"
#include "rotstar/kernels.hpp"

using namespace rotstar;

namespace {

GridPtr reference_grid() {
    static const GridPtr g = AxiGrid::create(clustered_nodes(256, 5.0, 3.65), 32, 8);
    return g;
}

Eigen::MatrixXd random_matrix(int rows, int cols) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = U(rng);
    return m;
}

void BM_multipole(benchmark::State& state) {
    const auto grid = reference_grid();
    const auto src = random_matrix(static_cast<int>(grid->rule().size()), grid->n_modes());
    kernels::set_threads(static_cast<int>(state.range(1)));
    Eigen::MatrixXd out;
    for (auto _ : state) {
        if (state.range(0) == 0) kernels::multipole_apply_serial(*grid, src, out);
        else kernels::multipole_apply_omp(*grid, src, out);
        benchmark::DoNotOptimize(out.data());
    }
    kernels::set_threads(1);
}

void BM_linearization(benchmark::State& state) {
    const auto grid = reference_grid();
    const int nm = grid->n_modes();
    const auto coupling = random_matrix(static_cast<int>(grid->rule().size()), nm * nm);
    kernels::set_threads(static_cast<int>(state.range(1)));
    RowMatrix out;
    for (auto _ : state) {
        if (state.range(0) == 0) kernels::assemble_linearization_serial(*grid, coupling, out);
        else kernels::assemble_linearization_omp(*grid, coupling, out);
        benchmark::DoNotOptimize(out.data());
    }
    kernels::set_threads(1);
}

void BM_direct(benchmark::State& state) {
    kernels::DirectSource ds;
    ds.f = [](double r, double z) { return (1.0 - r * r) * (1.0 + 0.2 * z * z); };
    ds.r_breaks = {0.0, 0.5, 1.0};
    std::vector<double> r, z;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 4; ++j) {
            r.push_back(0.1 * i);
            z.push_back(-0.9 + 0.6 * j);
        }
    std::vector<double> out(r.size());
    kernels::set_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        if (state.range(0) == 0) kernels::direct_potential_serial(ds, r, z, out);
        else kernels::direct_potential_omp(ds, r, z, out);
        benchmark::DoNotOptimize(out.data());
    }
    kernels::set_threads(1);
}

}  // namespace

// args: {0 serial | 1 OpenMP, threads}
BENCHMARK(BM_multipole)->Args({0, 1})->Args({1, 2})->Args({1, 4})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_linearization)->Args({0, 1})->Args({1, 2})->Args({1, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_direct)->Args({0, 1})->Args({1, 2})->Args({1, 4})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
