#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "fracvar/fracops.hpp"
#include "fracvar/kernels.hpp"
#include "fracvar/solver.hpp"

using namespace fracvar;

namespace {

struct Fixture {
    explicit Fixture(int n)
        : op(combined_caputo(make_grid(0.0, 1.0, n), 0.5, 0.5, 0.3)),
          x(static_cast<std::size_t>(n + 1)),
          y(x.size()) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = std::sin(0.01 * static_cast<double>(k));
        }
    }

    OperatorMatrix op;
    std::vector<double> x;
    std::vector<double> y;
};

void BM_MatvecSerial(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        kernels::serial::matvec(f.op.view(), f.x, f.y);
        benchmark::DoNotOptimize(f.y.data());
    }
}

void BM_MatvecParallel(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        kernels::parallel::matvec(f.op.view(), f.x, f.y);
        benchmark::DoNotOptimize(f.y.data());
    }
}

void BM_TransposeSerial(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        kernels::serial::matvec_transpose(f.op.view(), f.x, f.y);
        benchmark::DoNotOptimize(f.y.data());
    }
}

void BM_TransposeParallel(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        kernels::parallel::matvec_transpose(f.op.view(), f.x, f.y);
        benchmark::DoNotOptimize(f.y.data());
    }
}

void BM_BuildCombined(benchmark::State& state) {
    const Grid g = make_grid(0.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(combined_caputo(g, 0.5, 0.5, 0.3));
    }
}

void BM_ObjectiveGradient(benchmark::State& state) {
    const Grid g = make_grid(0.0, 1.0, static_cast<int>(state.range(0)));
    auto ops = std::make_shared<const OperatorSet>(g, FracOrders::uniform(1, 0.5, 0.5, 0.3));
    const DiscreteObjective J(LagrangianExpr::parse("0.5 * (v1 - exp(x))^2 + 0.5 * v1^2", 1, 0), ops);
    Trajectory y(g, 1);
    for (int k = 0; k < g.size(); ++k) {
        y.at(k, 0) = std::exp(g.node(k)) - 1.0;
    }
    Trajectory grad(g, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(J.value_and_gradient(y, grad));
    }
}

}  // namespace

BENCHMARK(BM_MatvecSerial)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_MatvecParallel)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_TransposeSerial)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_TransposeParallel)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_BuildCombined)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveGradient)->RangeMultiplier(4)->Range(256, 4096);

BENCHMARK_MAIN();
