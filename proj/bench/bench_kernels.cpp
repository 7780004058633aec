// OpenMP kernels against their serial references, plus the spin right-hand side at 1 and N threads.

#include "kvh/kernels.hpp"
#include "kvh/spin2.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <array>
#include <cmath>
#include <vector>

using namespace kvh;

namespace {

std::vector<cplx> smooth(const Grid& g) {
    std::vector<cplx> v(g.size());
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) v[g.index(i, j)] = cplx(std::exp(-g.q(i) * g.q(i)), std::sin(g.p(j)));
    return v;
}

template <bool Serial>
void derivative(benchmark::State& st) {
    const Grid g(int(st.range(0)), 8.0);
    const std::vector<cplx> in = smooth(g);
    std::vector<cplx> d1(g.size()), d2(g.size());
    const std::array<int, 2> orders{1, 2};
    const std::array<cplx*, 2> outs{d1.data(), d2.data()};
    for (auto _ : st) {
        if constexpr (Serial) kernels::serial::spectral_derivative(g, Axis::Q, in.data(), orders, outs, Dealias::TwoThirds);
        else kernels::spectral_derivative(g, Axis::Q, in.data(), orders, outs, Dealias::TwoThirds);
        benchmark::DoNotOptimize(d1.data());
    }
}

template <bool Serial>
void sum(benchmark::State& st) {
    const Grid g(int(st.range(0)), 8.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.001 * double(k));
    for (auto _ : st) benchmark::DoNotOptimize(Serial ? kernels::serial::grid_sum(g, v.data()) : kernels::grid_sum(g, v.data()));
}

template <bool Serial>
void axpy(benchmark::State& st) {
    const std::size_t n = std::size_t(st.range(0)) * std::size_t(st.range(0));
    std::vector<cplx> x(n, cplx(1.0, 0.5)), y(n);
    for (auto _ : st) {
        if constexpr (Serial) kernels::serial::axpy(n, 1e-3, x.data(), y.data());
        else kernels::axpy(n, 1e-3, x.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void spin_rhs_threads(benchmark::State& st) {
    const Grid g(int(st.range(0)), 8.0);
    const int before = omp_get_max_threads();
    omp_set_num_threads(st.range(1) == 0 ? before : int(st.range(1)));
    const ScalarField D = ScalarField::sample(g, [](double q, double p) { return std::exp(-0.5 * ((q - 1) * (q - 1) + p * p) / 0.64); });
    Vec3Field n{ScalarField::sample(g, [](double, double) { return std::sin(1.1) * std::cos(0.3); }),
                ScalarField::sample(g, [](double, double) { return std::sin(1.1) * std::sin(0.3); }),
                ScalarField::sample(g, [](double, double) { return std::cos(1.1); })};
    const SpinState S = SpinState::pure(D, n, 1.0);
    const SpinHamiltonian H = presets::spin_boson(g, 0.5, 1.0, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(spin_rhs(H, S).dD.values().data());
    omp_set_num_threads(before);
}

} // namespace

BENCHMARK(derivative<false>)->Name("spectral_derivative/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(derivative<true>)->Name("spectral_derivative/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(sum<false>)->Name("grid_sum/omp")->Arg(128)->Arg(512);
BENCHMARK(sum<true>)->Name("grid_sum/serial")->Arg(128)->Arg(512);
BENCHMARK(axpy<false>)->Name("axpy/omp")->Arg(128)->Arg(512);
BENCHMARK(axpy<true>)->Name("axpy/serial")->Arg(128)->Arg(512);
// second argument: thread count, 0 for the OpenMP default
BENCHMARK(spin_rhs_threads)->Name("spin_rhs")->Args({64, 1})->Args({64, 0})->Args({128, 1})->Args({128, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
