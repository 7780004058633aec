#include "kvh/kernels.hpp"

#include "fft_plans.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kvh::kernels {

namespace {

cplx ipow(double k, int order) {
    switch (order) {
    case 0: return 1.0;
    case 1: return {0.0, k};
    case 2: return -k * k;
    case 3: return {0.0, -k * k * k};
    case 4: return k * k * k * k;
    default: throw std::invalid_argument("derivative order must be 0..4");
    }
}

std::vector<std::vector<cplx>> multipliers(const Grid& g, Axis axis, std::span<const int> orders, Dealias d) {
    const auto& k = g.wavenumbers(axis);
    const int n = g.n(axis);
    std::vector<std::vector<cplx>> mult(orders.size(), std::vector<cplx>(n));
    for (std::size_t o = 0; o < orders.size(); ++o)
        for (int m = 0; m < n; ++m) {
            int mm = m <= n / 2 ? m : n - m;
            bool cut = d == Dealias::TwoThirds && 3 * mm > n;
            // constant scaling by 1/n folded in here
            mult[o][m] = cut ? cplx(0.0) : ipow(k[m], orders[o]) / double(n);
        }
    return mult;
}

struct FftwBuffer {
    explicit FftwBuffer(int n) : p(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {}
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    cplx* c() { return reinterpret_cast<cplx*>(p); }
    fftw_complex* p;
};

} // namespace

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void spectral_derivative(const Grid& g, Axis axis, const cplx* in, std::span<const int> orders,
                         std::span<cplx* const> outs, Dealias dealias) {
    if (orders.size() != outs.size()) throw std::invalid_argument("orders/outs size mismatch");
    const auto mult = multipliers(g, axis, orders, dealias);
    const auto& line = axis == Axis::Q ? g.fft().q : g.fft().p;
    const int n = line.n;
    const int nlines = axis == Axis::Q ? g.np() : g.nq();
    const std::ptrdiff_t stride = axis == Axis::Q ? g.np() : 1;
    const std::ptrdiff_t step = axis == Axis::Q ? 1 : g.np();
    const std::size_t nout = outs.size();

#pragma omp parallel
    {
        FftwBuffer spec(n), work(n);
#pragma omp for schedule(static)
        for (int l = 0; l < nlines; ++l) {
            const cplx* src = in + l * step;
            cplx* s = spec.c();
            for (int x = 0; x < n; ++x) s[x] = src[x * stride];
            fftw_execute_dft(line.fwd, spec.p, spec.p);
            for (std::size_t o = 0; o < nout; ++o) {
                cplx* w = work.c();
                const cplx* m = mult[o].data();
                for (int x = 0; x < n; ++x) w[x] = s[x] * m[x];
                fftw_execute_dft(line.bwd, work.p, work.p);
                cplx* dst = outs[o] + l * step;
                for (int x = 0; x < n; ++x) dst[x * stride] = w[x];
            }
        }
    }
}

double grid_sum(const Grid& g, const double* v) {
    const int nq = g.nq(), np = g.np();
    std::vector<double> rows(nq);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nq; ++i) {
        double s = 0;
        const double* r = v + static_cast<std::size_t>(i) * np;
        for (int j = 0; j < np; ++j) s += r[j];
        rows[i] = s;
    }
    double s = 0;
    for (double r : rows) s += r;
    return s;
}

void axpy(std::size_t n, double a, const cplx* x, cplx* y) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) y[k] += a * x[k];
}

void axpy(std::size_t n, double a, const double* x, double* y) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) y[k] += a * x[k];
}

namespace serial {

void spectral_derivative(const Grid& g, Axis axis, const cplx* in, std::span<const int> orders,
                         std::span<cplx* const> outs, Dealias dealias) {
    const auto mult = multipliers(g, axis, orders, dealias);
    const int n = g.n(axis);
    const int nlines = axis == Axis::Q ? g.np() : g.nq();
    const std::ptrdiff_t stride = axis == Axis::Q ? g.np() : 1;
    const std::ptrdiff_t step = axis == Axis::Q ? 1 : g.np();
    // naive DFT with an exact twiddle table
    std::vector<cplx> tw(n);
    for (int m = 0; m < n; ++m) tw[m] = std::polar(1.0, -2 * std::numbers::pi * m / n);
    std::vector<cplx> c(n), w(n);
    for (int l = 0; l < nlines; ++l) {
        const cplx* src = in + l * step;
        for (int m = 0; m < n; ++m) {
            cplx s = 0;
            for (int x = 0; x < n; ++x) s += src[x * stride] * tw[(static_cast<long>(m) * x) % n];
            c[m] = s;
        }
        for (std::size_t o = 0; o < orders.size(); ++o) {
            for (int m = 0; m < n; ++m) w[m] = c[m] * mult[o][m];
            cplx* dst = outs[o] + l * step;
            for (int x = 0; x < n; ++x) {
                cplx s = 0;
                for (int m = 0; m < n; ++m) s += w[m] * std::conj(tw[(static_cast<long>(m) * x) % n]);
                dst[x * stride] = s;
            }
        }
    }
}

double grid_sum(const Grid& g, const double* v) {
    double s = 0;
    for (int i = 0; i < g.nq(); ++i) {
        double r = 0;
        for (int j = 0; j < g.np(); ++j) r += v[g.index(i, j)];
        s += r;
    }
    return s;
}

void axpy(std::size_t n, double a, const cplx* x, cplx* y) {
    for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

} // namespace serial
} // namespace kvh::kernels
