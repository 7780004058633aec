#pragma once

// Low-level array kernels. The default namespace holds the OpenMP versions used by every
// module; kernels::serial holds straightforward reference implementations that the tests and
// benchmarks compare against.

#include "kvh/grid.hpp"

#include <span>

namespace kvh {

enum class Dealias { None, TwoThirds };

namespace kernels {

// out_k = d^{orders[k]} in / d axis^{orders[k]} for each requested order, from one forward transform.
// Nyquist modes are zeroed; TwoThirds additionally zeroes |m| > n/3.
void spectral_derivative(const Grid& g, Axis axis, const cplx* in, std::span<const int> orders,
                         std::span<cplx* const> outs, Dealias dealias = Dealias::None);

// Deterministic sum: rows summed independently, then combined in row order.
double grid_sum(const Grid& g, const double* v);

// y += a*x
void axpy(std::size_t n, double a, const cplx* x, cplx* y);
void axpy(std::size_t n, double a, const double* x, double* y);

int thread_count();

namespace serial {
void spectral_derivative(const Grid& g, Axis axis, const cplx* in, std::span<const int> orders,
                         std::span<cplx* const> outs, Dealias dealias = Dealias::None);
double grid_sum(const Grid& g, const double* v);
void axpy(std::size_t n, double a, const cplx* x, cplx* y);
} // namespace serial

} // namespace kernels
} // namespace kvh
