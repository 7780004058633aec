#pragma once

// Shared generators and oracles for the tests.

#include "kvh/fields.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace kvh::testing {

inline Grid two_pi_grid(int n) {
    return Grid(n, n, -std::numbers::pi, std::numbers::pi, -std::numbers::pi, std::numbers::pi);
}

// Sum of random Fourier modes |m| <= kmax along each axis.
inline ScalarField band_limited(const Grid& g, std::mt19937_64& rng, int kmax, double amp = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarField f(g);
    for (int a = -kmax; a <= kmax; ++a)
        for (int b = -kmax; b <= kmax; ++b) {
            const double c = amp * u(rng) / (1 + a * a + b * b), ph = std::numbers::pi * u(rng);
            const double ka = 2 * std::numbers::pi * a / g.lq(), kb = 2 * std::numbers::pi * b / g.lp();
            for (int i = 0; i < g.nq(); ++i)
                for (int j = 0; j < g.np(); ++j) f.at(i, j) += c * std::cos(ka * g.q(i) + kb * g.p(j) + ph);
        }
    return f;
}

inline ComplexField band_limited_complex(const Grid& g, std::mt19937_64& rng, int kmax) {
    ScalarField re = band_limited(g, rng, kmax), im = band_limited(g, rng, kmax);
    ComplexField out(g);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = cplx(re[k], im[k]);
    return out;
}

inline ScalarField gaussian(const Grid& g, double q0, double p0, double sq, double sp) {
    return ScalarField::sample(g, [=](double q, double p) {
        return std::exp(-0.5 * ((q - q0) * (q - q0) / (sq * sq) + (p - p0) * (p - p0) / (sp * sp))) /
               (2 * std::numbers::pi * sq * sp);
    });
}

template <class T>
double max_diff(const Field<T>& a, const Field<T>& b) {
    double m = 0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, static_cast<double>(std::abs(a[k] - b[k])));
    return m;
}

inline double max_diff(const MatrixField& a, const MatrixField& b) { return max_abs(a - b); }

template <class T>
double rel_diff(const Field<T>& a, const Field<T>& b) {
    return max_diff(a, b) / std::max(max_abs(b), 1e-300);
}

// Gaussian envelope times slow random complex modulations; decays well inside a ±8 box.
inline ComplexField enveloped(const Grid& g, std::mt19937_64& rng, double q0, double p0, double s) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[6];
    for (double& x : c) x = u(rng);
    ComplexField f(g);
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) {
            const double q = g.q(i), p = g.p(j);
            const double env = std::exp(-((q - q0) * (q - q0) + (p - p0) * (p - p0)) / (4 * s * s));
            const cplx mod = cplx(1.0 + 0.3 * c[0] * std::sin(0.7 * q + c[1]), 0.4 * c[2] * std::cos(0.5 * p + c[3])) +
                             0.2 * c[4] * cplx(q - q0, c[5] * (p - p0));
            f.at(i, j) = env * mod;
        }
    return f;
}

} // namespace kvh::testing
