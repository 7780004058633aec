#include "kvh/checks.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace kvh {

namespace {

// Gaussian envelope times slowly varying random complex modulation.
ComplexField enveloped(const Grid& g, std::mt19937_64& rng, double q0, double p0, double s) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[6];
    for (double& x : c) x = u(rng);
    ComplexField f(g);
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) {
            const double q = g.q(i), p = g.p(j);
            const double env = std::exp(-((q - q0) * (q - q0) + (p - p0) * (p - p0)) / (4 * s * s));
            f.at(i, j) = env * (cplx(1.0 + 0.3 * c[0] * std::sin(0.7 * q + c[1]), 0.4 * c[2] * std::cos(0.5 * p + c[3])) +
                                0.2 * c[4] * cplx(q - q0, c[5] * (p - p0)));
        }
    return f;
}

CMatrix at(const MatrixField& f, std::size_t k) {
    CMatrix m(f.n(), f.n());
    for (int a = 0; a < f.n(); ++a)
        for (int b = 0; b < f.n(); ++b) m(a, b) = f(a, b, k);
    return m;
}

Polynomial random_poly(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(6);
    for (double& x : c) x = u(rng);
    return Polynomial::from_list(c);
}

CMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(z(rng), z(rng));
    return (a + a.adjoint()) / 2.0;
}

double max3(const Vec3Field& v) { return std::max({max_abs(v[0]), max_abs(v[1]), max_abs(v[2])}); }

} // namespace

ClosureState random_closure_state(const Grid& g, std::mt19937_64& rng, int terms, double hbar) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MatrixField P(g, 2);
    for (int m = 0; m < terms; ++m) {
        const double q0 = 0.6 * u(rng), p0 = 0.6 * u(rng);
        const ComplexField a = enveloped(g, rng, q0, p0, 0.9), b = enveloped(g, rng, q0, p0, 0.9);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const cplx v[2] = {a[k], b[k]};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) P(i, j, k) += v[i] * std::conj(v[j]);
        }
    }
    P *= 1.0 / integrate(P.trace());
    return ClosureState(std::move(P), hbar);
}

MatrixField random_hermitian_direction(const Grid& g, std::mt19937_64& rng) {
    const ComplexField a = enveloped(g, rng, 0.3, -0.2, 0.8), b = enveloped(g, rng, -0.1, 0.4, 0.8);
    MatrixField d(g, 2);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const cplx v[2] = {a[k], b[k]}, w[2] = {b[k], cplx(0.5) * a[k]};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) d(i, j, k) = v[i] * std::conj(w[j]) + w[i] * std::conj(v[j]);
    }
    return d;
}

CMatrix random_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(z(rng), z(rng));
    Eigen::HouseholderQR<CMatrix> qr(a);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix the column phases so the distribution is Haar
    for (int i = 0; i < n; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

double closure_gateaux_error(const HybridHamiltonian& H, const ClosureState& s, const MatrixField& dP, double h) {
    const MatrixField dH = closure_var_derivative(H, s).dH_dP;
    ScalarField pair(s.grid());
    for (std::size_t k = 0; k < pair.size(); ++k) pair[k] = (at(dH, k) * at(dP, k)).trace().real();
    const double an = integrate(pair);
    const double fd = (closure_hamiltonian(H, s.with(s.P + cplx(h) * dP)) - closure_hamiltonian(H, s.with(s.P - cplx(h) * dP))) / (2 * h);
    return std::abs(an - fd) / std::max(std::abs(fd), 1e-300);
}

double spin_gateaux_error(const SpinHamiltonian& H, const SpinState& s, const ScalarField& dD, const Vec3Field& ds, double h) {
    const SpinDerivatives d = spin_var_derivatives(H, s);
    double an = integrate(d.dh_dD * dD);
    for (int c = 0; c < 3; ++c) an += integrate(d.dh_ds[c] * ds[c]);
    Vec3Field sp = s.s, sm = s.s;
    for (int c = 0; c < 3; ++c) {
        sp[c] += h * ds[c];
        sm[c] -= h * ds[c];
    }
    const double fd = (spin_hamiltonian(H, s.with(s.D + h * dD, sp)) - spin_hamiltonian(H, s.with(s.D - h * dD, sm))) / (2 * h);
    return std::abs(an - fd) / std::max(std::abs(fd), 1e-300);
}

double dual_path_error(const SpinHamiltonian& H, const ClosureState& P) {
    const SpinRhs sr = spin_rhs(H, spin_from_density(P));
    const MatrixField cr = closure_rhs(H.to_matrix(), P);
    // Pauli map of the closure RHS, done by hand rather than through spin_from_density
    const Grid& g = P.grid();
    ScalarField cd(g);
    Vec3Field cs{ScalarField(g), ScalarField(g), ScalarField(g)};
    for (std::size_t k = 0; k < g.size(); ++k) {
        cd[k] = (cr(0, 0, k) + cr(1, 1, k)).real();
        cs[0][k] = 0.5 * P.hbar * 2 * cr(0, 1, k).real();
        cs[1][k] = 0.5 * P.hbar * -2 * cr(0, 1, k).imag();
        cs[2][k] = 0.5 * P.hbar * (cr(0, 0, k) - cr(1, 1, k)).real();
    }
    const double scale = std::max(max_abs(cd), max3(cs));
    double e = max_abs(sr.dD - cd);
    for (int c = 0; c < 3; ++c) e = std::max(e, max_abs(sr.ds[c] - cs[c]));
    return e / scale;
}

std::vector<CheckResult> invariant_suite(const SpinHamiltonian& Sh, const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const HybridHamiltonian H = Sh.to_matrix();
    const double hbar = Sh.hbar;
    std::vector<CheckResult> out;
    auto worst = [&](const char* name, double tol, auto&& f) {
        double v = 0;
        for (int terms : {1, 2}) v = std::max(v, f(terms));
        out.push_back({name, v, tol});
    };

    worst("closure_rhs_hermitian", 1e-12, [&](int terms) {
        const MatrixField r = closure_rhs(H, random_closure_state(g, rng, terms, hbar));
        return r.hermiticity_defect() / max_abs(r);
    });
    worst("closure_rhs_mass", 1e-10, [&](int terms) {
        const MatrixField r = closure_rhs(H, random_closure_state(g, rng, terms, hbar));
        return std::abs(integrate(r.trace())) / (max_abs(r) * g.lq() * g.lp());
    });
    worst("bracket_antisymmetry", 1e-12, [&](int terms) {
        const ClosureState s = random_closure_state(g, rng, terms, hbar);
        const auto f = FunctionalSpec::linear({{random_poly(rng), random_hermitian(2, rng)}});
        const auto k = FunctionalSpec::linear({{random_poly(rng), random_hermitian(2, rng)}});
        const double fk = bracket_eval(f, k, s), kf = bracket_eval(k, f, s);
        return std::abs(fk + kf) / std::max(std::abs(fk), 1e-300);
    });
    worst("gateaux_closure", 1e-5, [&](int terms) {
        const ClosureState s = random_closure_state(g, rng, terms, hbar);
        return closure_gateaux_error(H, s, random_hermitian_direction(g, rng));
    });
    worst("gateaux_spin", 1e-5, [&](int terms) {
        const SpinState s = spin_from_density(random_closure_state(g, rng, terms, hbar));
        const SpinState d = spin_from_density(random_closure_state(g, rng, 2, hbar));
        return spin_gateaux_error(Sh, s, d.D, d.s);
    });
    worst("spin_closure_dual_path", 1e-8, [&](int terms) { return dual_path_error(Sh, random_closure_state(g, rng, terms, hbar)); });
    worst("equivariance_unitary", 1e-12, [&](int terms) {
        const ClosureState s = random_closure_state(g, rng, terms, hbar);
        return equivariance_check(s, random_unitary(2, rng)) / max_abs(hybrid_density_closure(s));
    });
    if (g.square() && g.q_min() == -g.q_max())
        worst("equivariance_quarter_turn", 1e-10, [&](int terms) {
            const ClosureState s = random_closure_state(g, rng, terms, hbar);
            return equivariance_check_rotation(s) / max_abs(hybrid_density_closure(s));
        });

    // KvH evolution is unitary: Re⟨Ψ, ∂_tΨ⟩ = 0
    const ScalarJet H0 = ScalarJet::from_polynomial(g, Sh.h0_poly);
    const KoopmanWavefunction psi{enveloped(g, rng, 0.4, -0.3, 0.9), hbar};
    const ComplexField r = kvh_rhs(H0, psi);
    out.push_back({"kvh_unitarity", std::abs(inner_real(psi.psi, r)) / std::sqrt(inner_real(r, r) * inner_real(psi.psi, psi.psi)), 1e-10});
    return out;
}

} // namespace kvh
