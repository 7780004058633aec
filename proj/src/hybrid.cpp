#include "kvh/hybrid.hpp"

#include <cmath>

namespace kvh {

namespace {

void check_shape(const HybridHamiltonian& H, const HybridWavefunction& u) {
    if (H.n() != u.ups.n()) throw WrongQuantumDimension("Hamiltonian and wavefunction dimensions differ");
    if (!H.grid().same_as(u.ups.grid())) throw ShapeMismatch("Hamiltonian and wavefunction grids differ");
}

double unit_defect(const AmplitudeField& psi, std::size_t k) {
    double s = 0;
    for (int a = 0; a < psi.n(); ++a) s += std::norm(psi.comp(a)[k]);
    return s == 0.0 ? 0.0 : std::abs(s - 1.0);
}

void require_normalized(const AmplitudeField& psi) {
    for (std::size_t k = 0; k < psi.npts(); ++k)
        if (unit_defect(psi, k) > 1e-8) throw NonNormalized("ψ(z) is not a unit vector");
}

} // namespace

AmplitudeField hybrid_liouvillian_apply(const HybridHamiltonian& H, const HybridWavefunction& u) {
    check_shape(H, u);
    if (H.value.hermiticity_defect() > 1e-12) throw NonHermitian("Ĥ(z) is not Hermitian");
    const Grid& g = u.ups.grid();
    const int n = u.ups.n();
    const AmplitudeField uq = partial(u.ups, Axis::Q), up = partial(u.ups, Axis::P);
    const cplx ih(0.0, u.hbar);
    AmplitudeField out(g, n);
    for (int a = 0; a < n; ++a) {
        cplx* o = out.comp(a);
        for (int i = 0; i < g.nq(); ++i)
            for (int j = 0; j < g.np(); ++j) {
                const std::size_t k = g.index(i, j);
                const double p = g.p(j);
                cplx br = 0, lag = 0;
                for (int b = 0; b < n; ++b) {
                    br += H.q.entry(a, b)[k] * up.comp(b)[k] - H.p.entry(a, b)[k] * uq.comp(b)[k];
                    lag += (p * H.p.entry(a, b)[k] - H.value.entry(a, b)[k]) * u.ups.comp(b)[k];
                }
                o[k] = ih * br - lag;
            }
    }
    return out;
}

AmplitudeField wave_rhs(const HybridHamiltonian& H, const HybridWavefunction& u) {
    AmplitudeField out = hybrid_liouvillian_apply(H, u);
    out *= cplx(0.0, -1.0 / u.hbar);
    return out;
}

double wave_energy(const HybridHamiltonian& H, const HybridWavefunction& u) {
    const AmplitudeField l = hybrid_liouvillian_apply(H, u);
    double e = 0;
    for (int a = 0; a < u.ups.n(); ++a) e += inner_real(u.ups.component(a), l.component(a));
    return e;
}

double wave_norm(const HybridWavefunction& u) {
    ScalarField s(u.ups.grid());
    for (int a = 0; a < u.ups.n(); ++a)
        for (std::size_t k = 0; k < s.size(); ++k) s[k] += std::norm(u.ups.comp(a)[k]);
    return integrate(s);
}

MatrixField hybrid_density_vanhove(const HybridWavefunction& u) {
    const Grid& g = u.ups.grid();
    const int n = u.ups.n();
    const AmplitudeField uq = partial(u.ups, Axis::Q), up = partial(u.ups, Axis::P);
    const cplx ih(0.0, u.hbar);
    MatrixField out(g, n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            const cplx *ua = u.ups.comp(a), *ub = u.ups.comp(b);
            ComplexField f(g);
            for (std::size_t k = 0; k < g.size(); ++k) f[k] = ua[k] * std::conj(ub[k]);
            const ComplexField fp = partial_p(f);
            cplx* e = out.entry(a, b);
            for (int i = 0; i < g.nq(); ++i)
                for (int j = 0; j < g.np(); ++j) {
                    const std::size_t k = g.index(i, j);
                    // −div(𝕁𝒜 F) = F + p ∂_p F
                    e[k] = 2.0 * f[k] + g.p(j) * fp[k] +
                           ih * (uq.comp(a)[k] * std::conj(up.comp(b)[k]) - up.comp(a)[k] * std::conj(uq.comp(b)[k]));
                }
            if (a == b)
                for (std::size_t k = 0; k < g.size(); ++k) e[k] = e[k].real();
            else
                for (std::size_t k = 0; k < g.size(); ++k) out.entry(b, a)[k] = std::conj(e[k]);
        }
    return out;
}

CMatrix integrate(const MatrixField& f) {
    const int n = f.n();
    CMatrix m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            ComplexField plane(f.grid(), std::vector<cplx>(f.entry(a, b), f.entry(a, b) + f.npts()));
            m(a, b) = integrate(plane);
        }
    return m;
}

CMatrix quantum_density(const MatrixField& dhat) {
    CMatrix m = integrate(dhat);
    return 0.5 * (m + m.adjoint());
}

ScalarField classical_density(const MatrixField& dhat) { return dhat.trace(); }

FactorizationData exact_factorize(const HybridWavefunction& u, double floor) {
    const Grid& g = u.ups.grid();
    const int n = u.ups.n();
    FactorizationData f{ScalarField(g), AmplitudeField(g, n), std::vector<bool>(g.size())};
    bool any = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
        double s = 0;
        for (int a = 0; a < n; ++a) s += std::norm(u.ups.comp(a)[k]);
        f.chi[k] = std::sqrt(s);
        f.mask[k] = f.chi[k] > floor;
        if (!f.mask[k]) continue;
        any = true;
        for (int a = 0; a < n; ++a) f.psi.comp(a)[k] = u.ups.comp(a)[k] / f.chi[k];
    }
    if (!any) throw EmptyMask("hybrid wavefunction vanishes everywhere");
    return f;
}

CovectorField berry_connection(const AmplitudeField& psi, double hbar) {
    require_normalized(psi);
    const AmplitudeField pq = partial(psi, Axis::Q), pp = partial(psi, Axis::P);
    CovectorField out(psi.grid());
    for (std::size_t k = 0; k < psi.npts(); ++k) {
        cplx sq = 0, sp = 0;
        for (int a = 0; a < psi.n(); ++a) {
            sq += std::conj(psi.comp(a)[k]) * pq.comp(a)[k];
            sp += std::conj(psi.comp(a)[k]) * pp.comp(a)[k];
        }
        out.q[k] = hbar * sq.imag();
        out.p[k] = hbar * sp.imag();
    }
    return out;
}

ScalarField berry_curvature(const AmplitudeField& psi, double hbar) {
    require_normalized(psi);
    const AmplitudeField pq = partial(psi, Axis::Q), pp = partial(psi, Axis::P);
    ScalarField out(psi.grid());
    for (std::size_t k = 0; k < psi.npts(); ++k) {
        cplx s = 0;
        for (int a = 0; a < psi.n(); ++a) s += std::conj(pq.comp(a)[k]) * pp.comp(a)[k];
        out[k] = 2 * hbar * s.imag();
    }
    return out;
}

ScalarField berry_curvature(const MatrixField& rho, double hbar) {
    const auto d = hermitian_derivatives(rho, false);
    const int n = rho.n();
    ScalarField out(rho.grid());
    for (std::size_t k = 0; k < rho.npts(); ++k) {
        CMatrix r(n, n), rq(n, n), rp(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                r(a, b) = rho(a, b, k);
                rq(a, b) = d.q(a, b, k);
                rp(a, b) = d.p(a, b, k);
            }
        const cplx t = (r * (rq * rp - rp * rq)).trace();
        out[k] = (cplx(0.0, -hbar) * t).real();
    }
    return out;
}

} // namespace kvh
