#include "closure_support.hpp"

#include "kvh/spin2.hpp"

#include <doctest.h>

using namespace kvh;
using namespace kvh::testing;

namespace {

double max_diff3(const Vec3Field& a, const Vec3Field& b) {
    return std::max({max_diff(a[0], b[0]), max_diff(a[1], b[1]), max_diff(a[2], b[2])});
}
double max_abs3(const Vec3Field& a) { return std::max({max_abs(a[0]), max_abs(a[1]), max_abs(a[2])}); }

SpinState random_spin(const Grid& g, std::mt19937_64& rng, int terms, double hbar) {
    return spin_from_density(random_state(g, rng, terms, hbar));
}

SpinHamiltonian spin_boson_sh(const Grid& g, double hbar) { return presets::spin_boson(g, 0.5, 1.0, hbar); }

Vec3Field map_s(const ClosureState& P) { return spin_from_density(P).s; }

} // namespace

TEST_CASE("Pauli map between 𝒫 and (D, s̃)") {
    Grid g = box();
    const double hbar = 0.6;
    const ScalarField D = gaussian(g, 0.2, 0.1, 1.0, 1.0);
    CMatrix up(2, 2);
    up << 1, 0, 0, 0;
    const SpinState a = spin_from_density(ClosureState::product(D, up, hbar));
    CHECK(max_abs(a.s[0]) == 0.0);
    CHECK(max_abs(a.s[1]) == 0.0);
    CHECK(max_diff(a.s[2], 0.5 * hbar * D) < 1e-16);
    const SpinState b = spin_from_density(ClosureState::product(D, CMatrix::Identity(2, 2) / 2, hbar));
    CHECK(max_abs3(b.s) == 0.0);

    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        const ClosureState P = random_state(g, rng, 2, hbar);
        const ClosureState back = density_from_spin(spin_from_density(P));
        CHECK(max_diff(back.P, P.P) < 1e-14 * max_abs(P.P));
        CHECK(back.eps == P.eps);
    }
    CHECK_THROWS_AS(spin_from_density(ClosureState(MatrixField(g, 3) + ClosureState::product(D, CMatrix::Identity(3, 3), 1.0).P, 1.0)),
                    WrongQuantumDimension);
}

TEST_CASE("spin Hamiltonian special cases and agreement with the matrix form") {
    Grid g = box();
    const double hbar = 0.8;
    const ScalarField D = gaussian(g, 0.3, -0.2, 0.9, 1.0);
    const Vec3Field n{ScalarField::sample(g, [](double q, double) { return std::cos(0.3 * q); }),
                      ScalarField::sample(g, [](double, double p) { return std::sin(0.4 * p); }), ScalarField(g, 0.5)};
    const SpinState S = SpinState::pure(D, n, hbar);
    const ScalarJet H0 = ScalarJet::from_polynomial(g, presets::harmonic());

    const SpinHamiltonian free(g, presets::harmonic(), {}, hbar);
    CHECK(std::abs(spin_hamiltonian(free, S) - integrate(D * H0.v)) < 1e-13);

    // uniform Bloch direction: ∇s̃ ∥ s̃, so the gradient term drops out
    const Vec3Field n0{ScalarField(g, 0.6), ScalarField(g, 0.0), ScalarField(g, 0.8)};
    const SpinState U = SpinState::pure(D, n0, hbar);
    const SpinHamiltonian sb = spin_boson_sh(g, hbar);
    ScalarField plain = D * H0.v;
    for (int c = 0; c < 3; ++c) plain += U.s[c] * sb.H[c].v;
    CHECK(std::abs(spin_hamiltonian(sb, U) - integrate(plain)) < 1e-13);

    std::mt19937_64 rng(12);
    const HybridHamiltonian Hm = sb.to_matrix();
    for (int t = 0; t < 4; ++t) {
        const ClosureState P = random_state(g, rng, 1 + t % 2, hbar);
        CHECK(std::abs(spin_hamiltonian(sb, spin_from_density(P)) - closure_hamiltonian(Hm, P)) < 1e-10);
    }
    CHECK(std::abs(spin_hamiltonian(sb, S) - closure_hamiltonian(Hm, density_from_spin(S))) < 1e-10);
}

TEST_CASE("spin functional derivatives") {
    Grid g = box();
    const double hbar = 0.9;
    const ScalarField D = gaussian(g, 0.3, -0.2, 0.9, 1.0);
    const Vec3Field n0{ScalarField(g, 0.0), ScalarField(g, 0.6), ScalarField(g, 0.8)};
    const SpinState U = SpinState::pure(D, n0, hbar);
    const SpinHamiltonian constH(g, presets::harmonic(),
                                 {Polynomial::constant(0.3), Polynomial(), Polynomial::constant(1.0)}, hbar);
    const ScalarJet H0 = ScalarJet::from_polynomial(g, presets::harmonic());
    auto d = spin_var_derivatives(constH, U);
    CHECK(max_diff(d.dh_dD, H0.v) < 1e-14);
    CHECK(max_abs(d.dh_ds[0] - ScalarField(g, 0.3)) < 1e-14);
    CHECK(max_abs(d.dh_ds[1]) < 1e-14);
    CHECK(max_abs(d.dh_ds[2] - ScalarField(g, 1.0)) < 1e-14);

    std::mt19937_64 rng(13);
    const SpinState S = random_spin(g, rng, 1, hbar);
    const SpinHamiltonian free(g, presets::harmonic(), {}, hbar);
    d = spin_var_derivatives(free, S);
    CHECK(max_diff(d.dh_dD, H0.v) == 0.0);
    CHECK(max_abs3(d.dh_ds) == 0.0);

    const SpinHamiltonian sb = spin_boson_sh(g, hbar);
    const HybridHamiltonian Hm = sb.to_matrix();
    for (int terms : {1, 2}) {
        const SpinState R = random_spin(g, rng, terms, hbar);
        d = spin_var_derivatives(sb, R);
        // dual path: δℋ/δ𝒫 = δh/δD Id + (ħ/2) δh/δs̃·σ
        const MatrixField M = closure_var_derivative(Hm, density_from_spin(R)).dH_dP;
        double e = 0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            // r'(D) ~ D⁻² amplifies rounding in the far tails differently along the two paths
            if (R.D[k] < 1e-6 * max_abs(R.D)) continue;
            Eigen::Matrix2cd m = d.dh_dD[k] * Eigen::Matrix2cd::Identity();
            for (int c = 0; c < 3; ++c) m += 0.5 * hbar * d.dh_ds[c][k] * pauli()[c];
            e = std::max(e, (m - mat(M, k)).cwiseAbs().maxCoeff());
        }
        CHECK(e / max_abs(M) < 1e-10);

        // Gâteaux differences
        const ScalarField dD = real_part(enveloped(g, rng, 0.2, 0.1, 0.8));
        const Vec3Field ds{imag_part(enveloped(g, rng, 0.0, 0.3, 0.8)), real_part(enveloped(g, rng, -0.3, 0.0, 0.8)),
                           imag_part(enveloped(g, rng, 0.1, -0.1, 0.8))};
        double an = integrate(d.dh_dD * dD);
        for (int c = 0; c < 3; ++c) an += integrate(d.dh_ds[c] * ds[c]);
        const double h = 1e-5;
        Vec3Field sp = R.s, sm = R.s;
        for (int c = 0; c < 3; ++c) {
            sp[c] += h * ds[c];
            sm[c] -= h * ds[c];
        }
        const double fd = (spin_hamiltonian(sb, R.with(R.D + h * dD, sp)) - spin_hamiltonian(sb, R.with(R.D - h * dD, sm))) / (2 * h);
        CHECK(std::abs(an - fd) / std::abs(fd) < 1e-5);
    }
}

TEST_CASE("spin RHS: precession, decoupled transport") {
    Grid g = box();
    const double hbar = 1.0;
    const ScalarField D = gaussian(g, 0.5, 0.0, 1.0, 0.9);
    const Vec3Field n0{ScalarField(g, 1.0), ScalarField(g, 0.0), ScalarField(g, 0.0)};
    const SpinState S = SpinState::pure(D, n0, hbar);
    const SpinHamiltonian field(g, Polynomial(), {Polynomial(), Polynomial::constant(0.4), Polynomial::constant(1.0)}, hbar);
    const SpinRhs r = spin_rhs(field, S);
    CHECK(max_abs(r.dD) < 1e-15);
    const Eigen::Vector3d Hc(0.0, 0.4, 1.0);
    double e = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Eigen::Vector3d s(S.s[0][k], S.s[1][k], S.s[2][k]), want = Hc.cross(s);
        for (int c = 0; c < 3; ++c) e = std::max(e, std::abs(r.ds[c][k] - want(c)));
    }
    CHECK(e < 1e-15);

    std::mt19937_64 rng(14);
    const SpinState R = random_spin(g, rng, 2, hbar);
    const SpinHamiltonian free(g, presets::harmonic(), {}, hbar);
    const ScalarJet H0 = ScalarJet::from_polynomial(g, presets::harmonic());
    const SpinRhs f = spin_rhs(free, R);
    // same 2/3 truncation as the state pipeline
    auto lv = [&](const ScalarField& x) {
        const ScalarJet j = ScalarJet::from_periodic(x, R.dealias);
        return H0.q * j.p - H0.p * j.q;
    };
    CHECK(max_diff(f.dD, lv(R.D)) < 1e-14);
    for (int c = 0; c < 3; ++c) CHECK(max_diff(f.ds[c], lv(R.s[c])) < 1e-8 * max_abs(lv(R.s[c])));
}

TEST_CASE("spin RHS equals the Pauli-mapped closure RHS") {
    Grid g = box();
    std::mt19937_64 rng(15);
    for (double hbar : {1.0, 0.7}) {
        const SpinHamiltonian sb = spin_boson_sh(g, hbar);
        const HybridHamiltonian Hm = sb.to_matrix();
        double worst = 0;
        for (int t = 0; t < 6; ++t) {
            const ClosureState P = random_state(g, rng, 1 + t % 2, hbar);
            const SpinState S = spin_from_density(P);
            const SpinRhs sr = spin_rhs(sb, S);
            const MatrixField cr = closure_rhs(Hm, P);
            ClosureState tmp = P;
            tmp.P = cr;
            const double scale = std::max(max_abs(cr.trace()), max_abs3(map_s(tmp)));
            ScalarField cd = cr.trace();
            Vec3Field cs{ScalarField(g), ScalarField(g), ScalarField(g)};
            for (std::size_t k = 0; k < g.size(); ++k)
                for (int c = 0; c < 3; ++c) {
                    cplx v = 0;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) v += cr(a, b, k) * pauli()[c](b, a);
                    cs[c][k] = 0.5 * hbar * v.real();
                }
            worst = std::max({worst, max_diff(sr.dD, cd) / scale, max_diff3(sr.ds, cs) / scale});
        }
        MESSAGE("max relative spin/closure RHS difference: " << worst);
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("spin Casimirs") {
    Grid g = box();
    std::mt19937_64 rng(16);
    const double hbar = 0.8;
    const SpinState pure = random_spin(g, rng, 1, hbar);
    const double bound = reg_bound(density_from_spin(pure));
    CHECK(std::abs(spin_casimir(pure, PhiSpec::power(0)) - 1.0) < 1e-12);
    CHECK(std::abs(spin_casimir(pure, PhiSpec::power(1)) - 0.5 * hbar) < bound);
    CHECK(spin_purity_defect(pure) < 1e-10);
    const SpinState mixed = random_spin(g, rng, 2, hbar);
    const ClosureState Pm = density_from_spin(mixed);
    // Tr ρ² = 1/2 + 2|s̃|²/(ħD)²
    CHECK(std::abs(casimir(Pm, PhiSpec::power(2)) -
                   (0.5 * spin_casimir(mixed, PhiSpec::power(0)) + 2 / (hbar * hbar) * spin_casimir(mixed, PhiSpec::power(2)))) < reg_bound(Pm));
    CHECK(std::abs(casimir(Pm, PhiSpec::entropy()) - spin_casimir(mixed, PhiSpec::entropy())) < 1e-10);
    CHECK(spin_purity_defect(mixed) > 1e-3);
    CHECK_THROWS_AS(spin_casimir(pure, PhiSpec::power(5)), UnsupportedPhi);
}

TEST_CASE("spin bracket") {
    Grid g = box();
    std::mt19937_64 rng(17);
    const double hbar = 0.9;
    const SpinState S = random_spin(g, rng, 2, hbar);
    const auto f = SpinFunctionalSpec::linear(Polynomial::monomial(0, 1, 0.4),
                                              {Polynomial::monomial(1, 0, 1.0), Polynomial(), Polynomial::constant(0.5)});
    const auto h = SpinFunctionalSpec::quadratic(Polynomial::monomial(1, 0, 0.2),
                                                 {Polynomial(), Polynomial::monomial(0, 1, 1.0), Polynomial()},
                                                 Polynomial::constant(1.0),
                                                 {Polynomial::monomial(2, 0, 0.3), Polynomial(), Polynomial()});
    CHECK(spin_bracket_eval(f, f, S) == 0.0);
    CHECK(spin_bracket_eval(h, h, S) == 0.0);
    const double fh = spin_bracket_eval(f, h, S);
    CHECK(std::abs(fh) > 1e-3);
    CHECK(std::abs(fh + spin_bracket_eval(h, f, S)) < 1e-14 * std::abs(fh));
    // same value as the matrix bracket of the same functionals
    const ClosureState P = density_from_spin(S);
    CHECK(std::abs(spin_functional_value(h, S) - functional_value(h.to_matrix(hbar), P)) < 1e-12);
    CHECK(std::abs(fh - bracket_eval(f.to_matrix(hbar), h.to_matrix(hbar), P)) < 1e-10 * std::abs(fh));

    const SpinHamiltonian sb = spin_boson_sh(g, hbar);
    const SpinRhs r = spin_rhs(sb, S);
    for (const auto* fs : {&f, &h}) {
        const double dt = 1e-4;
        Vec3Field sp = S.s, sm = S.s;
        for (int c = 0; c < 3; ++c) {
            sp[c] += dt * r.ds[c];
            sm[c] -= dt * r.ds[c];
        }
        const double ddt = (spin_functional_value(*fs, S.with(S.D + dt * r.dD, sp)) -
                            spin_functional_value(*fs, S.with(S.D - dt * r.dD, sm))) / (2 * dt);
        const double br = spin_bracket_eval(*fs, sb, S);
        CHECK(std::abs(ddt - br) / std::abs(br) < 1e-5);
        CHECK(std::abs(br - bracket_eval(fs->to_matrix(hbar), sb.to_matrix(), P)) < 1e-8 * std::abs(br));
    }
}
