#include "closure_support.hpp"

#include <Eigen/QR>
#include <doctest.h>

using namespace kvh;
using namespace kvh::testing;

namespace {

ScalarField trace_of_bracket(const HybridHamiltonian& H, const MatrixField& X) {
    const MatrixField Xq = partial(X, Axis::Q), Xp = partial(X, Axis::P);
    ScalarField out(X.grid());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = (mat(H.q, k) * mat(Xp, k) - mat(H.p, k) * mat(Xq, k)).trace().real();
    return out;
}

} // namespace

TEST_CASE("purely classical Hamiltonian reduces to Liouville transport") {
    Grid g = box();
    std::mt19937_64 rng(1);
    const ClosureState s = random_state(g, rng, 2);
    const Polynomial h0 = Polynomial::from_list({0, 0.1, 0, 0.5, 0.1, 0.5, 0.05});
    const auto H = HybridHamiltonian::scalar(g, 2, h0);
    const ScalarJet Hj = ScalarJet::from_polynomial(g, h0);
    const ScalarField D = s.D();
    CHECK(std::abs(closure_hamiltonian(H, s) - integrate(D * Hj.v)) < 1e-12);
    const auto der = closure_var_derivative(H, s);
    CHECK(max_abs(der.dh_dD) == 0.0);
    CHECK(max_diff(der.dH_dP, H.value) < 1e-13);
    const auto V = closure_velocity(H, s);
    double dv = 0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (D[k] > 1e-3 * max_abs(D)) dv = std::max({dv, std::abs(V.q[k] - Hj.p[k]), std::abs(V.p[k] + Hj.q[k])});
    CHECK(dv < 1e-12);

    // 𝒫 = Dρ₀ stays a product and D follows the Liouville equation
    CMatrix rho0(2, 2);
    rho0 << 0.7, cplx(0.2, 0.3), cplx(0.2, -0.3), 0.3;
    const ClosureState prod = ClosureState::product(testing::gaussian(g, 1.0, 0.5, 0.8, 0.9), rho0, 1.0);
    const MatrixField r = closure_rhs(H, prod);
    const ScalarField lv = liouville_rhs(Hj, prod.D());
    double e = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(r(a, b, k) - rho0(a, b) * lv[k]));
    // floor: the r(D)·D switch-off near D ~ ε rings at the ε·k_max level
    CHECK(e / max_abs(lv) < 1e-8);
}

TEST_CASE("constant matrix Hamiltonian: no transport, pointwise precession") {
    Grid g = box();
    std::mt19937_64 rng(2);
    const ClosureState s = random_state(g, rng, 1, 0.7);
    CMatrix A(2, 2);
    A << 0.4, cplx(0.3, -0.1), cplx(0.3, 0.1), -0.6;
    const auto H = HybridHamiltonian::constant(g, A);
    const auto der = closure_var_derivative(H, s);
    CHECK(max_diff(der.dH_dP, H.value) < 1e-15);
    const auto V = closure_velocity(H, s);
    CHECK(max_abs(V.q) < 1e-15);
    CHECK(max_abs(V.p) < 1e-15);
    const MatrixField r = closure_rhs(H, s);
    double e = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Eigen::Matrix2cd P = mat(s.P, k);
        e = std::max(e, (mat(r, k) - cplx(0, -1 / 0.7) * (A * P - P * A)).cwiseAbs().maxCoeff());
    }
    CHECK(e < 1e-14);
    // quantum density obeys the von Neumann equation
    const CMatrix rq = integrate(s.P), drq = integrate(r);
    CHECK((drq - cplx(0, -1 / 0.7) * (A * rq - rq * A)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("z-independent conditional state: energy is the mean-field value") {
    Grid g = box();
    CMatrix rho0(2, 2);
    rho0 << 0.25, cplx(0.0, 0.433), cplx(0.0, -0.433), 0.75;
    const ScalarField D = testing::gaussian(g, -0.5, 0.8, 0.9, 0.7);
    const ClosureState s = ClosureState::product(D, rho0, 1.0);
    const auto H = spin_boson(g);
    ScalarField avg(g);
    for (std::size_t k = 0; k < g.size(); ++k) avg[k] = (rho0 * mat(H.value, k)).trace().real();
    CHECK(std::abs(closure_hamiltonian(H, s) - integrate(D * avg)) < 1e-12);
    CHECK(max_abs(hybrid_density_closure(s) - s.P) < 1e-14);
}

TEST_CASE("closure energy agrees with the (D, ψ) Berry-connection form") {
    Grid g = box();
    const double hbar = 0.8;
    const AnalyticPure a(g);
    const ClosureState s = a.state(hbar);
    const auto H = spin_boson(g, hbar);
    ScalarField e(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Eigen::Vector2cd v = vec(a.psi, k), vq = vec(a.psi_q, k), vp = vec(a.psi_p, k);
        const Eigen::Matrix2cd Hv = mat(H.value, k), Hq = mat(H.q, k), Hp = mat(H.p, k);
        const double tq = (vq.adjoint() * Hp * v)(0).imag() + v.dot(vq).imag() * (v.adjoint() * Hp * v)(0).real();
        const double tp = (vp.adjoint() * Hq * v)(0).imag() + v.dot(vp).imag() * (v.adjoint() * Hq * v)(0).real();
        e[k] = a.D[k] * ((v.adjoint() * Hv * v)(0).real() - hbar * (tq - tp));
    }
    const double oracle = integrate(e), h = closure_hamiltonian(H, s);
    CHECK(std::abs(h - oracle) < 1e-8);
    CHECK(std::abs(h - integrate(a.D * real_part(ComplexField(g)))) > 1e-3); // the commutator term is not trivial here
}

TEST_CASE("functional derivative matches Gateaux differences") {
    Grid g = box();
    std::mt19937_64 rng(3);
    const auto H = spin_boson(g, 0.9);
    for (int terms : {1, 2}) {
        const ClosureState s = random_state(g, rng, terms, 0.9);
        const MatrixField dP = random_direction(g, rng);
        const auto der = closure_var_derivative(H, s);
        CHECK(der.dH_dP.hermiticity_defect() < 1e-12);
        ScalarField pair(g);
        for (std::size_t k = 0; k < g.size(); ++k) pair[k] = (mat(der.dH_dP, k) * mat(dP, k)).trace().real();
        const double an = integrate(pair);
        const double h = 1e-5;
        MatrixField plus = s.P, minus = s.P;
        for (std::size_t k = 0; k < plus.raw().size(); ++k) {
            plus.raw()[k] += h * dP.raw()[k];
            minus.raw()[k] -= h * dP.raw()[k];
        }
        const double fd = (closure_hamiltonian(H, s.with(plus)) - closure_hamiltonian(H, s.with(minus))) / (2 * h);
        CHECK(std::abs(an - fd) / std::abs(fd) < 1e-5);
    }
}

TEST_CASE("closure RHS: Hermitian, trace slaved to the D advection, total probability conserved") {
    Grid g = box();
    std::mt19937_64 rng(4);
    const auto H = spin_boson(g);
    for (int terms : {1, 2}) {
        const ClosureState s = random_state(g, rng, terms);
        const MatrixField r = closure_rhs(H, s);
        CHECK(r.hermiticity_defect() < 1e-14);
        const auto V = closure_velocity(H, s);
        const ScalarField D = s.D();
        const ScalarField adv = divergence(PhaseVectorField(D * V.q, D * V.p), {DiffBackend::Spectral, s.dealias});
        CHECK(max_diff(r.trace(), -adv) < 1e-8);
        CHECK(std::abs(integrate(r.trace())) < 1e-8);

        const SplitRhs sp = closure_rhs_split(H, s);
        const double scale = max_abs(r);
        CHECK(max_diff(sp.dD, r.trace()) / scale < 1e-8);
        CHECK(max_abs(sp.dP - r) / scale < 1e-8);
        CHECK(max_diff(sp.dP.trace(), sp.dD) / scale < 1e-8);
    }
}

TEST_CASE("modified hybrid density operator") {
    Grid g = box();
    std::mt19937_64 rng(5);
    const auto H = spin_boson(g);
    for (int terms : {1, 2}) {
        const ClosureState s = random_state(g, rng, terms);
        const MatrixField dh = hybrid_density_closure(s);
        CHECK(dh.hermiticity_defect() < 1e-14);
        CHECK(max_diff(dh.trace(), s.P.trace()) < 1e-10);
        CHECK((integrate(dh) - integrate(s.P)).cwiseAbs().maxCoeff() < 1e-10);
        ScalarField e(g);
        for (std::size_t k = 0; k < g.size(); ++k) e[k] = (mat(H.value, k) * mat(dh, k)).trace().real();
        CHECK(std::abs(integrate(e) - closure_hamiltonian(H, s)) < 1e-8);
    }
}

TEST_CASE("marginal laws of the modified hybrid density") {
    Grid g = box();
    std::mt19937_64 rng(6);
    const double hbar = 0.9;
    const auto H = spin_boson(g, hbar);
    const ClosureState s = random_state(g, rng, 1, hbar);
    const MatrixField r = closure_rhs(H, s);
    const MatrixField dh = hybrid_density_closure(s);
    const ScalarField dD = r.trace();
    CHECK(max_diff(dD, trace_of_bracket(H, dh)) / max_abs(dD) < 1e-6);
    MatrixField comm(dh);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Eigen::Matrix2cd c = mat(H.value, k) * mat(dh, k) - mat(dh, k) * mat(H.value, k);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) comm(a, b, k) = c(a, b);
    }
    const CMatrix lhs = cplx(0, hbar) * integrate(r), rhs = integrate(comm);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("equivariance of the hybrid density") {
    Grid g = box();
    std::mt19937_64 rng(7);
    const ClosureState s = random_state(g, rng, 2);
    CHECK(equivariance_check(s, CMatrix::Identity(2, 2)) == 0.0);
    for (int t = 0; t < 3; ++t) {
        const CMatrix U = Eigen::HouseholderQR<CMatrix>(CMatrix::Random(2, 2)).householderQ();
        CHECK(equivariance_check(s, U) < 1e-12);
    }
    CHECK(equivariance_check_rotation(s) < 1e-10);
    CMatrix bad = CMatrix::Identity(2, 2) * 1.1;
    CHECK_THROWS_AS(equivariance_check(s, bad), NonUnitary);
}

TEST_CASE("Ehrenfest and mean-field models") {
    Grid g = box();
    CMatrix rho0(2, 2);
    rho0 << 0.6, cplx(0.1, 0.45), cplx(0.1, -0.45), 0.4;
    const ScalarField D = testing::gaussian(g, 1.0, 0.0, 0.8, 0.8);
    CMatrix A(2, 2);
    A << 0.5, 0.2, 0.2, -0.5;
    const auto Hc = HybridHamiltonian::constant(g, A);
    const ClosureState s = ClosureState::product(D, rho0, 1.0);
    const MatrixField r = ehrenfest_rhs(Hc, s);
    CHECK(max_abs(r.trace()) < 1e-15);
    const CMatrix drho = integrate(r);
    CHECK((drho - cplx(0, -1) * (A * rho0 - rho0 * A)).cwiseAbs().maxCoeff() < 1e-10);

    const Polynomial h0 = presets::harmonic();
    const auto Hs = HybridHamiltonian::scalar(g, 2, h0);
    const ScalarField lv = liouville_rhs(ScalarJet::from_polynomial(g, h0), D);
    CHECK(max_diff(ehrenfest_rhs(Hs, s).trace(), lv) < 1e-8 * max_abs(lv));
    const MeanFieldRhs mf = meanfield_rhs(Hs, MeanFieldState{D, rho0, 1.0});
    CHECK(max_diff(mf.dD, lv) < 1e-13);
    CHECK(mf.drho.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(meanfield_energy(Hs, MeanFieldState{D, rho0, 1.0}) - ehrenfest_energy(Hs, s)) < 1e-12);

    // the Ehrenfest velocity is the Tr𝒫-weighted average of X_Ĥ
    const auto Hsb = spin_boson(g);
    const auto V = ehrenfest_velocity(Hsb, s);
    double e = 0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (D[k] > 1e-3 * max_abs(D)) e = std::max(e, std::abs(V.q[k] - (rho0 * mat(Hsb.p, k)).trace().real()));
    CHECK(e < 1e-12);
}

TEST_CASE("Casimir evaluators") {
    Grid g = box();
    std::mt19937_64 rng(8);
    const ClosureState pure = random_state(g, rng, 1);
    CHECK(std::abs(casimir(pure, PhiSpec::power(1)) - 1.0) < reg_bound(pure));
    CHECK(std::abs(casimir(pure, PhiSpec::power(2)) - 1.0) < 2 * reg_bound(pure));
    CHECK(std::abs(casimir(pure, PhiSpec::power(4)) - 1.0) < 4 * reg_bound(pure));
    CHECK(std::abs(casimir(pure, PhiSpec::entropy())) < 1e-7);
    CHECK_FALSE(pure.mixed);
    const ClosureState flat = ClosureState::product(testing::gaussian(g, 0, 0, 1, 1), CMatrix::Identity(2, 2) / 2, 1.0);
    CHECK(flat.mixed);
    CHECK(std::abs(casimir(flat, PhiSpec::power(2)) - 0.5) < 2 * reg_bound(flat));
    CHECK(std::abs(casimir(flat, PhiSpec::entropy()) - std::log(2.0)) < 1e-10);
    CHECK_THROWS_AS(casimir(pure, PhiSpec::power(5)), UnsupportedPhi);
    CHECK_THROWS_AS(casimir(pure, PhiSpec::power(0)), UnsupportedPhi);
}

TEST_CASE("bracket evaluator") {
    Grid g = box();
    std::mt19937_64 rng(9);
    const double hbar = 0.8;
    const ClosureState s = random_state(g, rng, 2, hbar);
    const auto& sig = pauli();
    const auto f = FunctionalSpec::linear({{Polynomial::monomial(1, 0, 1.0), CMatrix(sig[0])},
                                          {Polynomial::monomial(0, 1, 0.5), CMatrix(sig[2])}});
    const auto h = FunctionalSpec::quadratic({{Polynomial::monomial(0, 1, 1.0), CMatrix(sig[1])}},
                                             {{Polynomial::monomial(2, 0, 0.3), CMatrix(sig[0])},
                                              {Polynomial::constant(1.0), CMatrix::Identity(2, 2)}});
    const auto id = FunctionalSpec::linear({{Polynomial::constant(1.0), CMatrix::Identity(2, 2)}});
    CHECK(bracket_eval(f, f, s) == 0.0);
    CHECK(bracket_eval(h, h, s) == 0.0);
    CHECK(bracket_eval(id, f, s) == 0.0);
    CHECK(bracket_eval(id, h, s) == 0.0);
    const double fh = bracket_eval(f, h, s), hf = bracket_eval(h, f, s);
    CHECK(std::abs(fh) > 1e-3);
    CHECK(std::abs(fh + hf) < 1e-14 * std::abs(fh) + 1e-16);
    CHECK_THROWS_AS(bracket_eval(FunctionalSpec::linear({}), f, s), UnsupportedFunctional);

    // d/dt f along the closure flow equals {{f, ℋ}}
    const auto H = spin_boson(g, hbar);
    const MatrixField r = closure_rhs(H, s);
    for (const auto* fs : {&f, &h}) {
        const double dt = 1e-4;
        MatrixField plus = s.P, minus = s.P;
        for (std::size_t k = 0; k < plus.raw().size(); ++k) {
            plus.raw()[k] += dt * r.raw()[k];
            minus.raw()[k] -= dt * r.raw()[k];
        }
        const double ddt = (functional_value(*fs, s.with(plus)) - functional_value(*fs, s.with(minus))) / (2 * dt);
        const double br = bracket_eval(*fs, H, s);
        CHECK(std::abs(ddt - br) / std::abs(br) < 1e-5);
    }
}

TEST_CASE("Berry curvature from the closure state") {
    Grid g = box();
    const double hbar = 1.2;
    const AnalyticPure a(g);
    const ClosureState s = a.state(hbar);
    const ScalarField B = berry_curvature(s);
    double e = 0, scale = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (a.D[k] < 1e-6 * max_abs(a.D)) continue;
        const double exact = 2 * hbar * vec(a.psi_q, k).dot(vec(a.psi_p, k)).imag();
        e = std::max(e, std::abs(B[k] - exact));
        scale = std::max(scale, std::abs(exact));
    }
    CHECK(scale > 0.01);
    CHECK(e / scale < 1e-6);
    CHECK(purity_defect(s) < 1e-12);
}

TEST_CASE("omega + Berry curvature is transported by the closure flow") {
    Grid g = box();
    const double hbar = 1.0;
    const AnalyticPure a(g);
    const ClosureState s = a.state(hbar);
    const auto H = spin_boson(g, hbar);
    const MatrixField r = closure_rhs(H, s);
    const auto X = closure_velocity(H, s);
    const ScalarField B = berry_curvature(s);
    for (auto [q0, p0] : {std::pair{0.5, -0.3}, std::pair{1.0, 0.2}, std::pair{-0.2, -0.8}}) {
        const double w = 0.5;
        ScalarField phi(g), phq(g), php(g);
        for (int i = 0; i < g.nq(); ++i)
            for (int j = 0; j < g.np(); ++j) {
                const double dq = g.q(i) - q0, dp = g.p(j) - p0, v = std::exp(-(dq * dq + dp * dp) / (2 * w * w));
                phi.at(i, j) = v;
                phq.at(i, j) = -dq / (w * w) * v;
                php.at(i, j) = -dp / (w * w) * v;
            }
        const double dt = 1e-5;
        MatrixField plus = s.P, minus = s.P;
        for (std::size_t k = 0; k < plus.raw().size(); ++k) {
            plus.raw()[k] += dt * r.raw()[k];
            minus.raw()[k] -= dt * r.raw()[k];
        }
        const double ddt = (integrate(phi * berry_curvature(s.with(plus))) - integrate(phi * berry_curvature(s.with(minus)))) / (2 * dt);
        ScalarField flux(g);
        for (std::size_t k = 0; k < g.size(); ++k) flux[k] = (1.0 + B[k]) * (X.q[k] * phq[k] + X.p[k] * php[k]);
        const double transport = integrate(flux);
        MESSAGE("d/dt ∫φℬ = " << ddt << ", ∫(1+ℬ)𝒳·∇φ = " << transport);
        CHECK(std::abs(ddt - transport) < 1e-4 * std::max(std::abs(ddt), std::abs(transport)));
    }
}

TEST_CASE("state validation") {
    Grid g(16, 4.0);
    CHECK_THROWS_AS(ClosureState(MatrixField(g, 2), 1.0), DegenerateDensity);
    MatrixField P(g, 2);
    P(0, 1, 3) = 1.0;
    P(0, 0, 3) = 1.0;
    CHECK_THROWS_AS(ClosureState(P, 1.0), NonHermitian);
    const ClosureState s = ClosureState::product(testing::gaussian(g, 0, 0, 1, 1), CMatrix::Identity(2, 2) / 2, 1.0);
    CHECK_THROWS_AS(closure_rhs(HybridHamiltonian::constant(g, CMatrix::Identity(3, 3)), s), WrongQuantumDimension);
}
