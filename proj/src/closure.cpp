#include "kvh/closure.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace kvh {

namespace {

template <int N>
using Mat = Eigen::Matrix<cplx, N, N>;

template <class M>
[[gnu::always_inline]] inline M load(const MatrixField& f, std::size_t k) {
    constexpr int fixed = M::RowsAtCompileTime;
    const int n = fixed == Eigen::Dynamic ? f.n() : fixed;
    const std::size_t np = f.npts();
    const cplx* v = f.raw().data() + k;
    M m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m(a, b) = v[(a * n + b) * np];
    return m;
}

template <class M>
[[gnu::always_inline]] inline void store(MatrixField& f, std::size_t k, const M& m) {
    constexpr int fixed = M::RowsAtCompileTime;
    const int n = fixed == Eigen::Dynamic ? f.n() : fixed;
    const std::size_t np = f.npts();
    cplx* v = f.raw().data() + k;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) v[(a * n + b) * np] = m(a, b);
}

template <class M>
M comm(const M& a, const M& b) {
    return a * b - b * a;
}

// [A, B] for Hermitian A, B, given Y = AB (or a sum of such products): Y − Y†
template <class M>
M skew(const M& y) {
    return y - y.adjoint();
}

// Tr(ab) without forming the product
template <class A, class B>
cplx tr(const A& a, const B& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

// n = 2 gets fixed-size Eigen matrices, everything else dynamic.
template <class Fn>
void dispatch(int n, Fn&& fn) {
    if (n == 2)
        fn.template operator()<2>();
    else
        fn.template operator()<Eigen::Dynamic>();
}

struct Reg {
    double r, r1, r2; // r(D) and its first two derivatives
};

Reg regularize(double D, double eps) {
    const double e2 = eps * eps, s = D * D + e2;
    return {D / s, (e2 - D * D) / (s * s), -2.0 * D * (3.0 * e2 - D * D) / (s * s * s)};
}

void check_pair(const HybridHamiltonian& H, const ClosureState& s) {
    if (H.n() != s.n()) throw WrongQuantumDimension("Hamiltonian and state dimensions differ");
    if (!H.grid().same_as(s.grid())) throw ShapeMismatch("Hamiltonian and state grids differ");
}

void check_support(const ClosureState& s) {
    const ScalarField D = s.D();
    double total = 0, outside = 0;
    for (std::size_t k = 0; k < D.size(); ++k) {
        total += std::abs(D[k]);
        if (D[k] <= s.eps) outside += std::abs(D[k]);
    }
    if (!(total > 0) || outside > 1e-3 * total)
        throw DegenerateDensity("too much mass below the regularization scale");
}

// Everything the closure needs per point: δℋ/δ𝒫 with its first derivatives, the scalar
// part δh/δD, the energy density and the transport velocity ⟨X_{δℋ/δ𝒫}⟩.
struct Pipeline {
    MatrixField M, Mq, Mp;
    ScalarField hD, hDq, hDp, e;
    PhaseVectorField V;
    MatrixDerivatives d;
    Pipeline(const ClosureState& s, bool second)
        : M(s.P), Mq(s.P), Mp(s.P), hD(s.grid()), hDq(s.grid()), hDp(s.grid()), e(s.grid()), V(s.grid()),
          d(hermitian_derivatives(s.P, second, s.dealias)) {}
};

// Ĥ = h·Id: K and C vanish identically, so δℋ/δ𝒫 = Ĥ and only the transport is left.
Pipeline classical_pipeline(const HybridHamiltonian& H, const ClosureState& s) {
    Pipeline out(s, false);
    out.M = H.value;
    out.Mq = H.q;
    out.Mp = H.p;
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k);
            const Reg g = regularize(P.trace().real(), s.eps);
            out.e[k] = tr(P, load<M>(H.value, k)).real();
            out.V.q[k] = g.r * tr(P, load<M>(H.p, k)).real();
            out.V.p[k] = -g.r * tr(P, load<M>(H.q, k)).real();
        }
    });
    return out;
}

Pipeline run_pipeline(const HybridHamiltonian& H, const ClosureState& s) {
    check_pair(H, s);
    check_support(s);
    if (H.classical) return classical_pipeline(H, s);
    Pipeline out(s, true);
    const MatrixDerivatives& d = out.d;
    const std::size_t npts = s.P.npts();
    const int n = s.n();
    const cplx c(0.0, s.hbar), c2 = 0.5 * c;
    dispatch(n, [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < npts; ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            const M Pqq = load<M>(d.qq, k), Pqp = load<M>(d.qp, k), Ppp = load<M>(d.pp, k);
            const M Hv = load<M>(H.value, k), Hq = load<M>(H.q, k), Hp = load<M>(H.p, k);
            const M Hqq = load<M>(H.qq, k), Hqp = load<M>(H.qp, k), Hpp = load<M>(H.pp, k);
            const double D = P.trace().real(), Dq = Pq.trace().real(), Dp = Pp.trace().real();
            const double Dqq = Pqq.trace().real(), Dqp = Pqp.trace().real(), Dpp = Ppp.trace().real();
            const Reg g = regularize(D, s.eps);

            // every factor below is Hermitian, so each commutator costs one product
            const M K = skew<M>(Pq * Hp - Pp * Hq);
            const M Kq = skew<M>(Pqq * Hp + Pq * Hqp - Pqp * Hq - Pp * Hqq);
            const M Kp = skew<M>(Pqp * Hp + Pq * Hpp - Ppp * Hq - Pp * Hqp);
            const M B = Dq * Hp - Dp * Hq;
            const M Bq = Dqq * Hp + Dq * Hqp - Dqp * Hq - Dp * Hqq;
            const M Bp = Dqp * Hp + Dq * Hpp - Dpp * Hq - Dp * Hqp;
            const M C = skew<M>(B * P);
            const M Cq = skew<M>(Bq * P + B * Pq), Cp = skew<M>(Bp * P + B * Pp);
            const cplx G = tr(P, K), Gq = tr(Pq, K) + tr(P, Kq), Gp = tr(Pp, K) + tr(P, Kp);

            const double hD = (c2 * g.r1 * G).real();
            const double hDq = (c2 * (g.r2 * Dq * G + g.r1 * Gq)).real();
            const double hDp = (c2 * (g.r2 * Dp * G + g.r1 * Gp)).real();
            M Mv = Hv + (c * g.r) * K - (c2 * g.r1) * C;
            M Mq = Hq + c * (g.r1 * Dq * K + g.r * Kq) - c2 * (g.r2 * Dq * C + g.r1 * Cq);
            M Mp = Hp + c * (g.r1 * Dp * K + g.r * Kp) - c2 * (g.r2 * Dp * C + g.r1 * Cp);
            Mv.diagonal().array() += hD;
            Mq.diagonal().array() += hDq;
            Mp.diagonal().array() += hDp;

            store(out.M, k, Mv);
            store(out.Mq, k, Mq);
            store(out.Mp, k, Mp);
            out.hD[k] = hD;
            out.hDq[k] = hDq;
            out.hDp[k] = hDp;
            out.e[k] = tr(P, Hv).real() + (c2 * g.r * G).real();
            out.V.q[k] = g.r * tr(P, Mp).real();
            out.V.p[k] = -g.r * tr(P, Mq).real();
        }
    });
    return out;
}

// −div(𝒫V) − (i/ħ)[M, 𝒫]; the commutator is skipped when M is a multiple of the identity
MatrixField transport_rhs(const ClosureState& s, const MatrixField& Mf, const PhaseVectorField& V,
                          bool scalar_M = false) {
    const std::size_t npts = s.P.npts();
    const std::size_t planes = s.P.raw().size() / npts;
    MatrixField fq(s.P), fp(s.P);
    for (std::size_t e = 0; e < planes; ++e) {
        const cplx* src = s.P.raw().data() + e * npts;
        cplx* a = fq.raw().data() + e * npts;
        cplx* b = fp.raw().data() + e * npts;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < npts; ++k) {
            a[k] = V.q[k] * src[k];
            b[k] = V.p[k] * src[k];
        }
    }
    MatrixField out = hermitian_divergence(fq, fp, s.dealias);
    out *= -1.0;
    if (scalar_M) return out;
    const cplx mi(0.0, -1.0 / s.hbar);
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < npts; ++k) {
            const M P = load<M>(s.P, k), Mv = load<M>(Mf, k);
            store(out, k, (load<M>(out, k) + mi * skew<M>(Mv * P)).eval());
        }
    });
    return out;
}

// Value and first derivatives of a matrix-valued functional derivative.
struct MatJet {
    MatrixField v, q, p;
};

MatJet jet_of(const FunctionalSpec& f, const ClosureState& s) {
    const Grid& g = s.grid();
    const int n = s.n();
    if (f.A.empty()) throw UnsupportedFunctional("functional needs at least one term");
    const HybridHamiltonian A = HybridHamiltonian::from_terms(g, n, f.A);
    if (f.kind == FunctionalSpec::Kind::Linear) return {A.value, A.q, A.p};
    if (f.kind != FunctionalSpec::Kind::Quadratic || f.B.empty())
        throw UnsupportedFunctional("unknown functional family");
    const HybridHamiltonian B = HybridHamiltonian::from_terms(g, n, f.B);
    const MatrixDerivatives d = hermitian_derivatives(s.P, false, s.dealias);
    const double N = integrate(s.D());
    const double fv = functional_value(f, s);
    MatJet out{MatrixField(s.P), MatrixField(s.P), MatrixField(s.P)};
    dispatch(n, [&]<int Nn>() {
        using M = Mat<Nn>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            const M Av = load<M>(A.value, k), Aq = load<M>(A.q, k), Ap = load<M>(A.p, k);
            const M Bv = load<M>(B.value, k), Bq = load<M>(B.q, k), Bp = load<M>(B.p, k);
            const double a = tr(P, Av).real(), b = tr(P, Bv).real();
            const double aq = (tr(Pq, Av) + tr(P, Aq)).real(), ap = (tr(Pp, Av) + tr(P, Ap)).real();
            const double bq = (tr(Pq, Bv) + tr(P, Bq)).real(), bp = (tr(Pp, Bv) + tr(P, Bp)).real();
            M v = (b * Av + a * Bv) / N;
            v.diagonal().array() -= fv / N;
            store(out.v, k, v);
            store(out.q, k, ((bq * Av + b * Aq + aq * Bv + a * Bq) / N).eval());
            store(out.p, k, ((bp * Av + b * Ap + ap * Bv + a * Bp) / N).eval());
        }
    });
    return out;
}

double bracket_of(const MatJet& F, const MatJet& G, const ClosureState& s) {
    ScalarField dens(s.grid());
    const double ih = 1.0 / s.hbar;
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k);
            const M Fv = load<M>(F.v, k), Fq = load<M>(F.q, k), Fp = load<M>(F.p, k);
            const M Gv = load<M>(G.v, k), Gq = load<M>(G.q, k), Gp = load<M>(G.p, k);
            const Reg g = regularize(P.trace().real(), s.eps);
            const double quantum = (cplx(0.0, -ih) * tr(P, comm(Fv, Gv))).real();
            const double fq = tr(P, Fq).real(), fp = tr(P, Fp).real();
            const double gq = tr(P, Gq).real(), gp = tr(P, Gp).real();
            dens[k] = quantum + g.r * (fq * gp - fp * gq);
        }
    });
    return integrate(dens);
}

} // namespace

ClosureState::ClosureState(MatrixField p, double hbar_, double d_floor_)
    : P(std::move(p)), hbar(hbar_), d_floor(d_floor_) {
    if (!(hbar > 0)) throw Error("hbar must be positive");
    if (!(d_floor > 0)) throw Error("d_floor must be positive");
    const ScalarField D = P.trace();
    const double dmax = max_abs(D);
    if (!(dmax > 0)) throw DegenerateDensity("Tr𝒫 vanishes everywhere");
    if (P.hermiticity_defect() > 1e-12 * max_abs(P)) throw NonHermitian("𝒫(z) is not Hermitian");
    eps = d_floor * dmax;
    mixed = purity_defect(*this) > 1e-8;
}

ClosureState ClosureState::pure(const ScalarField& D, const AmplitudeField& psi, double hbar, double d_floor) {
    if (!D.grid().same_as(psi.grid())) throw ShapeMismatch("D and ψ grids differ");
    const int n = psi.n();
    MatrixField P(D.grid(), n);
    for (std::size_t k = 0; k < D.size(); ++k) {
        double s = 0;
        for (int a = 0; a < n; ++a) s += std::norm(psi.comp(a)[k]);
        if (D[k] != 0.0 && std::abs(s - 1.0) > 1e-8) throw NonNormalized("ψ(z) is not a unit vector");
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) P(a, b, k) = D[k] * psi.comp(a)[k] * std::conj(psi.comp(b)[k]);
    }
    return ClosureState(std::move(P), hbar, d_floor);
}

ClosureState ClosureState::product(const ScalarField& D, const CMatrix& rho0, double hbar, double d_floor) {
    const int n = static_cast<int>(rho0.rows());
    MatrixField P(D.grid(), n);
    for (std::size_t k = 0; k < D.size(); ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) P(a, b, k) = D[k] * rho0(a, b);
    return ClosureState(std::move(P), hbar, d_floor);
}

ClosureState ClosureState::with(MatrixField p) const {
    ClosureState out = *this;
    out.P = std::move(p);
    return out;
}

ScalarField closure_energy_density(const HybridHamiltonian& H, const ClosureState& s) {
    check_pair(H, s);
    check_support(s);
    const MatrixDerivatives d = hermitian_derivatives(s.P, false, s.dealias);
    ScalarField e(s.grid());
    const cplx c2(0.0, 0.5 * s.hbar);
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            const M Hv = load<M>(H.value, k), Hq = load<M>(H.q, k), Hp = load<M>(H.p, k);
            const M K = comm(Pq, Hp) - comm(Pp, Hq);
            const Reg g = regularize(P.trace().real(), s.eps);
            e[k] = tr(P, Hv).real() + (c2 * g.r * tr(P, K)).real();
        }
    });
    return e;
}

double closure_hamiltonian(const HybridHamiltonian& H, const ClosureState& s) {
    return integrate(closure_energy_density(H, s));
}

ClosureDerivatives closure_var_derivative(const HybridHamiltonian& H, const ClosureState& s) {
    Pipeline p = run_pipeline(H, s);
    return {std::move(p.M), std::move(p.hD)};
}

PhaseVectorField closure_velocity(const HybridHamiltonian& H, const ClosureState& s) {
    return run_pipeline(H, s).V;
}

MatrixField closure_rhs(const HybridHamiltonian& H, const ClosureState& s) {
    const Pipeline p = run_pipeline(H, s);
    return transport_rhs(s, p.M, p.V, H.classical);
}

SplitRhs closure_rhs_split(const HybridHamiltonian& H, const ClosureState& s) {
    const Pipeline p = run_pipeline(H, s);
    const MatrixDerivatives& d = p.d;
    const std::size_t npts = s.P.npts();
    SplitRhs out{ScalarField(s.grid()), MatrixField(s.P)};
    MatrixField hP(s.P), fq(s.P), fp(s.P), adv(s.P);
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < npts; ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            M h = load<M>(p.M, k), hq = load<M>(p.Mq, k), hp = load<M>(p.Mp, k);
            h.diagonal().array() -= p.hD[k];
            hq.diagonal().array() -= p.hDq[k];
            hp.diagonal().array() -= p.hDp[k];
            const double Dq = Pq.trace().real(), Dp = Pp.trace().real();
            const Reg g = regularize(P.trace().real(), s.eps);
            const double vq = g.r * tr(P, hp).real(), vp = -g.r * tr(P, hq).real();
            out.dD[k] = -(Dq * p.hDp[k] - Dp * p.hDq[k]) - (tr(Pq, hp) - tr(Pp, hq)).real();
            store(adv, k, (-(Pq * p.hDp[k] - Pp * p.hDq[k])).eval());
            store(fq, k, (vq * P).eval());
            store(fp, k, (vp * P).eval());
            store(hP, k, h);
        }
    });
    out.dP = hermitian_divergence(fq, fp, s.dealias);
    out.dP *= -1.0;
    out.dP += adv;
    const cplx mi(0.0, -1.0 / s.hbar);
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < npts; ++k) {
            const M P = load<M>(s.P, k), h = load<M>(hP, k);
            M r = load<M>(out.dP, k);
            r += mi * comm(h, P);
            store(out.dP, k, r);
        }
    });
    return out;
}

// 𝒟̂ = 𝒫 + (iħ/2) div(r(D)[𝒫, X_𝒫]) = 𝒫 + (iħ/2)(r'(D_q[𝒫,𝒫_p] − D_p[𝒫,𝒫_q]) + 2r[𝒫_q,𝒫_p])
MatrixField hybrid_density_closure(const ClosureState& s) {
    check_support(s);
    const MatrixDerivatives d = hermitian_derivatives(s.P, false, s.dealias);
    MatrixField out(s.P);
    const cplx c2(0.0, 0.5 * s.hbar);
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            const double Dq = Pq.trace().real(), Dp = Pp.trace().real();
            const Reg g = regularize(P.trace().real(), s.eps);
            const M corr = g.r1 * (Dq * comm(P, Pp) - Dp * comm(P, Pq)) + 2.0 * g.r * comm(Pq, Pp);
            store(out, k, (P + c2 * corr).eval());
        }
    });
    return out;
}

double equivariance_check(const ClosureState& s, const CMatrix& U) {
    const int n = s.n();
    if (U.rows() != n || U.cols() != n) throw WrongQuantumDimension("U has the wrong size");
    if ((U.adjoint() * U - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
        throw NonUnitary("U†U differs from the identity");
    MatrixField rotated(s.P);
    const MatrixField dh = hybrid_density_closure(s);
    MatrixField rdh(s.P);
    for (std::size_t k = 0; k < s.P.npts(); ++k) {
        store(rotated, k, (U * load<CMatrix>(s.P, k) * U.adjoint()).eval());
        store(rdh, k, (U * load<CMatrix>(dh, k) * U.adjoint()).eval());
    }
    const MatrixField lhs = hybrid_density_closure(s.with(std::move(rotated)));
    return max_abs(lhs - rdh);
}

double equivariance_check_rotation(const ClosureState& s) {
    const MatrixField lhs = hybrid_density_closure(s.with(quarter_turn(s.P)));
    return max_abs(lhs - quarter_turn(hybrid_density_closure(s)));
}

MatrixField ehrenfest_rhs(const HybridHamiltonian& H, const ClosureState& s) {
    check_pair(H, s);
    check_support(s);
    return transport_rhs(s, H.value, ehrenfest_velocity(H, s), H.classical);
}

PhaseVectorField ehrenfest_velocity(const HybridHamiltonian& H, const ClosureState& s) {
    check_pair(H, s);
    PhaseVectorField V(s.grid());
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k);
            const Reg g = regularize(P.trace().real(), s.eps);
            V.q[k] = g.r * tr(P, load<M>(H.p, k)).real();
            V.p[k] = -g.r * tr(P, load<M>(H.q, k)).real();
        }
    });
    return V;
}

double ehrenfest_energy(const HybridHamiltonian& H, const ClosureState& s) {
    check_pair(H, s);
    ScalarField e(s.grid());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = tr(load<CMatrix>(s.P, k), load<CMatrix>(H.value, k)).real();
    return integrate(e);
}

namespace {
ScalarJet expectation_jet(const HybridHamiltonian& H, const CMatrix& rho) {
    ScalarJet j(H.grid());
    const MatrixField* src[6] = {&H.value, &H.q, &H.p, &H.qq, &H.qp, &H.pp};
    ScalarField* dst[6] = {&j.v, &j.q, &j.p, &j.qq, &j.qp, &j.pp};
    for (int t = 0; t < 6; ++t)
        for (std::size_t k = 0; k < j.v.size(); ++k) (*dst[t])[k] = tr(rho, load<CMatrix>(*src[t], k)).real();
    return j;
}
} // namespace

MeanFieldRhs meanfield_rhs(const HybridHamiltonian& H, const MeanFieldState& s) {
    if (H.n() != s.rho.rows()) throw WrongQuantumDimension("Hamiltonian and ρ̂ dimensions differ");
    const double mass = integrate(s.D);
    if (!(mass > 0)) throw DegenerateDensity("mean-field density has no mass");
    MatrixField w(H.value);
    for (int a = 0; a < H.n(); ++a)
        for (int b = 0; b < H.n(); ++b)
            for (std::size_t k = 0; k < w.npts(); ++k) w(a, b, k) *= s.D[k];
    const CMatrix hm = integrate(w); // ∫DĤ
    return {liouville_rhs(expectation_jet(H, s.rho), s.D), cplx(0.0, -1.0 / s.hbar) * (hm * s.rho - s.rho * hm)};
}

double meanfield_energy(const HybridHamiltonian& H, const MeanFieldState& s) {
    return integrate(expectation_jet(H, s.rho).v * s.D);
}

double casimir(const ClosureState& s, PhiSpec phi) {
    if (phi.kind == PhiSpec::Kind::Power && (phi.k < 1 || phi.k > 4))
        throw UnsupportedPhi("power must be between 1 and 4");
    check_support(s);
    ScalarField dens(s.grid());
    const int n = s.n();
    for (std::size_t k = 0; k < s.P.npts(); ++k) {
        const CMatrix P = load<CMatrix>(s.P, k);
        const double D = P.trace().real();
        const double r = regularize(D, s.eps).r;
        if (phi.kind == PhiSpec::Kind::Power) {
            CMatrix pw = CMatrix::Identity(n, n);
            for (int i = 0; i < phi.k; ++i) pw = pw * (r * P);
            dens[k] = D * pw.trace().real();
        } else {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(r * P, Eigen::EigenvaluesOnly);
            double h = 0;
            for (double l : es.eigenvalues())
                if (l > 0) h -= l * std::log(l);
            dens[k] = D * h;
        }
    }
    return integrate(dens);
}

double functional_value(const FunctionalSpec& f, const ClosureState& s) {
    if (f.A.empty()) throw UnsupportedFunctional("functional needs at least one term");
    const HybridHamiltonian A = HybridHamiltonian::from_terms(s.grid(), s.n(), f.A);
    ScalarField a(s.grid());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = tr(load<CMatrix>(s.P, k), load<CMatrix>(A.value, k)).real();
    if (f.kind == FunctionalSpec::Kind::Linear) return integrate(a);
    if (f.kind != FunctionalSpec::Kind::Quadratic || f.B.empty())
        throw UnsupportedFunctional("unknown functional family");
    const HybridHamiltonian B = HybridHamiltonian::from_terms(s.grid(), s.n(), f.B);
    ScalarField ab(s.grid());
    for (std::size_t k = 0; k < a.size(); ++k)
        ab[k] = a[k] * tr(load<CMatrix>(s.P, k), load<CMatrix>(B.value, k)).real();
    return integrate(ab) / integrate(s.D());
}

double bracket_eval(const FunctionalSpec& f, const FunctionalSpec& g, const ClosureState& s) {
    return bracket_of(jet_of(f, s), jet_of(g, s), s);
}

double bracket_eval(const FunctionalSpec& f, const HybridHamiltonian& H, const ClosureState& s) {
    Pipeline p = run_pipeline(H, s);
    return bracket_of(jet_of(f, s), MatJet{std::move(p.M), std::move(p.Mq), std::move(p.Mp)}, s);
}

// ρ_j = r𝒫_j + r'D_j𝒫, and the 𝒫 parts drop out of Tr(ρ[ρ_q,ρ_p]): ℬ = −iħ r³ Tr(𝒫[𝒫_q,𝒫_p])
ScalarField berry_curvature(const ClosureState& s) {
    const MatrixDerivatives d = hermitian_derivatives(s.P, false, s.dealias);
    ScalarField out(s.grid());
    dispatch(s.n(), [&]<int N>() {
        using M = Mat<N>;
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < s.P.npts(); ++k) {
            const M P = load<M>(s.P, k), Pq = load<M>(d.q, k), Pp = load<M>(d.p, k);
            const double r = regularize(P.trace().real(), s.eps).r;
            out[k] = (cplx(0.0, -s.hbar) * r * r * r * tr(P, comm(Pq, Pp))).real();
        }
    });
    return out;
}

double purity_defect(const ClosureState& s, double threshold) {
    const ScalarField D = s.D();
    const double cut = threshold * max_abs(D);
    double m = 0;
    for (std::size_t k = 0; k < D.size(); ++k) {
        if (D[k] <= cut) continue;
        const CMatrix rho = load<CMatrix>(s.P, k) / D[k];
        m = std::max(m, (rho * rho - rho).cwiseAbs().maxCoeff());
    }
    return m;
}

} // namespace kvh
