#include "kvh/spin2.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace kvh {

namespace {

using V3 = Eigen::Vector3d;

V3 at(const Vec3Field& f, std::size_t k) { return {f[0][k], f[1][k], f[2][k]}; }
void put(Vec3Field& f, std::size_t k, const V3& v) {
    for (int c = 0; c < 3; ++c) f[c][k] = v(c);
}
Vec3Field zeros(const Grid& g) { return {ScalarField(g), ScalarField(g), ScalarField(g)}; }

struct Reg {
    double r, r1, r2;
};
Reg regularize(double D, double eps) {
    const double e2 = eps * eps, s = D * D + e2;
    return {D / s, (e2 - D * D) / (s * s), -2.0 * D * (3.0 * e2 - D * D) / (s * s * s)};
}

void check_pair(const SpinHamiltonian& Sh, const SpinState& S) {
    if (!Sh.grid().same_as(S.grid())) throw ShapeMismatch("Hamiltonian and state grids differ");
    if (std::abs(Sh.hbar - S.hbar) > 1e-15 * S.hbar) throw Error("Hamiltonian and state use different hbar");
}

void check_support(const SpinState& S) {
    double total = 0, outside = 0;
    for (std::size_t k = 0; k < S.D.size(); ++k) {
        total += std::abs(S.D[k]);
        if (S.D[k] <= S.eps) outside += std::abs(S.D[k]);
    }
    if (!(total > 0) || outside > 1e-3 * total) throw DegenerateDensity("too much mass below the regularization scale");
}

struct StateJets {
    ScalarJet D;
    std::array<ScalarJet, 3> s;
    explicit StateJets(const SpinState& S)
        : D(ScalarJet::from_periodic(S.D, S.dealias)),
          s{ScalarJet::from_periodic(S.s[0], S.dealias), ScalarJet::from_periodic(S.s[1], S.dealias),
            ScalarJet::from_periodic(S.s[2], S.dealias)} {}
};

V3 jv(const std::array<ScalarJet, 3>& j, ScalarField ScalarJet::*m, std::size_t k) {
    return {(j[0].*m)[k], (j[1].*m)[k], (j[2].*m)[k]};
}

// δh/δD, δh/δs̃ with first derivatives, plus the energy density.
struct Pipeline {
    StateJets st;
    ScalarField hD, hDq, hDp, e;
    Vec3Field hs, hsq, hsp;
    explicit Pipeline(const SpinState& S)
        : st(S), hD(S.grid()), hDq(S.grid()), hDp(S.grid()), e(S.grid()), hs(zeros(S.grid())),
          hsq(zeros(S.grid())), hsp(zeros(S.grid())) {}
};

Pipeline run_pipeline(const SpinHamiltonian& Sh, const SpinState& S) {
    check_pair(Sh, S);
    check_support(S);
    Pipeline out(S);
    const StateJets& st = out.st;
    const ScalarJet& H0 = Sh.H0;
    const std::size_t npts = S.D.size();
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < npts; ++k) {
        const double D = S.D[k], Dq = st.D.q[k], Dp = st.D.p[k];
        const double Dqq = st.D.qq[k], Dqp = st.D.qp[k], Dpp = st.D.pp[k];
        const V3 s = at(S.s, k), sq = jv(st.s, &ScalarJet::q, k), sp = jv(st.s, &ScalarJet::p, k);
        const V3 sqq = jv(st.s, &ScalarJet::qq, k), sqp = jv(st.s, &ScalarJet::qp, k), spp = jv(st.s, &ScalarJet::pp, k);
        const V3 H = jv(Sh.H, &ScalarJet::v, k), Hq = jv(Sh.H, &ScalarJet::q, k), Hp = jv(Sh.H, &ScalarJet::p, k);
        const V3 Hqq = jv(Sh.H, &ScalarJet::qq, k), Hqp = jv(Sh.H, &ScalarJet::qp, k), Hpp = jv(Sh.H, &ScalarJet::pp, k);
        const Reg g = regularize(D, S.eps);

        const V3 ssq = s.cross(sq), ssp = s.cross(sp);
        const double Q = Hp.dot(ssq) - Hq.dot(ssp);
        const double Qq = Hqp.dot(ssq) + Hp.dot(s.cross(sqq)) - Hqq.dot(ssp) - Hq.dot(sq.cross(sp) + s.cross(sqp));
        const double Qp = Hpp.dot(ssq) + Hp.dot(sp.cross(sq) + s.cross(sqp)) - Hqp.dot(ssp) - Hq.dot(s.cross(spp));
        const V3 W = sq.cross(Hp) - sp.cross(Hq);
        const V3 Wq = sqq.cross(Hp) + sq.cross(Hqp) - sqp.cross(Hq) - sp.cross(Hqq);
        const V3 Wp = sqp.cross(Hp) + sq.cross(Hpp) - spp.cross(Hq) - sp.cross(Hqp);
        const V3 E = Dq * Hp - Dp * Hq;
        const V3 Eq = Dqq * Hp + Dq * Hqp - Dqp * Hq - Dp * Hqq;
        const V3 Ep = Dqp * Hp + Dq * Hpp - Dpp * Hq - Dp * Hqp;

        out.hD[k] = H0.v[k] - g.r1 * Q;
        out.hDq[k] = H0.q[k] - g.r2 * Dq * Q - g.r1 * Qq;
        out.hDp[k] = H0.p[k] - g.r2 * Dp * Q - g.r1 * Qp;
        put(out.hs, k, H - 2.0 * g.r * W + g.r1 * E.cross(s));
        put(out.hsq, k, Hq - 2.0 * (g.r1 * Dq * W + g.r * Wq) + g.r2 * Dq * E.cross(s) + g.r1 * (Eq.cross(s) + E.cross(sq)));
        put(out.hsp, k, Hp - 2.0 * (g.r1 * Dp * W + g.r * Wp) + g.r2 * Dp * E.cross(s) + g.r1 * (Ep.cross(s) + E.cross(sp)));
        out.e[k] = D * H0.v[k] + s.dot(H) - g.r * Q;
    }
    return out;
}

// Functional derivatives (f_D, f_s̃) with first derivatives.
struct FJet {
    ScalarField d, dq, dp;
    Vec3Field s, sq, sp;
};

FJet jet_of(const SpinFunctionalSpec& f, const SpinState& S) {
    const Grid& g = S.grid();
    const ScalarJet a = ScalarJet::from_polynomial(g, f.a);
    const std::array<ScalarJet, 3> b{ScalarJet::from_polynomial(g, f.b[0]), ScalarJet::from_polynomial(g, f.b[1]),
                                     ScalarJet::from_polynomial(g, f.b[2])};
    if (f.kind == SpinFunctionalSpec::Kind::Linear)
        return {a.v, a.q, a.p, {b[0].v, b[1].v, b[2].v}, {b[0].q, b[1].q, b[2].q}, {b[0].p, b[1].p, b[2].p}};
    if (f.kind != SpinFunctionalSpec::Kind::Quadratic) throw UnsupportedFunctional("unknown functional family");
    const ScalarJet a2 = ScalarJet::from_polynomial(g, f.a2);
    const std::array<ScalarJet, 3> b2{ScalarJet::from_polynomial(g, f.b2[0]), ScalarJet::from_polynomial(g, f.b2[1]),
                                      ScalarJet::from_polynomial(g, f.b2[2])};
    const StateJets st(S);
    const double N = integrate(S.D), fv = spin_functional_value(f, S);
    FJet out{ScalarField(g), ScalarField(g), ScalarField(g), zeros(g), zeros(g), zeros(g)};
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double D = S.D[k], Dq = st.D.q[k], Dp = st.D.p[k];
        const V3 s = at(S.s, k), sq = jv(st.s, &ScalarJet::q, k), sp = jv(st.s, &ScalarJet::p, k);
        const V3 B = jv(b, &ScalarJet::v, k), Bq = jv(b, &ScalarJet::q, k), Bp = jv(b, &ScalarJet::p, k);
        const V3 B2 = jv(b2, &ScalarJet::v, k), B2q = jv(b2, &ScalarJet::q, k), B2p = jv(b2, &ScalarJet::p, k);
        const double l1 = a.v[k] * D + B.dot(s), l2 = a2.v[k] * D + B2.dot(s);
        const double l1q = a.q[k] * D + a.v[k] * Dq + Bq.dot(s) + B.dot(sq);
        const double l1p = a.p[k] * D + a.v[k] * Dp + Bp.dot(s) + B.dot(sp);
        const double l2q = a2.q[k] * D + a2.v[k] * Dq + B2q.dot(s) + B2.dot(sq);
        const double l2p = a2.p[k] * D + a2.v[k] * Dp + B2p.dot(s) + B2.dot(sp);
        out.d[k] = (l2 * a.v[k] + l1 * a2.v[k] - fv) / N;
        out.dq[k] = (l2q * a.v[k] + l2 * a.q[k] + l1q * a2.v[k] + l1 * a2.q[k]) / N;
        out.dp[k] = (l2p * a.v[k] + l2 * a.p[k] + l1p * a2.v[k] + l1 * a2.p[k]) / N;
        put(out.s, k, (l2 * B + l1 * B2) / N);
        put(out.sq, k, (l2q * B + l2 * Bq + l1q * B2 + l1 * B2q) / N);
        put(out.sp, k, (l2p * B + l2 * Bp + l1p * B2 + l1 * B2p) / N);
    }
    return out;
}

double bracket_of(const FJet& f, const FJet& h, const SpinState& S) {
    ScalarField dens(S.grid());
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < S.D.size(); ++k) {
        const double D = S.D[k];
        const Reg g = regularize(D, S.eps);
        const V3 s = at(S.s, k);
        const V3 fs = at(f.s, k), fsq = at(f.sq, k), fsp = at(f.sp, k);
        const V3 hs = at(h.s, k), hsq = at(h.sq, k), hsp = at(h.sp, k);
        const double dd = f.dq[k] * h.dp[k] - f.dp[k] * h.dq[k];
        const double ds = s.dot(f.dq[k] * hsp - f.dp[k] * hsq);
        const double sd = s.dot(fsq * h.dp[k] - fsp * h.dq[k]);
        const double ss = s.dot(fsq) * s.dot(hsp) - s.dot(fsp) * s.dot(hsq);
        dens[k] = g.r * D * D * dd + g.r * D * (ds + sd) + g.r * ss + s.dot(fs.cross(hs));
    }
    return integrate(dens);
}

} // namespace

SpinState::SpinState(ScalarField d, Vec3Field s_, double hbar_, double d_floor_)
    : D(std::move(d)), s(std::move(s_)), hbar(hbar_), d_floor(d_floor_) {
    for (const auto& c : s) D.check(c);
    if (!(hbar > 0)) throw Error("hbar must be positive");
    const double dmax = max_abs(D);
    if (!(dmax > 0)) throw DegenerateDensity("D vanishes everywhere");
    eps = d_floor * dmax;
}

SpinState SpinState::pure(const ScalarField& D, const Vec3Field& n, double hbar, double d_floor) {
    Vec3Field s = zeros(D.grid());
    for (std::size_t k = 0; k < D.size(); ++k) {
        const V3 v = at(n, k);
        const double len = v.norm();
        if (!(len > 0)) throw NonNormalized("Bloch direction vanishes");
        put(s, k, (0.5 * hbar * D[k] / len) * v);
    }
    return SpinState(D, std::move(s), hbar, d_floor);
}

SpinState SpinState::with(ScalarField d, Vec3Field s_) const {
    SpinState out = *this;
    out.D = std::move(d);
    out.s = std::move(s_);
    return out;
}

SpinState spin_from_density(const ClosureState& P) {
    if (P.n() != 2) throw WrongQuantumDimension("spin variables need n = 2");
    const Grid& g = P.grid();
    ScalarField D(g);
    Vec3Field s = zeros(g);
    const auto& sig = pauli();
    for (std::size_t k = 0; k < g.size(); ++k) {
        D[k] = P.P(0, 0, k).real() + P.P(1, 1, k).real();
        for (int c = 0; c < 3; ++c) {
            cplx t = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) t += P.P(a, b, k) * sig[c](b, a);
            s[c][k] = 0.5 * P.hbar * t.real();
        }
    }
    SpinState out(std::move(D), std::move(s), P.hbar, P.d_floor);
    out.eps = P.eps;
    out.dealias = P.dealias;
    return out;
}

ClosureState density_from_spin(const SpinState& S) {
    const Grid& g = S.grid();
    MatrixField P(g, 2);
    const auto& sig = pauli();
    for (std::size_t k = 0; k < g.size(); ++k)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                cplx v = a == b ? cplx(0.5 * S.D[k]) : cplx(0.0);
                for (int c = 0; c < 3; ++c) v += S.s[c][k] / S.hbar * sig[c](a, b);
                P(a, b, k) = v;
            }
    ClosureState out(std::move(P), S.hbar, S.d_floor);
    out.eps = S.eps;
    out.dealias = S.dealias;
    return out;
}

double spin_hamiltonian(const SpinHamiltonian& Sh, const SpinState& S) {
    return integrate(run_pipeline(Sh, S).e);
}

SpinDerivatives spin_var_derivatives(const SpinHamiltonian& Sh, const SpinState& S) {
    Pipeline p = run_pipeline(Sh, S);
    return {std::move(p.hD), std::move(p.hs)};
}

// ∂_t D = −{D, h_D} − {s̃_m, h_m};  ∂_t s̃ = −{s̃, h_D} − {r s̃ s̃_m, h_m} + h_s × s̃,
// with ∂(r s̃_k s̃_m) expanded by the product rule.
SpinRhs spin_rhs(const SpinHamiltonian& Sh, const SpinState& S) {
    const Pipeline p = run_pipeline(Sh, S);
    const StateJets& st = p.st;
    SpinRhs out{ScalarField(S.grid()), zeros(S.grid())};
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < S.D.size(); ++k) {
        const double D = S.D[k], Dq = st.D.q[k], Dp = st.D.p[k];
        const V3 s = at(S.s, k), sq = jv(st.s, &ScalarJet::q, k), sp = jv(st.s, &ScalarJet::p, k);
        const V3 hs = at(p.hs, k), hq = at(p.hsq, k), hp = at(p.hsp, k);
        const Reg g = regularize(D, S.eps);
        out.dD[k] = -(Dq * p.hDp[k] - Dp * p.hDq[k]) - (sq.dot(hp) - sp.dot(hq));
        // Σ_m ∂_q(r s̃ s̃_m) h_m,p = (r' D_q s̃·h_p + r s̃_q·h_p) s̃ + r (s̃·h_p) s̃_q, and q <-> p
        const double shq = s.dot(hq), shp = s.dot(hp);
        const V3 tq = (g.r1 * Dq * shp + g.r * sq.dot(hp)) * s + g.r * shp * sq;
        const V3 tp = (g.r1 * Dp * shq + g.r * sp.dot(hq)) * s + g.r * shq * sp;
        const V3 ds = -(sq * p.hDp[k] - sp * p.hDq[k]) - (tq - tp) + hs.cross(s);
        put(out.ds, k, ds);
    }
    return out;
}

double spin_casimir(const SpinState& S, PhiSpec phi) {
    if (phi.kind == PhiSpec::Kind::Power && (phi.k < 0 || phi.k > 4))
        throw UnsupportedPhi("power must be between 0 and 4");
    check_support(S);
    ScalarField dens(S.grid());
    for (std::size_t k = 0; k < S.D.size(); ++k) {
        const double D = S.D[k];
        const double x = regularize(D, S.eps).r * at(S.s, k).norm();
        if (phi.kind == PhiSpec::Kind::Power) {
            dens[k] = D * std::pow(x, phi.k);
        } else {
            double h = 0;
            for (double l : {0.5 + x / S.hbar, 0.5 - x / S.hbar})
                if (l > 0) h -= l * std::log(l);
            dens[k] = D * h;
        }
    }
    return integrate(dens);
}

double spin_purity_defect(const SpinState& S, double threshold) {
    const double cut = threshold * max_abs(S.D);
    double m = 0;
    for (std::size_t k = 0; k < S.D.size(); ++k)
        if (S.D[k] > cut) m = std::max(m, std::abs(at(S.s, k).norm() / S.D[k] - 0.5 * S.hbar));
    return m;
}

FunctionalSpec SpinFunctionalSpec::to_matrix(double hbar) const {
    auto terms = [&](const Polynomial& a0, const std::array<Polynomial, 3>& bv) {
        std::vector<MatrixTerm> t{{a0, CMatrix::Identity(2, 2)}};
        for (int c = 0; c < 3; ++c)
            if (!bv[c].is_zero()) t.push_back({0.5 * hbar * bv[c], CMatrix(pauli()[c])});
        return t;
    };
    if (kind == Kind::Linear) return FunctionalSpec::linear(terms(a, b));
    return FunctionalSpec::quadratic(terms(a, b), terms(a2, b2));
}

double spin_functional_value(const SpinFunctionalSpec& f, const SpinState& S) {
    const Grid& g = S.grid();
    auto density = [&](const Polynomial& a, const std::array<Polynomial, 3>& b) {
        ScalarField l(g);
        for (int i = 0; i < g.nq(); ++i)
            for (int j = 0; j < g.np(); ++j) {
                const double q = g.q(i), p = g.p(j);
                const std::size_t k = g.index(i, j);
                l[k] = a(q, p) * S.D[k] + b[0](q, p) * S.s[0][k] + b[1](q, p) * S.s[1][k] + b[2](q, p) * S.s[2][k];
            }
        return l;
    };
    if (f.kind == SpinFunctionalSpec::Kind::Linear) return integrate(density(f.a, f.b));
    if (f.kind != SpinFunctionalSpec::Kind::Quadratic) throw UnsupportedFunctional("unknown functional family");
    return integrate(density(f.a, f.b) * density(f.a2, f.b2)) / integrate(S.D);
}

double spin_bracket_eval(const SpinFunctionalSpec& f, const SpinFunctionalSpec& g, const SpinState& S) {
    return bracket_of(jet_of(f, S), jet_of(g, S), S);
}

double spin_bracket_eval(const SpinFunctionalSpec& f, const SpinHamiltonian& Sh, const SpinState& S) {
    Pipeline p = run_pipeline(Sh, S);
    FJet h{std::move(p.hD), std::move(p.hDq), std::move(p.hDp), std::move(p.hs), std::move(p.hsq), std::move(p.hsp)};
    return bracket_of(jet_of(f, S), h, S);
}

} // namespace kvh
