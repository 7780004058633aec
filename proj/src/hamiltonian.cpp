#include "kvh/hamiltonian.hpp"

#include <algorithm>

namespace kvh {

const std::array<Eigen::Matrix2cd, 3>& pauli() {
    static const std::array<Eigen::Matrix2cd, 3> s = [] {
        std::array<Eigen::Matrix2cd, 3> m;
        const cplx I(0, 1);
        m[0] << 0, 1, 1, 0;
        m[1] << 0, -I, I, 0;
        m[2] << 1, 0, 0, -1;
        return m;
    }();
    return s;
}

namespace {

void check_hermitian(const CMatrix& a) {
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw NonHermitian("Hamiltonian term is not Hermitian");
}

void add_term(MatrixField& f, const ScalarField& c, const CMatrix& a) {
    const int n = f.n();
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            const cplx ars = a(r, s);
            if (ars == cplx(0.0)) continue;
            cplx* e = f.entry(r, s);
            for (std::size_t k = 0; k < f.npts(); ++k) e[k] += c[k] * ars;
        }
}

} // namespace

HybridHamiltonian HybridHamiltonian::from_terms(const Grid& g, int n, const std::vector<MatrixTerm>& terms) {
    HybridHamiltonian h(MatrixField(g, n));
    for (const auto& t : terms) {
        if (t.op.rows() != n || t.op.cols() != n) throw WrongQuantumDimension("term dimension differs from n");
        check_hermitian(t.op);
        ScalarJet j = ScalarJet::from_polynomial(g, t.coeff);
        add_term(h.value, j.v, t.op);
        add_term(h.q, j.q, t.op);
        add_term(h.p, j.p, t.op);
        add_term(h.qq, j.qq, t.op);
        add_term(h.qp, j.qp, t.op);
        add_term(h.pp, j.pp, t.op);
    }
    h.terms = terms;
    h.classical = std::all_of(terms.begin(), terms.end(), [n](const MatrixTerm& t) {
        return t.op == CMatrix::Identity(n, n) * t.op(0, 0);
    });
    return h;
}

HybridHamiltonian HybridHamiltonian::constant(const Grid& g, const CMatrix& a) {
    return from_terms(g, static_cast<int>(a.rows()), {{Polynomial::constant(1.0), a}});
}

HybridHamiltonian HybridHamiltonian::scalar(const Grid& g, int n, const Polynomial& h0) {
    return from_terms(g, n, {{h0, CMatrix::Identity(n, n)}});
}

HybridHamiltonian HybridHamiltonian::from_samples(const MatrixField& value) {
    if (value.hermiticity_defect() > 1e-12) throw NonHermitian("sampled Hamiltonian is not Hermitian");
    HybridHamiltonian h(value);
    h.value = value;
    auto d = hermitian_derivatives(value, true);
    h.q = d.q;
    h.p = d.p;
    h.qq = d.qq;
    h.qp = d.qp;
    h.pp = d.pp;
    return h;
}

SpinHamiltonian::SpinHamiltonian(const Grid& g, const Polynomial& h0, const std::array<Polynomial, 3>& hvec,
                                 double hbar_)
    : h0_poly(h0), hvec_poly(hvec), hbar(hbar_), H0(ScalarJet::from_polynomial(g, h0)),
      H{ScalarJet::from_polynomial(g, hvec[0]), ScalarJet::from_polynomial(g, hvec[1]),
        ScalarJet::from_polynomial(g, hvec[2])} {}

HybridHamiltonian SpinHamiltonian::to_matrix() const {
    std::vector<MatrixTerm> terms{{h0_poly, CMatrix::Identity(2, 2)}};
    for (int k = 0; k < 3; ++k)
        if (!hvec_poly[k].is_zero()) terms.push_back({0.5 * hbar * hvec_poly[k], CMatrix(pauli()[k])});
    return HybridHamiltonian::from_terms(grid(), 2, terms);
}

namespace presets {

Polynomial harmonic() { return Polynomial::harmonic(1.0); }

SpinHamiltonian spin_boson(const Grid& g, double lambda, double omega_s, double hbar) {
    return SpinHamiltonian(g, harmonic(),
                           {Polynomial::monomial(1, 0, lambda), Polynomial(), Polynomial::constant(omega_s)}, hbar);
}

} // namespace presets
} // namespace kvh
