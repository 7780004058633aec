#pragma once

#include "kvh/fields.hpp"
#include "kvh/kernels.hpp"
#include "kvh/polynomial.hpp"

namespace kvh {

enum class DiffBackend { Spectral, FiniteDifference8 };

struct DiffOptions {
    DiffBackend backend = DiffBackend::Spectral;
    Dealias dealias = Dealias::None;
};

// Derivatives along one axis (spectral by default, periodic).
ScalarField partial(const ScalarField& f, Axis axis, int order = 1, DiffOptions opt = {});
ComplexField partial(const ComplexField& f, Axis axis, int order = 1, DiffOptions opt = {});
inline ScalarField partial_q(const ScalarField& f, DiffOptions opt = {}) { return partial(f, Axis::Q, 1, opt); }
inline ScalarField partial_p(const ScalarField& f, DiffOptions opt = {}) { return partial(f, Axis::P, 1, opt); }
inline ComplexField partial_q(const ComplexField& f, DiffOptions opt = {}) { return partial(f, Axis::Q, 1, opt); }
inline ComplexField partial_p(const ComplexField& f, DiffOptions opt = {}) { return partial(f, Axis::P, 1, opt); }

// Any (not necessarily Hermitian) matrix field, entry by entry.
MatrixField partial(const MatrixField& f, Axis axis, int order = 1, Dealias d = Dealias::None);
AmplitudeField partial(const AmplitudeField& f, Axis axis, int order = 1, Dealias d = Dealias::None);

// First and (optionally) second derivatives of a Hermitian matrix field. Diagonal entries are
// packed pairwise into one complex transform, off-diagonals are done once and mirrored.
struct MatrixDerivatives {
    MatrixField q, p, qq, qp, pp;
    explicit MatrixDerivatives(const MatrixField& like) : q(like), p(like), qq(like), qp(like), pp(like) {}
};
MatrixDerivatives hermitian_derivatives(const MatrixField& f, bool second, Dealias d = Dealias::None);
// Divergence of the Hermitian flux (Fq, Fp).
MatrixField hermitian_divergence(const MatrixField& fq, const MatrixField& fp, Dealias d = Dealias::None);

// A scalar field together with its first and second derivatives. Built either analytically
// (polynomials, which need not be periodic) or spectrally (periodic samples).
struct ScalarJet {
    ScalarField v, q, p, qq, qp, pp;
    explicit ScalarJet(const Grid& g) : v(g), q(g), p(g), qq(g), qp(g), pp(g) {}
    static ScalarJet from_polynomial(const Grid& g, const Polynomial& poly);
    static ScalarJet from_periodic(const ScalarField& f, Dealias d = Dealias::None);
    const Grid& grid() const { return v.grid(); }
};

ScalarField poisson_bracket(const ScalarField& f, const ScalarField& g, Dealias d = Dealias::None);
ScalarField poisson_bracket(const ScalarJet& f, const ScalarJet& g);
// {H, psi} for complex psi, H given with its derivatives
ComplexField poisson_bracket(const ScalarJet& h, const ComplexField& psi);

PhaseVectorField hamiltonian_vector_field(const ScalarField& h, DiffOptions opt = {});
PhaseVectorField hamiltonian_vector_field(const ScalarJet& h);

ScalarField divergence(const PhaseVectorField& v, DiffOptions opt = {});
// div(a*f) for a pointwise product, formed on a 3/2 zero-padded grid when dealias == TwoThirds
ScalarField divergence_of_product(const ScalarField& f, const PhaseVectorField& a, Dealias d = Dealias::TwoThirds);
// a*b with 3/2-rule zero padding (requires nq, np divisible by 4)
ScalarField dealiased_product(const ScalarField& a, const ScalarField& b);

double integrate(const ScalarField& f);
cplx integrate(const ComplexField& f);
double inner_real(const ComplexField& a, const ComplexField& b); // Re ∫ conj(a) b
cplx inner(const ComplexField& a, const ComplexField& b);        // ∫ conj(a) b

CovectorField canonical_one_form(const Grid& g); // (p, 0)

// Pullback by the quarter turn (q,p) -> (p,-q); exact on square grids symmetric about 0.
template <class T>
Field<T> quarter_turn(const Field<T>& f) {
    const Grid& g = f.grid();
    if (!g.square() || g.q_min() != -g.q_max()) throw InvalidGrid("quarter turn needs a square grid centred at 0");
    const int n = g.nq();
    Field<T> out(g);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = f.at(j, (n - i) % n);
    return out;
}
MatrixField quarter_turn(const MatrixField& f);

} // namespace kvh
