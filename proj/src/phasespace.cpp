#include "kvh/phasespace.hpp"

#include "fft_plans.hpp"

#include <array>
#include <cmath>

namespace kvh {

namespace {

// 8th-order centred stencils (offsets 1..4)
constexpr std::array<double, 4> fd8_first{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr double fd8_second_centre = -205.0 / 72.0;
constexpr std::array<double, 4> fd8_second{8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};

template <class T>
Field<T> fd8(const Field<T>& f, Axis axis, int order) {
    const Grid& g = f.grid();
    const int nq = g.nq(), np = g.np();
    const double h = axis == Axis::Q ? g.dq() : g.dp();
    Field<T> out(g);
    for (int i = 0; i < nq; ++i)
        for (int j = 0; j < np; ++j) {
            auto at = [&](int s) {
                return axis == Axis::Q ? f.at((i + s + nq) % nq, j) : f.at(i, (j + s + np) % np);
            };
            T acc{};
            if (order == 1) {
                for (int s = 1; s <= 4; ++s) acc += fd8_first[s - 1] * (at(s) - at(-s));
                out.at(i, j) = acc / h;
            } else if (order == 2) {
                acc = fd8_second_centre * at(0);
                for (int s = 1; s <= 4; ++s) acc += fd8_second[s - 1] * (at(s) + at(-s));
                out.at(i, j) = acc / (h * h);
            } else {
                throw std::invalid_argument("finite-difference backend supports orders 1 and 2");
            }
        }
    return out;
}

void derive_line(const Grid& g, Axis axis, const cplx* in, int order, cplx* out, Dealias d) {
    int orders[1] = {order};
    cplx* outs[1] = {out};
    kernels::spectral_derivative(g, axis, in, orders, outs, d);
}

} // namespace

ComplexField partial(const ComplexField& f, Axis axis, int order, DiffOptions opt) {
    if (opt.backend == DiffBackend::FiniteDifference8) return fd8(f, axis, order);
    ComplexField out(f.grid());
    derive_line(f.grid(), axis, f.data(), order, out.data(), opt.dealias);
    return out;
}

ScalarField partial(const ScalarField& f, Axis axis, int order, DiffOptions opt) {
    if (opt.backend == DiffBackend::FiniteDifference8) return fd8(f, axis, order);
    return real_part(partial(to_complex(f), axis, order, opt));
}

MatrixField partial(const MatrixField& f, Axis axis, int order, Dealias d) {
    MatrixField out(f);
    for (int a = 0; a < f.n(); ++a)
        for (int b = 0; b < f.n(); ++b) derive_line(f.grid(), axis, f.entry(a, b), order, out.entry(a, b), d);
    return out;
}

AmplitudeField partial(const AmplitudeField& f, Axis axis, int order, Dealias d) {
    AmplitudeField out(f);
    for (int a = 0; a < f.n(); ++a) derive_line(f.grid(), axis, f.comp(a), order, out.comp(a), d);
    return out;
}

namespace {

// Complex planes carrying a Hermitian field: diagonal pairs packed as x + i y, then upper entries.
struct HermitianPacking {
    struct Pack {
        int a, b;      // entry indices
        bool diagonal; // packed pair of diagonals (b == a means single diagonal)
    };
    std::vector<Pack> packs;
    explicit HermitianPacking(int n) {
        for (int a = 0; a < n; a += 2) packs.push_back({a, a + 1 < n ? a + 1 : a, true});
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) packs.push_back({a, b, false});
    }
    void pack(const MatrixField& f, const Pack& pk, cplx* buf) const {
        const std::size_t np = f.npts();
        if (pk.diagonal) {
            const cplx* x = f.entry(pk.a, pk.a);
            const cplx* y = f.entry(pk.b, pk.b);
            if (pk.b == pk.a)
                for (std::size_t k = 0; k < np; ++k) buf[k] = x[k].real();
            else
                for (std::size_t k = 0; k < np; ++k) buf[k] = cplx(x[k].real(), y[k].real());
        } else {
            std::copy(f.entry(pk.a, pk.b), f.entry(pk.a, pk.b) + np, buf);
        }
    }
    void unpack(const cplx* buf, const Pack& pk, MatrixField& out) const {
        const std::size_t np = out.npts();
        if (pk.diagonal) {
            cplx* x = out.entry(pk.a, pk.a);
            cplx* y = out.entry(pk.b, pk.b);
            if (pk.b == pk.a)
                for (std::size_t k = 0; k < np; ++k) x[k] = buf[k].real();
            else
                for (std::size_t k = 0; k < np; ++k) {
                    x[k] = buf[k].real();
                    y[k] = buf[k].imag();
                }
        } else {
            cplx* u = out.entry(pk.a, pk.b);
            cplx* l = out.entry(pk.b, pk.a);
            for (std::size_t k = 0; k < np; ++k) {
                u[k] = buf[k];
                l[k] = std::conj(buf[k]);
            }
        }
    }
};

} // namespace

MatrixDerivatives hermitian_derivatives(const MatrixField& f, bool second, Dealias d) {
    MatrixDerivatives out(f);
    const Grid& g = f.grid();
    const std::size_t np = f.npts();
    HermitianPacking hp(f.n());
    std::vector<cplx> src(np), dq(np), dp(np), dqq(np), dpp(np), dqp(np);
    for (const auto& pk : hp.packs) {
        hp.pack(f, pk, src.data());
        if (second) {
            int o12[2] = {1, 2};
            cplx* oq[2] = {dq.data(), dqq.data()};
            cplx* op[2] = {dp.data(), dpp.data()};
            kernels::spectral_derivative(g, Axis::Q, src.data(), o12, oq, d);
            kernels::spectral_derivative(g, Axis::P, src.data(), o12, op, d);
            derive_line(g, Axis::P, dq.data(), 1, dqp.data(), d);
            hp.unpack(dqq.data(), pk, out.qq);
            hp.unpack(dpp.data(), pk, out.pp);
            hp.unpack(dqp.data(), pk, out.qp);
        } else {
            derive_line(g, Axis::Q, src.data(), 1, dq.data(), d);
            derive_line(g, Axis::P, src.data(), 1, dp.data(), d);
        }
        hp.unpack(dq.data(), pk, out.q);
        hp.unpack(dp.data(), pk, out.p);
    }
    return out;
}

MatrixField hermitian_divergence(const MatrixField& fq, const MatrixField& fp, Dealias d) {
    fq.check(fp);
    MatrixField out(fq);
    const Grid& g = fq.grid();
    const std::size_t np = fq.npts();
    HermitianPacking hp(fq.n());
    std::vector<cplx> a(np), b(np), da(np), db(np);
    for (const auto& pk : hp.packs) {
        hp.pack(fq, pk, a.data());
        hp.pack(fp, pk, b.data());
        derive_line(g, Axis::Q, a.data(), 1, da.data(), d);
        derive_line(g, Axis::P, b.data(), 1, db.data(), d);
        for (std::size_t k = 0; k < np; ++k) da[k] += db[k];
        hp.unpack(da.data(), pk, out);
    }
    return out;
}

ScalarJet ScalarJet::from_polynomial(const Grid& g, const Polynomial& poly) {
    ScalarJet j(g);
    const Polynomial pq = poly.derivative(Axis::Q), pp = poly.derivative(Axis::P);
    const Polynomial pqq = pq.derivative(Axis::Q), pqp = pq.derivative(Axis::P), ppp = pp.derivative(Axis::P);
    for (int i = 0; i < g.nq(); ++i)
        for (int k = 0; k < g.np(); ++k) {
            const double q = g.q(i), p = g.p(k);
            j.v.at(i, k) = poly(q, p);
            j.q.at(i, k) = pq(q, p);
            j.p.at(i, k) = pp(q, p);
            j.qq.at(i, k) = pqq(q, p);
            j.qp.at(i, k) = pqp(q, p);
            j.pp.at(i, k) = ppp(q, p);
        }
    return j;
}

ScalarJet ScalarJet::from_periodic(const ScalarField& f, Dealias d) {
    const Grid& g = f.grid();
    ScalarJet j(g);
    j.v = f;
    ComplexField c = to_complex(f), q(g), qq(g), p(g), pp(g);
    int o12[2] = {1, 2};
    cplx* oq[2] = {q.data(), qq.data()};
    cplx* op[2] = {p.data(), pp.data()};
    kernels::spectral_derivative(g, Axis::Q, c.data(), o12, oq, d);
    kernels::spectral_derivative(g, Axis::P, c.data(), o12, op, d);
    j.q = real_part(q);
    j.p = real_part(p);
    j.qq = real_part(qq);
    j.pp = real_part(pp);
    j.qp = real_part(partial(q, Axis::P, 1, {DiffBackend::Spectral, d}));
    return j;
}

ScalarField poisson_bracket(const ScalarField& f, const ScalarField& g, Dealias d) {
    f.check(g);
    const DiffOptions opt{DiffBackend::Spectral, Dealias::None};
    const ScalarField fq = partial_q(f, opt), fp = partial_p(f, opt), gq = partial_q(g, opt), gp = partial_p(g, opt);
    if (d == Dealias::TwoThirds) return dealiased_product(fq, gp) - dealiased_product(fp, gq);
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fq[k] * gp[k] - fp[k] * gq[k];
    return out;
}

ScalarField poisson_bracket(const ScalarJet& f, const ScalarJet& g) {
    ScalarField out(f.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = f.q[k] * g.p[k] - f.p[k] * g.q[k];
    return out;
}

ComplexField poisson_bracket(const ScalarJet& h, const ComplexField& psi) {
    const ComplexField pq = partial_q(psi), pp = partial_p(psi);
    ComplexField out(psi.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = h.q[k] * pp[k] - h.p[k] * pq[k];
    return out;
}

PhaseVectorField hamiltonian_vector_field(const ScalarField& h, DiffOptions opt) {
    return PhaseVectorField(partial_p(h, opt), -partial_q(h, opt));
}

PhaseVectorField hamiltonian_vector_field(const ScalarJet& h) { return PhaseVectorField(h.p, -h.q); }

ScalarField divergence(const PhaseVectorField& v, DiffOptions opt) {
    return partial_q(v.q, opt) + partial_p(v.p, opt);
}

ScalarField divergence_of_product(const ScalarField& f, const PhaseVectorField& a, Dealias d) {
    if (d == Dealias::TwoThirds) return partial_q(dealiased_product(f, a.q)) + partial_p(dealiased_product(f, a.p));
    return partial_q(f * a.q) + partial_p(f * a.p);
}

ScalarField dealiased_product(const ScalarField& a, const ScalarField& b) {
    a.check(b);
    const Grid& g = a.grid();
    const int nq = g.nq(), np = g.np();
    if (nq % 4 || np % 4) throw InvalidGrid("3/2-rule padding needs nq, np divisible by 4");
    const int mq = 3 * nq / 2, mp = 3 * np / 2;
    const std::size_t n = g.size(), m = static_cast<std::size_t>(mq) * mp;
    auto* small = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* big = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
    auto* big2 = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
    fftw_plan fs, bs, fb, bb;
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        fs = fftw_plan_dft_2d(nq, np, small, small, FFTW_FORWARD, FFTW_ESTIMATE);
        bs = fftw_plan_dft_2d(nq, np, small, small, FFTW_BACKWARD, FFTW_ESTIMATE);
        fb = fftw_plan_dft_2d(mq, mp, big, big, FFTW_FORWARD, FFTW_ESTIMATE);
        bb = fftw_plan_dft_2d(mq, mp, big, big, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    auto* S = reinterpret_cast<cplx*>(small);
    auto* B = reinterpret_cast<cplx*>(big);
    auto* B2 = reinterpret_cast<cplx*>(big2);
    // signed mode of index x on an axis of length len (Nyquist reported as len/2)
    auto mode = [](int x, int len) { return x <= len / 2 ? x : x - len; };
    auto pad = [&](const ScalarField& f, cplx* dst) {
        for (std::size_t k = 0; k < n; ++k) S[k] = f[k];
        fftw_execute_dft(fs, small, small);
        std::fill(dst, dst + m, cplx(0.0));
        for (int i = 0; i < nq; ++i) {
            const int mi = mode(i, nq);
            if (2 * mi == nq) continue;
            for (int j = 0; j < np; ++j) {
                const int mj = mode(j, np);
                if (2 * mj == np) continue;
                dst[static_cast<std::size_t>((mi + mq) % mq) * mp + (mj + mp) % mp] = S[g.index(i, j)] / double(n);
            }
        }
    };
    pad(a, B2);
    pad(b, B);
    fftw_execute_dft(bb, big2, big2);
    fftw_execute_dft(bb, big, big);
    for (std::size_t k = 0; k < m; ++k) B[k] = B[k] * B2[k].real() / double(m);
    fftw_execute_dft(fb, big, big);
    for (int i = 0; i < nq; ++i) {
        const int mi = mode(i, nq);
        for (int j = 0; j < np; ++j) {
            const int mj = mode(j, np);
            S[g.index(i, j)] = (2 * mi == nq || 2 * mj == np)
                                   ? cplx(0.0)
                                   : B[static_cast<std::size_t>((mi + mq) % mq) * mp + (mj + mp) % mp];
        }
    }
    fftw_execute_dft(bs, small, small);
    ScalarField out(g);
    for (std::size_t k = 0; k < n; ++k) out[k] = S[k].real();
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        fftw_destroy_plan(fs);
        fftw_destroy_plan(bs);
        fftw_destroy_plan(fb);
        fftw_destroy_plan(bb);
    }
    fftw_free(small);
    fftw_free(big);
    fftw_free(big2);
    return out;
}

double integrate(const ScalarField& f) { return kernels::grid_sum(f.grid(), f.data()) * f.grid().cell_area(); }

cplx integrate(const ComplexField& f) {
    return {integrate(real_part(f)), integrate(imag_part(f))};
}

double inner_real(const ComplexField& a, const ComplexField& b) { return inner(a, b).real(); }

cplx inner(const ComplexField& a, const ComplexField& b) {
    a.check(b);
    ComplexField prod(a.grid());
    for (std::size_t k = 0; k < a.size(); ++k) prod[k] = std::conj(a[k]) * b[k];
    return integrate(prod);
}

CovectorField canonical_one_form(const Grid& g) {
    return CovectorField(ScalarField::sample(g, [](double, double p) { return p; }), ScalarField(g));
}

MatrixField quarter_turn(const MatrixField& f) {
    MatrixField out(f);
    const Grid& g = f.grid();
    for (int a = 0; a < f.n(); ++a)
        for (int b = 0; b < f.n(); ++b) {
            ComplexField plane(g, std::vector<cplx>(f.entry(a, b), f.entry(a, b) + f.npts()));
            ComplexField r = quarter_turn(plane);
            std::copy(r.data(), r.data() + f.npts(), out.entry(a, b));
        }
    return out;
}

} // namespace kvh
