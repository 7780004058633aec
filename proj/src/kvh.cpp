#include "kvh/kvh.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace kvh {

ScalarField lagrangian_term(const ScalarJet& H) {
    const Grid& g = H.grid();
    ScalarField out(g);
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) out.at(i, j) = g.p(j) * H.p.at(i, j);
    return out;
}

ScalarField ja_divergence(const ScalarField& f) {
    const Grid& g = f.grid();
    const ScalarField fp = partial_p(f);
    ScalarField out(g);
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) out.at(i, j) = -f.at(i, j) - g.p(j) * fp.at(i, j);
    return out;
}

ComplexField prequantum_apply(const ScalarJet& H, const KoopmanWavefunction& psi) {
    H.v.check(ScalarField(psi.psi.grid()));
    const ComplexField br = poisson_bracket(H, psi.psi);
    const ScalarField lag = lagrangian_term(H);
    const cplx ih(0.0, psi.hbar);
    ComplexField out(psi.psi.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = ih * br[k] - (lag[k] - H.v[k]) * psi.psi[k];
    return out;
}

ComplexField prequantum_apply(const ScalarField& H, const KoopmanWavefunction& psi) {
    return prequantum_apply(ScalarJet::from_periodic(H), psi);
}

ComplexField kvh_rhs(const ScalarJet& H, const KoopmanWavefunction& psi) {
    ComplexField out = prequantum_apply(H, psi);
    out *= cplx(0.0, -1.0 / psi.hbar);
    return out;
}

ComplexField kvh_rhs(const ScalarField& H, const KoopmanWavefunction& psi) {
    return kvh_rhs(ScalarJet::from_periodic(H), psi);
}

ScalarField momentum_map_J(const KoopmanWavefunction& psi) {
    const ComplexField& f = psi.psi;
    const ScalarField d = abs2(f);
    const ComplexField fq = partial_q(f), fp = partial_p(f);
    const ScalarField jd = ja_divergence(d);
    ScalarField out(f.grid());
    // iħ{Ψ,Ψ̄} = -2ħ Im(Ψ_q conj(Ψ_p))
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = d[k] - jd[k] - 2 * psi.hbar * (fq[k] * std::conj(fp[k])).imag();
    return out;
}

MadelungData madelung_split(const KoopmanWavefunction& psi, double floor) {
    const ComplexField& f = psi.psi;
    const Grid& g = f.grid();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    MadelungData m{ScalarField(g), ScalarField(g), abs2(f), CovectorField(g), std::vector<bool>(g.size())};
    const ComplexField fq = partial_q(f), fp = partial_p(f);
    for (std::size_t k = 0; k < g.size(); ++k) {
        m.R[k] = std::sqrt(m.D[k]);
        m.sigma.q[k] = psi.hbar * (std::conj(f[k]) * fq[k]).imag();
        m.sigma.p[k] = psi.hbar * (std::conj(f[k]) * fp[k]).imag();
        m.defined[k] = std::abs(f[k]) > floor;
    }
    // cumulative unwrapping: first column along q, then each row along p
    auto unwrap = [](double prev, double raw) {
        const double two_pi = 2 * std::numbers::pi;
        return raw + two_pi * std::round((prev - raw) / two_pi);
    };
    std::vector<double> phase(g.size(), nan);
    double col_ref = nan;
    for (int i = 0; i < g.nq(); ++i) {
        const std::size_t k0 = g.index(i, 0);
        double prev = nan;
        if (m.defined[k0]) {
            const double raw = std::arg(f[k0]);
            phase[k0] = std::isnan(col_ref) ? raw : unwrap(col_ref, raw);
            col_ref = prev = phase[k0];
        }
        for (int j = 1; j < g.np(); ++j) {
            const std::size_t k = g.index(i, j);
            if (!m.defined[k]) continue;
            const double raw = std::arg(f[k]);
            phase[k] = std::isnan(prev) ? raw : unwrap(prev, raw);
            prev = phase[k];
        }
    }
    for (std::size_t k = 0; k < g.size(); ++k) m.S[k] = m.defined[k] ? psi.hbar * phase[k] : nan;
    return m;
}

ScalarField liouville_rhs(const ScalarJet& H, const ScalarField& rho) {
    const ScalarField rq = partial_q(rho), rp = partial_p(rho);
    ScalarField out(rho.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = H.q[k] * rp[k] - H.p[k] * rq[k];
    return out;
}

ScalarField liouville_rhs(const ScalarField& H, const ScalarField& rho) {
    return liouville_rhs(ScalarJet::from_periodic(H), rho);
}

double kvh_energy(const ScalarJet& H, const KoopmanWavefunction& psi) {
    return inner_real(psi.psi, prequantum_apply(H, psi));
}

} // namespace kvh
