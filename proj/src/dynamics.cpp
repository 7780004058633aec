#include "kvh/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kvh {

namespace {

template <class T>
void axpy(std::vector<T>& y, double a, const std::vector<T>& x) {
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

// ---- right-hand sides and state updates, one overload pair per model ----

ScalarField rhs(const LiouvilleModel& m, const LiouvilleState& s) { return liouville_rhs(m.H, s.rho); }
LiouvilleState add(LiouvilleState y, double a, const ScalarField& d) {
    axpy(y.rho.values(), a, d.values());
    return y;
}

ComplexField rhs(const KvhModel& m, const KoopmanWavefunction& s) { return kvh_rhs(m.H, s); }
KoopmanWavefunction add(KoopmanWavefunction y, double a, const ComplexField& d) {
    axpy(y.psi.values(), a, d.values());
    return y;
}

AmplitudeField rhs(const WaveModel& m, const HybridWavefunction& s) { return wave_rhs(m.H, s); }
HybridWavefunction add(HybridWavefunction y, double a, const AmplitudeField& d) {
    axpy(y.ups.raw(), a, d.raw());
    return y;
}

MatrixField rhs(const ClosureModel& m, const ClosureState& s) { return closure_rhs(m.H, s); }
MatrixField rhs(const EhrenfestModel& m, const ClosureState& s) { return ehrenfest_rhs(m.H, s); }
ClosureState add(ClosureState y, double a, const MatrixField& d) {
    axpy(y.P.raw(), a, d.raw());
    return y;
}

MeanFieldRhs rhs(const MeanFieldModel& m, const MeanFieldState& s) { return meanfield_rhs(m.H, s); }
MeanFieldState add(MeanFieldState y, double a, const MeanFieldRhs& d) {
    axpy(y.D.values(), a, d.dD.values());
    y.rho += a * d.drho;
    return y;
}

SpinRhs rhs(const SpinModel& m, const SpinState& s) { return spin_rhs(m.H, s); }
SpinState add(SpinState y, double a, const SpinRhs& d) {
    axpy(y.D.values(), a, d.dD.values());
    for (int c = 0; c < 3; ++c) axpy(y.s[c].values(), a, d.ds[c].values());
    return y;
}

template <class M, class S>
S advance(const M& m, const S& y, Method method, double dt) {
    if (method == Method::Midpoint) return add(y, dt, rhs(m, add(y, 0.5 * dt, rhs(m, y))));
    const auto k1 = rhs(m, y);
    const auto k2 = rhs(m, add(y, 0.5 * dt, k1));
    const auto k3 = rhs(m, add(y, 0.5 * dt, k2));
    const auto k4 = rhs(m, add(y, dt, k3));
    S out = add(y, dt / 6.0, k1);
    out = add(std::move(out), dt / 3.0, k2);
    out = add(std::move(out), dt / 3.0, k3);
    return add(std::move(out), dt / 6.0, k4);
}

// Visits a model together with a state of the matching type.
template <class Fn>
auto with_pair(const Model& m, const State& s, Fn&& fn) {
    return std::visit(
        [&](const auto& mm, const auto& ss) -> decltype(fn(std::get<ClosureModel>(m), std::get<ClosureState>(s))) {
            if constexpr (requires { rhs(mm, ss); })
                return fn(mm, ss);
            else
                throw ShapeMismatch("state type does not belong to model " + model_name(m));
        },
        m, s);
}

// ---- flat views used for finiteness, distances and extrapolation ----

void append(std::vector<double>& out, const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); }
void append(std::vector<double>& out, const std::vector<cplx>& v) {
    for (const cplx& z : v) {
        out.push_back(z.real());
        out.push_back(z.imag());
    }
}

std::vector<double> flatten(const State& s) {
    std::vector<double> out;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, LiouvilleState>) append(out, x.rho.values());
            else if constexpr (std::is_same_v<T, KoopmanWavefunction>) append(out, x.psi.values());
            else if constexpr (std::is_same_v<T, HybridWavefunction>) append(out, x.ups.raw());
            else if constexpr (std::is_same_v<T, ClosureState>) append(out, x.P.raw());
            else if constexpr (std::is_same_v<T, MeanFieldState>) {
                append(out, x.D.values());
                append(out, std::vector<cplx>(x.rho.data(), x.rho.data() + x.rho.size()));
            } else {
                append(out, x.D.values());
                for (const auto& c : x.s) append(out, c.values());
            }
        },
        s);
    return out;
}

bool finite(const State& s) {
    for (double x : flatten(s))
        if (!std::isfinite(x)) return false;
    return true;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double rel_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("states differ in size");
    double d = 0;
    for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
    const double nb = norm2(b);
    return nb > 0 ? std::sqrt(d) / nb : std::sqrt(d);
}

// ---- diagnostics helpers ----

double min_of(const ScalarField& f) { return *std::min_element(f.values().begin(), f.values().end()); }

double l2(const ScalarField& f) {
    ScalarField sq = f;
    for (auto& x : sq.values()) x *= x;
    return std::sqrt(integrate(sq));
}

double purity_of(const CMatrix& rho) { return (rho * rho).trace().real(); }

double ratio(double num, double den) { return den > 0 ? num / den : num; }

// ∂_t D = Tr{Ĥ, 𝒟̂} and iħ dρ̂_q/dt = ∫[Ĥ, 𝒟̂], both as relative max-norm residuals
void marginal_residuals(const HybridHamiltonian& H, const ClosureState& s, const MatrixField& dP,
                        DiagnosticsRecord& r) {
    const MatrixField dh = hybrid_density_closure(s);
    const MatrixDerivatives dd = hermitian_derivatives(dh, false);
    const int n = s.n();
    const std::size_t npts = s.P.npts();
    ScalarField tb(s.grid());
    MatrixField cm(dh);
    for (std::size_t k = 0; k < npts; ++k) {
        CMatrix hq(n, n), hp(n, n), hv(n, n), xq(n, n), xp(n, n), x(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                hq(a, b) = H.q(a, b, k);
                hp(a, b) = H.p(a, b, k);
                hv(a, b) = H.value(a, b, k);
                xq(a, b) = dd.q(a, b, k);
                xp(a, b) = dd.p(a, b, k);
                x(a, b) = dh(a, b, k);
            }
        tb[k] = (hq * xp - hp * xq).trace().real();
        const CMatrix c = hv * x - x * hv;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) cm(a, b, k) = c(a, b);
    }
    const ScalarField dD = dP.trace();
    r.residuals["trace_law"] = ratio(max_abs(dD - tb), std::max(max_abs(dD), max_abs(tb)));
    const CMatrix lhs = cplx(0.0, s.hbar) * integrate(dP), rhs_ = integrate(cm);
    const double scale = std::max(lhs.cwiseAbs().maxCoeff(), rhs_.cwiseAbs().maxCoeff());
    r.residuals["quantum_law"] = ratio((lhs - rhs_).cwiseAbs().maxCoeff(), scale);
}

void closure_casimirs(const ClosureState& s, DiagnosticsRecord& r) {
    r.casimirs["C2"] = casimir(s, PhiSpec::power(2));
    r.casimirs["C3"] = casimir(s, PhiSpec::power(3));
    r.casimirs["entropy"] = casimir(s, PhiSpec::entropy());
}

// spin RHS written on 𝒫 = D/2 + ħ⁻¹ s̃·σ
MatrixField matrix_rate(const SpinRhs& d, double hbar) {
    const auto& sg = pauli();
    MatrixField out(d.dD.grid(), 2);
    for (std::size_t k = 0; k < d.dD.size(); ++k) {
        Eigen::Matrix2cd m = 0.5 * d.dD[k] * Eigen::Matrix2cd::Identity();
        for (int c = 0; c < 3; ++c) m += (d.ds[c][k] / hbar) * sg[c];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) out(a, b, k) = m(a, b);
    }
    return out;
}

// J(Ψ) is quadratic, so dJ[Ψ̇] = (J(Ψ + hΨ̇) − J(Ψ − hΨ̇)) / (2h) holds exactly for any h.
double momentum_map_residual(const KvhModel& m, const KoopmanWavefunction& s) {
    const ComplexField dpsi = kvh_rhs(m.H, s);
    const double np = std::sqrt(integrate(abs2(s.psi))), nd = std::sqrt(integrate(abs2(dpsi)));
    const double h = nd > 0 ? np / nd : 1.0;
    const ScalarField jp = momentum_map_J(add(s, h, dpsi));
    const ScalarField jm = momentum_map_J(add(s, -h, dpsi));
    ScalarField dJ = jp - jm;
    dJ *= 1.0 / (2.0 * h);
    return l2(dJ - liouville_rhs(m.H, momentum_map_J(s)));
}

DiagnosticsRecord diag(const LiouvilleModel& m, const LiouvilleState& s) {
    DiagnosticsRecord r;
    r.energy = integrate(s.rho * m.H.v);
    r.total_mass = integrate(s.rho);
    r.min_D = min_of(s.rho);
    r.casimirs["C2"] = integrate(s.rho * s.rho);
    return r;
}

DiagnosticsRecord diag(const KvhModel& m, const KoopmanWavefunction& s) {
    DiagnosticsRecord r;
    r.energy = kvh_energy(m.H, s);
    r.total_mass = integrate(abs2(s.psi));
    r.min_D = min_of(momentum_map_J(s));
    r.residuals["momentum_map"] = momentum_map_residual(m, s);
    return r;
}

DiagnosticsRecord diag(const WaveModel& m, const HybridWavefunction& s) {
    DiagnosticsRecord r;
    r.energy = wave_energy(m.H, s);
    r.total_mass = wave_norm(s);
    const MatrixField dh = hybrid_density_vanhove(s);
    r.min_D = min_of(classical_density(dh));
    r.purity = purity_of(quantum_density(dh));
    return r;
}

DiagnosticsRecord closure_like(const ClosureState& s) {
    DiagnosticsRecord r;
    const ScalarField D = s.D();
    r.total_mass = integrate(D);
    r.min_D = min_of(D);
    closure_casimirs(s, r);
    return r;
}

DiagnosticsRecord diag(const ClosureModel& m, const ClosureState& s) {
    DiagnosticsRecord r = closure_like(s);
    r.energy = closure_hamiltonian(m.H, s);
    r.purity = purity_of(integrate(hybrid_density_closure(s)));
    if (!s.mixed) r.berry_flux = integrate(berry_curvature(s));
    marginal_residuals(m.H, s, closure_rhs(m.H, s), r);
    return r;
}

DiagnosticsRecord diag(const EhrenfestModel& m, const ClosureState& s) {
    DiagnosticsRecord r = closure_like(s);
    r.energy = ehrenfest_energy(m.H, s);
    r.purity = purity_of(integrate(s.P));
    return r;
}

DiagnosticsRecord diag(const MeanFieldModel& m, const MeanFieldState& s) {
    DiagnosticsRecord r;
    r.energy = meanfield_energy(m.H, s);
    r.total_mass = integrate(s.D);
    r.min_D = min_of(s.D);
    r.purity = purity_of(s.rho);
    return r;
}

DiagnosticsRecord diag(const SpinModel& m, const SpinState& s) {
    DiagnosticsRecord r;
    r.energy = spin_hamiltonian(m.H, s);
    r.total_mass = integrate(s.D);
    r.min_D = min_of(s.D);
    r.casimirs["C2"] = spin_casimir(s, PhiSpec::power(2));
    r.casimirs["C3"] = spin_casimir(s, PhiSpec::power(3));
    r.casimirs["entropy"] = spin_casimir(s, PhiSpec::entropy());
    const ClosureState P = density_from_spin(s);
    r.purity = purity_of(integrate(hybrid_density_closure(P)));
    if (!P.mixed) r.berry_flux = integrate(berry_curvature(P));
    marginal_residuals(m.H.to_matrix(), P, matrix_rate(spin_rhs(m.H, s), s.hbar), r);
    return r;
}

// ---- speeds for the CFL estimate ----

template <class F>
double support_max(const ScalarField& weight, F&& speed) {
    const double cut = 1e-6 * max_abs(weight);
    double v = 0;
    for (std::size_t k = 0; k < weight.size(); ++k)
        if (std::abs(weight[k]) > cut) v = std::max(v, speed(k));
    return v;
}

double jet_speed(const ScalarJet& H, const ScalarField& weight) {
    return support_max(weight, [&](std::size_t k) { return std::hypot(H.q[k], H.p[k]); });
}

double matrix_speed(const HybridHamiltonian& H, const ScalarField& weight) {
    const int n = H.n();
    return support_max(weight, [&](std::size_t k) {
        double s = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s += std::norm(H.q(a, b, k)) + std::norm(H.p(a, b, k));
        return std::sqrt(s);
    });
}

double field_speed(const PhaseVectorField& V, const ScalarField& weight) {
    return support_max(weight, [&](std::size_t k) { return std::hypot(V.q[k], V.p[k]); });
}

double speed(const LiouvilleModel& m, const LiouvilleState& s) { return jet_speed(m.H, s.rho); }
double speed(const KvhModel& m, const KoopmanWavefunction& s) { return jet_speed(m.H, abs2(s.psi)); }
double speed(const WaveModel& m, const HybridWavefunction& s) {
    ScalarField w(s.ups.grid());
    for (int a = 0; a < s.ups.n(); ++a)
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += std::norm(s.ups.comp(a)[k]);
    return matrix_speed(m.H, w);
}
double speed(const ClosureModel& m, const ClosureState& s) { return field_speed(closure_velocity(m.H, s), s.D()); }
double speed(const EhrenfestModel& m, const ClosureState& s) {
    return field_speed(ehrenfest_velocity(m.H, s), s.D());
}
double speed(const MeanFieldModel& m, const MeanFieldState& s) { return matrix_speed(m.H, s.D); }
double speed(const SpinModel& m, const SpinState& s) {
    return field_speed(closure_velocity(m.H.to_matrix(), density_from_spin(s)), s.D);
}

int nominal_order(Method m) { return m == Method::RK4 ? 4 : 2; }

int step_count(double t_final, double dt) {
    return static_cast<int>(std::ceil(t_final / dt - 1e-9));
}

State advance_to(const Model& m, State s, Method method, double dt, double t_final) {
    const int n = step_count(t_final, dt);
    for (int i = 1; i <= n; ++i) {
        const double h = i < n ? dt : t_final - (n - 1) * dt;
        s = step(m, s, method, h);
    }
    return s;
}

} // namespace

std::string model_name(const Model& m) {
    static const char* names[] = {"liouville", "kvh", "wave", "closure", "ehrenfest", "meanfield", "spin"};
    return names[m.index()];
}

DiagnosticsRecord diagnostics(const Model& m, const State& s, double t) {
    DiagnosticsRecord r = with_pair(m, s, [](const auto& mm, const auto& ss) { return diag(mm, ss); });
    r.t = t;
    return r;
}

State step(const Model& m, const State& s, Method method, double dt) {
    return with_pair(m, s, [&](const auto& mm, const auto& ss) { return State(advance(mm, ss, method, dt)); });
}

double max_speed(const Model& m, const State& s) {
    return with_pair(m, s, [](const auto& mm, const auto& ss) { return speed(mm, ss); });
}

RunResult run(const Model& m, State s, const IntegratorConfig& cfg, const Observer& observe) {
    if (!(cfg.dt > 0) || !(cfg.t_final > 0) || cfg.snapshot_every < 1)
        throw Error("integrator needs dt > 0, t_final > 0 and snapshot_every >= 1");
    RunResult res{s, 0.0, {}, {}};
    const Grid& g = std::visit(
        [](const auto& x) -> const Grid& {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, LiouvilleState>) return x.rho.grid();
            else if constexpr (std::is_same_v<T, KoopmanWavefunction>) return x.psi.grid();
            else if constexpr (std::is_same_v<T, HybridWavefunction>) return x.ups.grid();
            else if constexpr (std::is_same_v<T, ClosureState>) return x.grid();
            else return x.D.grid();
        },
        s);
    const double cell = std::min(g.dq(), g.dp());

    auto record = [&](double t, const State& st) {
        res.series.push_back(diagnostics(m, st, t));
        if (observe) observe(t, st);
    };
    record(0.0, s);
    const int n = step_count(cfg.t_final, cfg.dt);
    double t = 0;
    for (int i = 1; i <= n; ++i) {
        if ((i - 1) % 100 == 0) {
            const double v = max_speed(m, s);
            const double bound = v > 0 ? cfg.cfl_factor * cell / v : std::numeric_limits<double>::infinity();
            if (cfg.dt > bound) {
                std::ostringstream w;
                w.precision(6);
                w << "step " << i << ": dt = " << cfg.dt << " exceeds the CFL estimate " << bound;
                res.warnings.push_back(w.str());
            }
        }
        const double h = i < n ? cfg.dt : cfg.t_final - (n - 1) * cfg.dt;
        auto abort = [&](const std::string& why) {
            res.final_state = std::move(s);
            res.t = t;
            std::ostringstream w;
            w << why << " in step " << i << " (t = " << t + h << ")";
            return RunAborted(w.str(), std::move(res));
        };
        std::optional<State> next;
        try {
            next = step(m, s, cfg.method, h);
        } catch (const DegenerateDensity& e) {
            throw abort(e.what());
        }
        if (!finite(*next)) throw abort(NonFiniteState("NaN or Inf in the state").what());
        s = std::move(*next);
        t = i < n ? i * cfg.dt : cfg.t_final;
        if (i % cfg.snapshot_every == 0 || i == n) record(t, s);
    }
    res.final_state = std::move(s);
    res.t = t;
    return res;
}

double state_distance(const State& a, const State& b) {
    if (a.index() != b.index()) throw ShapeMismatch("states of different kinds");
    return rel_distance(flatten(a), flatten(b));
}

double fitted_slope(const std::vector<double>& dts, const std::vector<double>& errors) {
    if (dts.size() != errors.size() || dts.size() < 2) throw InsufficientLadder("need at least two points to fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(dts.size());
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable convergence_study(const Model& m, const State& s, Method method, double t_final,
                                   std::vector<double> dts) {
    if (dts.size() < 3) throw InsufficientLadder("at least three time steps are required");
    std::sort(dts.begin(), dts.end(), std::greater<>());
    for (std::size_t i = 0; i + 1 < dts.size(); ++i)
        if (!(dts[i + 1] > 0) || std::abs(dts[i] / dts[i + 1] - 2.0) > 1e-9)
            throw InsufficientLadder("successive time steps must differ by a factor of 2");
    std::vector<std::vector<double>> finals;
    for (double dt : dts) finals.push_back(flatten(advance_to(m, s, method, dt, t_final)));

    ConvergenceTable out;
    out.dts = dts;
    out.order = nominal_order(method);
    // y_ref = y_h + (y_h − y_2h)/(2^p − 1) from the two finest runs
    const auto& fine = finals.back();
    const auto& coarse = finals[finals.size() - 2];
    const double w = 1.0 / (std::pow(2.0, out.order) - 1.0);
    std::vector<double> ref(fine.size());
    for (std::size_t k = 0; k < ref.size(); ++k) ref[k] = fine[k] + w * (fine[k] - coarse[k]);
    bool all_small = true;
    for (const auto& f : finals) {
        out.errors.push_back(rel_distance(f, ref));
        all_small = all_small && out.errors.back() < 1e-12;
    }
    if (!all_small) out.slope = fitted_slope(out.dts, out.errors);
    return out;
}

} // namespace kvh
