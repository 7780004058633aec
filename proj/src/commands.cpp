#include "kvh/commands.hpp"

#include "kvh/checks.hpp"
#include "kvh/snapshot.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace kvh {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::filesystem::path prepare_dir(const std::filesystem::path& base, const RunConfig& c) {
    const std::filesystem::path dir = base / c.output_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void save_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord>& series) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    write_csv(f, series);
}

std::string snapshot_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%05d.kvhb", index);
    return buf;
}

double rel_l2(const ScalarField& a, const ScalarField& b) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
    }
    return std::sqrt(num / den);
}

struct Sample {
    double t;
    ScalarField D;
    CMatrix rho;
};

// D and ρ̂_q = ∫𝒟̂ of any state that has them
Sample sample_of(double t, const State& s) {
    return std::visit(
        [&](const auto& st) -> Sample {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, LiouvilleState>) return {t, st.rho, CMatrix()};
            else if constexpr (std::is_same_v<T, ClosureState>) return {t, st.D(), integrate(hybrid_density_closure(st))};
            else if constexpr (std::is_same_v<T, MeanFieldState>) return {t, st.D, st.rho};
            else throw Error("reduction compares closure-type states only");
        },
        s);
}

std::vector<Sample> sampled_run(const Model& m, const State& s, const IntegratorConfig& cfg, std::string& aborted) {
    std::vector<Sample> out;
    try {
        run(m, s, cfg, [&](double t, const State& st) { out.push_back(sample_of(t, st)); });
    } catch (const Error& e) {
        aborted = e.what();
    }
    return out;
}

} // namespace

std::string csv_header(const DiagnosticsRecord& r) {
    std::string h = "t,energy,mass,min_D,purity";
    for (const auto& [k, _] : r.casimirs) h += "," + k;
    for (const auto& [k, _] : r.residuals) h += "," + k;
    return h;
}

std::string csv_row(const DiagnosticsRecord& r) {
    std::string row = num(r.t) + "," + num(r.energy) + "," + num(r.total_mass) + "," + num(r.min_D) + "," +
                      num(r.purity.value_or(nan));
    for (const auto& [_, v] : r.casimirs) row += "," + num(v);
    for (const auto& [_, v] : r.residuals) row += "," + num(v);
    return row;
}

void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series) {
    if (series.empty()) return;
    os << csv_header(series.front()) << '\n';
    for (const auto& r : series) os << csv_row(r) << '\n';
}

int run_command(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& log) {
    const Grid g = c.grid();
    const Model m = build_model(c, g);
    const std::filesystem::path dir = prepare_dir(out_dir, c);
    int index = 0;
    Observer observe;
    if (c.snapshots == RunConfig::Snapshots::All)
        observe = [&](double t, const State& s) { write_snapshot(dir / snapshot_name(index++), s, t); };
    log << "model " << c.model << " on " << c.nq << "x" << c.np << ", dt " << c.integrator.dt << ", t_final "
        << c.integrator.t_final << "\n";
    try {
        const RunResult r = run(m, build_state(c, g), c.integrator, observe);
        for (const auto& w : r.warnings) log << "warning: " << w << "\n";
        save_csv(dir / "diagnostics.csv", r.series);
        if (c.snapshots != RunConfig::Snapshots::None) write_snapshot(dir / "final.kvhb", r.final_state, r.t);
        const auto& first = r.series.front();
        const auto& last = r.series.back();
        log << "energy drift " << std::abs(last.energy - first.energy) / std::abs(first.energy) << ", min D "
            << last.min_D << "\n";
        return exit_ok;
    } catch (const RunAborted& e) {
        for (const auto& w : e.partial.warnings) log << "warning: " << w << "\n";
        save_csv(dir / "diagnostics.csv", e.partial.series);
        write_snapshot(dir / "last_good.kvhb", e.partial.final_state, e.partial.t);
        log << "run aborted at t = " << e.partial.t << ": " << e.what() << "\n";
        return exit_run_aborted;
    }
}

int check_command(const RunConfig& c, std::ostream& log) {
    const Grid g = c.grid();
    const auto results = invariant_suite(build_spin_hamiltonian(c, g), g, c.seed);
    bool ok = true;
    for (const auto& r : results) {
        log << (r.pass() ? "PASS " : "FAIL ") << r.name << " " << num(r.value) << " (tolerance " << r.tolerance << ")\n";
        ok = ok && r.pass();
    }
    return ok ? exit_ok : exit_check_failed;
}

Reference parse_reference(const std::string& name) {
    if (name == "classical") return Reference::Classical;
    if (name == "quantum") return Reference::Quantum;
    if (name == "meanfield") return Reference::MeanField;
    if (name == "ehrenfest") return Reference::Ehrenfest;
    throw Error("unknown reference '" + name + "'; expected classical, quantum, meanfield or ehrenfest");
}

double ReductionReport::max_d() const {
    double m = 0;
    for (double x : d_divergence) m = std::max(m, x);
    return m;
}

double ReductionReport::max_rho() const {
    double m = 0;
    for (double x : rho_divergence) m = std::isnan(x) ? m : std::max(m, x);
    return rho_divergence.empty() || std::isnan(rho_divergence.front()) ? nan : m;
}

ReductionReport reduce(const RunConfig& c, Reference against) {
    const Grid g = c.grid();
    RunConfig cc = c;
    cc.model = "closure";
    const ClosureState pure = std::get<ClosureState>(build_state(cc, g));
    const HybridHamiltonian H = build_spin_hamiltonian(c, g).to_matrix();
    const IntegratorConfig& cfg = c.integrator;

    std::string aborted;
    std::vector<Sample> a, b;
    switch (against) {
    case Reference::Classical: {
        a = sampled_run(ClosureModel{HybridHamiltonian::scalar(g, 2, c.h0)}, pure, cfg, aborted);
        b = sampled_run(LiouvilleModel{ScalarJet::from_polynomial(g, c.h0)}, LiouvilleState{pure.D()}, cfg, aborted);
        break;
    }
    case Reference::Quantum: {
        for (const auto& h : c.hvec)
            if (!h.is_constant()) throw Error("the quantum reduction needs a z-independent coupling 𝐇");
        a = sampled_run(ClosureModel{H}, pure, cfg, aborted);
        // D follows the H0 flow; ρ̂_q precesses under B = (ħ/2) 𝐇·σ
        b = sampled_run(LiouvilleModel{ScalarJet::from_polynomial(g, c.h0)}, LiouvilleState{pure.D()}, cfg, aborted);
        CMatrix B = CMatrix::Zero(2, 2);
        for (int k = 0; k < 3; ++k) B += 0.5 * c.hbar * c.hvec[k].coeff(0, 0) * CMatrix(pauli()[k]);
        const CMatrix rho0 = integrate(pure.P);
        for (auto& s : b) {
            const CMatrix U = (CMatrix(cplx(0, -s.t / c.hbar) * B)).exp();
            s.rho = U * rho0 * U.adjoint();
        }
        break;
    }
    case Reference::MeanField:
    case Reference::Ehrenfest: {
        const CMatrix rho0 = integrate(pure.P);
        if (against == Reference::MeanField) {
            const ClosureState prod = ClosureState::product(pure.D(), rho0, c.hbar, c.d_floor);
            a = sampled_run(ClosureModel{H}, prod, cfg, aborted);
            b = sampled_run(MeanFieldModel{H}, MeanFieldState{pure.D(), rho0, c.hbar}, cfg, aborted);
        } else {
            a = sampled_run(ClosureModel{H}, pure, cfg, aborted);
            b = sampled_run(EhrenfestModel{H}, pure, cfg, aborted);
        }
        break;
    }
    }
    ReductionReport rep;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        rep.t.push_back(a[i].t);
        rep.d_divergence.push_back(rel_l2(a[i].D, b[i].D));
        rep.rho_divergence.push_back(against == Reference::Classical ? nan : (a[i].rho - b[i].rho).cwiseAbs().maxCoeff());
    }
    rep.aborted = aborted;
    return rep;
}

int reduce_command(const RunConfig& c, Reference against, const std::filesystem::path& out_dir, std::ostream& log) {
    const std::filesystem::path dir = prepare_dir(out_dir, c);
    const ReductionReport rep = reduce(c, against);
    std::ofstream f(dir / "reduction.csv", std::ios::binary | std::ios::trunc);
    f << "t,D_divergence,rho_divergence\n";
    for (std::size_t i = 0; i < rep.t.size(); ++i)
        f << num(rep.t[i]) << "," << num(rep.d_divergence[i]) << "," << num(rep.rho_divergence[i]) << "\n";
    log << "max relative L2 divergence of D: " << num(rep.max_d()) << "\n";
    log << "max divergence of rho_q: " << num(rep.max_rho()) << "\n";
    if (!rep.aborted.empty()) {
        log << "stopped early after t = " << num(rep.t.empty() ? 0.0 : rep.t.back()) << ": " << rep.aborted << "\n";
        return exit_run_aborted;
    }
    return exit_ok;
}

int convergence_command(const RunConfig& c, const std::vector<double>& dts, const std::filesystem::path& out_dir,
                        std::ostream& log) {
    const Grid g = c.grid();
    const ConvergenceTable t =
        convergence_study(build_model(c, g), build_state(c, g), c.integrator.method, c.integrator.t_final, dts);
    const std::filesystem::path dir = prepare_dir(out_dir, c);
    std::ofstream f(dir / "convergence.csv", std::ios::binary | std::ios::trunc);
    f << "dt,error\n";
    for (std::size_t i = 0; i < t.dts.size(); ++i) {
        f << num(t.dts[i]) << "," << num(t.errors[i]) << "\n";
        log << "dt " << num(t.dts[i]) << "  error " << num(t.errors[i]) << "\n";
    }
    log << "fitted slope " << (t.slope ? num(*t.slope) : "undefined") << " (nominal order " << t.order << ")\n";
    return exit_ok;
}

} // namespace kvh
