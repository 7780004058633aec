#include "closure_support.hpp"

#include "kvh/checks.hpp"
#include "kvh/commands.hpp"
#include "kvh/snapshot.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace kvh;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("kvh_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<ConfigIssue> issues_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigErrors& e) {
        return e.issues;
    }
    return {};
}

const char* minimal = "[model]\nname = spin\n[hamiltonian]\npreset = spin_boson\n";

} // namespace

TEST_CASE("config: defaults, presets and overrides") {
    const RunConfig c = parse_config(minimal);
    CHECK(c.model == "spin");
    CHECK(c.integrator.dt == 1e-3);
    CHECK(c.integrator.method == Method::RK4);
    CHECK(c.nq == 128);
    CHECK(c.np == 128);
    CHECK(c.q_min == -8.0);
    CHECK(c.p_max == 8.0);
    CHECK(c.hbar == 1.0);
    CHECK(c.h0.coeff(2, 0) == 0.5);
    CHECK(c.h0.coeff(0, 2) == 0.5);
    CHECK(c.hvec[0].coeff(1, 0) == 0.5);
    CHECK(c.hvec[2].coeff(0, 0) == 1.0);

    const RunConfig d = parse_config(R"(
# comment line
[model]
name = closure   # trailing comment
hbar = 0.5
[grid]
nq = 64
np = 32
q_min = -6
q_max = 6
[hamiltonian]
preset = spin_boson
lambda = 0.25
hz = [0, 0, 1]
[initial]
theta = [1.0, 0.1]
[integrator]
method = midpoint
dt = 2e-3
t_final = 3
snapshot_every = 7
[output]
dir = "sub/dir"
snapshots = all
)");
    CHECK(d.model == "closure");
    CHECK(d.hbar == 0.5);
    CHECK(d.nq == 64);
    CHECK(d.np == 32);
    CHECK(d.q_min == -6.0);
    CHECK(d.hvec[0].coeff(1, 0) == 0.25);
    CHECK(d.hvec[2].coeff(0, 0) == 0.0);
    CHECK(d.hvec[2].coeff(0, 1) == 1.0);
    CHECK(d.theta.coeff(1, 0) == 0.1);
    CHECK(d.integrator.method == Method::Midpoint);
    CHECK(d.integrator.snapshot_every == 7);
    CHECK(d.output_dir == "sub/dir");
    CHECK(d.snapshots == RunConfig::Snapshots::All);
}

TEST_CASE("config: every error is reported with its line") {
    auto v = issues_of("[model]\nname = spin\n[hamiltonian]\n[integrator]\ndt = -1\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ConfigIssue::Kind::RangeError);
    CHECK(v[0].line == 5);

    v = issues_of("[model]\nname = quantum_foam\n[hamiltonian]\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ConfigIssue::Kind::UnknownKey);
    CHECK(v[0].line == 2);
    for (const auto& m : model_names()) CHECK(v[0].message.find(m) != std::string::npos);

    v = issues_of("[grid]\nn = 98\nwidth = 3\n[integrator]\nsnapshot_every = 0\nt_final = abc\n");
    REQUIRE(v.size() == 6);
    CHECK(v[0].line == 2); // 98 is not a multiple of 4
    CHECK(v[0].kind == ConfigIssue::Kind::RangeError);
    CHECK(v[1].line == 3);
    CHECK(v[1].kind == ConfigIssue::Kind::UnknownKey);
    CHECK(v[2].line == 5);
    CHECK(v[3].line == 6);
    CHECK(v[3].kind == ConfigIssue::Kind::Syntax);
    CHECK(v[4].kind == ConfigIssue::Kind::MissingSection);
    CHECK(v[5].kind == ConfigIssue::Kind::MissingSection);
    CHECK(v[4].line == 7);

    v = issues_of("[model]\nname = kvh\n[hamiltonian]\npreset = spin_boson\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ConfigIssue::Kind::RangeError);

    v = issues_of("[model]\nname = spin\nname = spin\n[hamiltonian]\nh0 = [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16]\n[bogus]\n");
    REQUIRE(v.size() == 3);
    CHECK(v[0].line == 3);
    CHECK(v[1].line == 5);
    CHECK(v[2].line == 6);

    v = issues_of("[model]\nname = spin\n[hamiltonian]\n[initial]\nq0 = 20\n");
    REQUIRE(v.size() == 1);
    CHECK(v[0].line == 5);
}

TEST_CASE("config: built states are normalized and match the model") {
    RunConfig c = parse_config(minimal);
    c.nq = c.np = 32;
    c.q_min = c.p_min = -6;
    c.q_max = c.p_max = 6;
    const Grid g = c.grid();
    for (const auto& name : model_names()) {
        c.model = name;
        if (name == "kvh" || name == "liouville") c.hvec = {};
        const Model m = build_model(c, g);
        const State s = build_state(c, g);
        CHECK(model_name(m) == name);
        const DiagnosticsRecord d = diagnostics(m, s);
        CHECK(d.total_mass == doctest::Approx(1.0).epsilon(1e-12));
    }
    // the spin and closure states are the same 𝒫
    c.model = "spin";
    const SpinState S = std::get<SpinState>(build_state(c, g));
    c.model = "closure";
    const ClosureState P = std::get<ClosureState>(build_state(c, g));
    CHECK(max_abs(density_from_spin(S).P - P.P) < 1e-15);
}

TEST_CASE("snapshot round trip is byte-identical for every payload") {
    Grid g(16, 16, -5.0, 5.0, -4.0, 4.0);
    std::mt19937_64 rng(31);
    ClosureState P = random_closure_state(g, rng, 2, 0.7);
    P.eps = 1.25e-11;
    const SpinState S = spin_from_density(P);
    AmplitudeField ups(g, 3);
    for (auto& x : ups.raw()) x = cplx(std::uniform_real_distribution<double>()(rng), 0.25);
    CMatrix rho(2, 2);
    rho << 0.6, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.4;
    const std::vector<State> states = {LiouvilleState{P.D()},
                                       KoopmanWavefunction{ComplexField(g, cplx(0.3, -0.1)), 0.9},
                                       HybridWavefunction{ups, 1.1},
                                       P,
                                       MeanFieldState{P.D(), rho, 0.8},
                                       S};
    const auto dir = scratch("snap");
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto bytes = encode_snapshot(states[i], 0.375 * double(i));
        CHECK(bytes.size() >= snapshot_header_size);
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "KVHB");
        const Snapshot back = decode_snapshot(bytes);
        CHECK(back.t == 0.375 * double(i));
        CHECK(back.state.index() == states[i].index());
        CHECK(encode_snapshot(back.state, back.t) == bytes);

        const auto path = dir / ("s" + std::to_string(i) + ".kvhb");
        write_snapshot(path, states[i], back.t);
        const Snapshot fromfile = read_snapshot(path);
        write_snapshot(dir / "again.kvhb", fromfile.state, fromfile.t);
        CHECK(slurp(path) == slurp(dir / "again.kvhb"));
    }
    const Snapshot snap = decode_snapshot(encode_snapshot(P, 0.0));
    const auto& back = std::get<ClosureState>(snap.state);
    CHECK(back.eps == P.eps);
    CHECK(back.mixed == P.mixed);
    CHECK(back.hbar == 0.7);
    CHECK(back.grid().same_as(g));

    auto bytes = encode_snapshot(P, 0.0);
    CHECK_THROWS_AS(decode_snapshot(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 8)), SnapshotError);
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_snapshot(bad), SnapshotError);
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_snapshot(bad), SnapshotError);
    CHECK_THROWS_AS(read_snapshot(dir / "missing.kvhb"), SnapshotError);
}

TEST_CASE("csv schema") {
    DiagnosticsRecord r;
    r.t = 0.1;
    r.energy = 1.0 / 3.0;
    r.total_mass = 1;
    r.min_D = -1e-20;
    r.casimirs = {{"C2", 0.25}, {"C3", 0.125}};
    r.residuals = {{"trace_law", 1e-12}};
    CHECK(csv_header(r) == "t,energy,mass,min_D,purity,C2,C3,trace_law");
    CHECK(csv_row(r) == "0.10000000000000001,0.33333333333333331,1,-9.9999999999999995e-21,nan,0.25,0.125,9.9999999999999998e-13");
}

TEST_CASE("run command is deterministic and writes its outputs") {
    RunConfig c = parse_config(minimal);
    c.nq = c.np = 64;
    c.integrator.t_final = 0.05;
    c.integrator.snapshot_every = 10;
    c.snapshots = RunConfig::Snapshots::All;
    const auto a = scratch("run_a"), b = scratch("run_b");
    std::ostringstream log;
    REQUIRE(run_command(c, a, log) == exit_ok);
    REQUIRE(run_command(c, b, log) == exit_ok);
    const std::string csv = slurp(a / "diagnostics.csv");
    CHECK(csv.rfind("t,energy,mass,min_D,purity,", 0) == 0);
    CHECK(csv == slurp(b / "diagnostics.csv"));
    CHECK(slurp(a / "final.kvhb") == slurp(b / "final.kvhb"));
    CHECK(std::filesystem::exists(a / "snapshot_00005.kvhb"));
    const Snapshot fin = read_snapshot(a / "final.kvhb");
    CHECK(fin.t == doctest::Approx(0.05));

    c.integrator.dt = 50.0; // blows up on the first step
    c.integrator.t_final = 100.0;
    c.snapshots = RunConfig::Snapshots::None;
    const auto d = scratch("run_abort");
    CHECK(run_command(c, d, log) == exit_run_aborted);
    CHECK(std::filesystem::exists(d / "diagnostics.csv"));
}

TEST_CASE("check, reduce and convergence commands") {
    RunConfig c = parse_config("[model]\nname = closure\n[hamiltonian]\npreset = harmonic\nhz = [1.0]\n");
    c.nq = c.np = 48;
    c.q_min = c.p_min = -8;
    c.q_max = c.p_max = 8;
    std::ostringstream log;
    CHECK(check_command(c, log) == exit_ok);
    CHECK(log.str().find("FAIL") == std::string::npos);

    c.integrator.t_final = 0.3;
    c.integrator.snapshot_every = 50;
    const ReductionReport cl = reduce(c, Reference::Classical);
    CHECK(cl.aborted.empty());
    CHECK(cl.t.size() == 7);
    CHECK(cl.max_d() < 1e-6);
    CHECK(std::isnan(cl.max_rho()));
    const ReductionReport qu = reduce(c, Reference::Quantum);
    CHECK(qu.max_rho() < 1e-6);
    CHECK(qu.max_d() < 1e-6);

    // coupled runs need the σ = 0.8 Gaussian resolved beyond the regularization scale
    c.nq = c.np = 64;
    c.hvec[0] = Polynomial::monomial(1, 0, 0.5);
    CHECK_THROWS_AS(reduce(c, Reference::Quantum), Error);
    const ReductionReport eh = reduce(c, Reference::Ehrenfest);
    CHECK(eh.aborted.empty());
    CHECK(eh.max_d() > 0);
    CHECK_THROWS_AS(parse_reference("semiclassical"), Error);

    const auto dir = scratch("conv");
    c.integrator.t_final = 0.2;
    CHECK(convergence_command(c, {0.02, 0.01, 0.005}, dir, log) == exit_ok);
    CHECK(slurp(dir / "convergence.csv").rfind("dt,error\n", 0) == 0);
    CHECK_THROWS_AS(convergence_command(c, {0.02, 0.01}, dir, log), InsufficientLadder);
}
