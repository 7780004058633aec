#include "kvh/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace kvh {

std::string to_string(ConfigIssue::Kind k) {
    switch (k) {
    case ConfigIssue::Kind::Syntax: return "SyntaxError";
    case ConfigIssue::Kind::UnknownKey: return "UnknownKey";
    case ConfigIssue::Kind::RangeError: return "RangeError";
    case ConfigIssue::Kind::MissingSection: return "MissingSection";
    }
    return "?";
}

namespace {

std::string describe(const std::vector<ConfigIssue>& list) {
    std::ostringstream os;
    os << list.size() << " configuration error(s)";
    for (const auto& i : list) os << "\n  line " << i.line << ": " << to_string(i.kind) << ": " << i.message;
    return os.str();
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

// Raised by value converters; turned into an issue at the offending line.
struct Bad {
    ConfigIssue::Kind kind;
    std::string message;
};

double to_number(const std::string& v) {
    double x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw Bad{ConfigIssue::Kind::Syntax, "expected a number, got '" + v + "'"};
    if (!std::isfinite(x)) throw Bad{ConfigIssue::Kind::RangeError, "value must be finite"};
    return x;
}

long long to_integer(const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw Bad{ConfigIssue::Kind::Syntax, "expected an integer, got '" + v + "'"};
    return x;
}

std::string to_word(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::vector<double> to_list(const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw Bad{ConfigIssue::Kind::Syntax, "expected a list [a, b, ...]"};
    std::vector<double> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            if (out.empty() && ss.eof()) break; // []
            throw Bad{ConfigIssue::Kind::Syntax, "empty list entry"};
        }
        out.push_back(to_number(item));
    }
    return out;
}

Polynomial to_polynomial(const std::string& v) {
    const auto c = to_list(v);
    if (c.size() > std::size_t(Polynomial::n_terms))
        throw Bad{ConfigIssue::Kind::RangeError, "at most " + std::to_string(Polynomial::n_terms) + " coefficients (degree 4)"};
    return Polynomial::from_list(c);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Bad{ConfigIssue::Kind::RangeError, what};
}

double positive(const std::string& v) {
    const double x = to_number(v);
    require(x > 0, "must be positive");
    return x;
}

int grid_size(const std::string& v) {
    const long long n = to_integer(v);
    require(n >= 8 && n <= 4096 && n % 4 == 0, "grid size must be a multiple of 4 between 8 and 4096");
    return int(n);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

const Table& keys() {
    static const Table t = {
        {"model",
         {{"name",
           [](RunConfig& c, const std::string& v) {
               const std::string m = to_word(v);
               const auto& names = model_names();
               if (std::find(names.begin(), names.end(), m) == names.end())
                   throw Bad{ConfigIssue::Kind::UnknownKey, "unknown model '" + m + "'; valid models: " + join(names)};
               c.model = m;
           }},
          {"hbar", [](RunConfig& c, const std::string& v) { c.hbar = positive(v); }},
          {"d_floor",
           [](RunConfig& c, const std::string& v) {
               c.d_floor = positive(v);
               require(c.d_floor < 1e-2, "d_floor must be below 1e-2");
           }},
          {"dealias",
           [](RunConfig& c, const std::string& v) {
               const std::string d = to_word(v);
               if (d == "two_thirds") c.dealias = Dealias::TwoThirds;
               else if (d == "none") c.dealias = Dealias::None;
               else throw Bad{ConfigIssue::Kind::UnknownKey, "dealias must be two_thirds or none"};
           }},
          {"seed",
           [](RunConfig& c, const std::string& v) {
               const long long s = to_integer(v);
               require(s >= 0, "seed must be non-negative");
               c.seed = std::uint64_t(s);
           }}}},
        {"grid",
         {{"n", [](RunConfig& c, const std::string& v) { c.nq = c.np = grid_size(v); }},
          {"nq", [](RunConfig& c, const std::string& v) { c.nq = grid_size(v); }},
          {"np", [](RunConfig& c, const std::string& v) { c.np = grid_size(v); }},
          {"extent",
           [](RunConfig& c, const std::string& v) {
               const double e = positive(v);
               c.q_min = c.p_min = -e;
               c.q_max = c.p_max = e;
           }},
          {"q_min", [](RunConfig& c, const std::string& v) { c.q_min = to_number(v); }},
          {"q_max", [](RunConfig& c, const std::string& v) { c.q_max = to_number(v); }},
          {"p_min", [](RunConfig& c, const std::string& v) { c.p_min = to_number(v); }},
          {"p_max", [](RunConfig& c, const std::string& v) { c.p_max = to_number(v); }}}},
        {"hamiltonian",
         {{"preset",
           [](RunConfig& c, const std::string& v) {
               const std::string p = to_word(v);
               if (p != "spin_boson" && p != "harmonic" && p != "none")
                   throw Bad{ConfigIssue::Kind::UnknownKey, "unknown preset '" + p + "'; valid presets: spin_boson, harmonic, none"};
               c.preset = p;
           }},
          {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = to_number(v); }},
          {"omega_s", [](RunConfig& c, const std::string& v) { c.omega_s = to_number(v); }},
          {"omega", [](RunConfig& c, const std::string& v) { c.omega = positive(v); }},
          // explicit polynomials are stored after the preset is applied, see parse_config
          {"h0", [](RunConfig&, const std::string& v) { to_polynomial(v); }},
          {"hx", [](RunConfig&, const std::string& v) { to_polynomial(v); }},
          {"hy", [](RunConfig&, const std::string& v) { to_polynomial(v); }},
          {"hz", [](RunConfig&, const std::string& v) { to_polynomial(v); }}}},
        {"initial",
         {{"q0", [](RunConfig& c, const std::string& v) { c.q0 = to_number(v); }},
          {"p0", [](RunConfig& c, const std::string& v) { c.p0 = to_number(v); }},
          {"sigma", [](RunConfig& c, const std::string& v) { c.sigma_q = c.sigma_p = positive(v); }},
          {"sigma_q", [](RunConfig& c, const std::string& v) { c.sigma_q = positive(v); }},
          {"sigma_p", [](RunConfig& c, const std::string& v) { c.sigma_p = positive(v); }},
          {"theta", [](RunConfig& c, const std::string& v) { c.theta = to_polynomial(v); }},
          {"phi", [](RunConfig& c, const std::string& v) { c.phi = to_polynomial(v); }},
          {"s0_q", [](RunConfig& c, const std::string& v) { c.s0_q = to_number(v); }},
          {"s0_p", [](RunConfig& c, const std::string& v) { c.s0_p = to_number(v); }}}},
        {"integrator",
         {{"method",
           [](RunConfig& c, const std::string& v) {
               const std::string m = to_word(v);
               if (m == "rk4") c.integrator.method = Method::RK4;
               else if (m == "midpoint") c.integrator.method = Method::Midpoint;
               else throw Bad{ConfigIssue::Kind::UnknownKey, "method must be rk4 or midpoint"};
           }},
          {"dt", [](RunConfig& c, const std::string& v) { c.integrator.dt = positive(v); }},
          {"t_final", [](RunConfig& c, const std::string& v) { c.integrator.t_final = positive(v); }},
          {"snapshot_every",
           [](RunConfig& c, const std::string& v) {
               const long long n = to_integer(v);
               require(n >= 1 && n <= 1000000000, "snapshot_every must be a positive integer");
               c.integrator.snapshot_every = int(n);
           }},
          {"cfl_factor", [](RunConfig& c, const std::string& v) { c.integrator.cfl_factor = positive(v); }}}},
        {"output",
         {{"dir", [](RunConfig& c, const std::string& v) { c.output_dir = to_word(v); }},
          {"snapshots", [](RunConfig& c, const std::string& v) {
               const std::string s = to_word(v);
               if (s == "none") c.snapshots = RunConfig::Snapshots::None;
               else if (s == "final") c.snapshots = RunConfig::Snapshots::Final;
               else if (s == "all") c.snapshots = RunConfig::Snapshots::All;
               else throw Bad{ConfigIssue::Kind::UnknownKey, "snapshots must be none, final or all"};
           }}}}};
    return t;
}

std::vector<std::string> names_of(const std::map<std::string, Setter>& m) {
    std::vector<std::string> out;
    for (const auto& [k, _] : m) out.push_back(k);
    return out;
}

} // namespace

ConfigErrors::ConfigErrors(std::vector<ConfigIssue> list) : Error(describe(list)), issues(std::move(list)) {}

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> n = {"liouville", "kvh", "wave", "closure", "ehrenfest", "meanfield", "spin"};
    return n;
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::vector<ConfigIssue> issues;
    std::set<std::string> seen_sections;
    std::map<std::string, int> key_line; // "section.key" -> line
    std::map<std::string, std::string> polys;
    std::string section;
    int line_no = 0;

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({ConfigIssue::Kind::Syntax, line_no, "malformed section header"});
                continue;
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!keys().count(section)) {
                std::vector<std::string> valid;
                for (const auto& [k, _] : keys()) valid.push_back(k);
                issues.push_back({ConfigIssue::Kind::UnknownKey, line_no, "unknown section [" + section + "]; valid sections: " + join(valid)});
            } else if (!seen_sections.insert(section).second) {
                issues.push_back({ConfigIssue::Kind::Syntax, line_no, "section [" + section + "] appears twice"});
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({ConfigIssue::Kind::Syntax, line_no, "expected key = value"});
            continue;
        }
        const std::string key = trim(std::string_view(line).substr(0, eq)), value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty()) {
            issues.push_back({ConfigIssue::Kind::Syntax, line_no, "key '" + key + "' outside any section"});
            continue;
        }
        const auto sec = keys().find(section);
        if (sec == keys().end()) continue; // already reported
        const auto setter = sec->second.find(key);
        if (setter == sec->second.end()) {
            issues.push_back({ConfigIssue::Kind::UnknownKey, line_no,
                              "unknown key '" + key + "' in [" + section + "]; valid keys: " + join(names_of(sec->second))});
            continue;
        }
        if (!key_line.emplace(section + "." + key, line_no).second) {
            issues.push_back({ConfigIssue::Kind::Syntax, line_no, "duplicate key '" + key + "'"});
            continue;
        }
        if (value.empty()) {
            issues.push_back({ConfigIssue::Kind::Syntax, line_no, "missing value for '" + key + "'"});
            continue;
        }
        try {
            setter->second(c, value);
            if (section == "hamiltonian" && key.size() == 2 && key[0] == 'h') polys[key] = value;
        } catch (const Bad& b) {
            issues.push_back({b.kind, line_no, key + ": " + b.message});
        }
    }

    for (const char* s : {"model", "hamiltonian"})
        if (!seen_sections.count(s))
            issues.push_back({ConfigIssue::Kind::MissingSection, line_no + 1, std::string("missing section [") + s + "]"});

    auto line_of = [&](std::initializer_list<const char*> ks) {
        int l = 0;
        for (const char* k : ks)
            if (auto it = key_line.find(k); it != key_line.end()) l = std::max(l, it->second);
        return l;
    };
    if (!(c.q_min < c.q_max) || !(c.p_min < c.p_max))
        issues.push_back({ConfigIssue::Kind::RangeError, line_of({"grid.q_min", "grid.q_max", "grid.p_min", "grid.p_max"}),
                          "domain extents must satisfy min < max"});
    else if (c.q0 < c.q_min || c.q0 >= c.q_max || c.p0 < c.p_min || c.p0 >= c.p_max)
        issues.push_back({ConfigIssue::Kind::RangeError, line_of({"initial.q0", "initial.p0"}), "initial centre lies outside the domain"});

    if (c.preset == "spin_boson") {
        c.h0 = Polynomial::harmonic(c.omega);
        c.hvec = {Polynomial::monomial(1, 0, c.lambda), Polynomial(), Polynomial::constant(c.omega_s)};
    } else if (c.preset == "harmonic") {
        c.h0 = Polynomial::harmonic(c.omega);
    }
    for (const auto& [k, v] : polys) {
        const Polynomial p = to_polynomial(v);
        if (k == "h0") c.h0 = p;
        else c.hvec[k[1] - 'x'] = p;
    }
    const bool classical = c.model == "liouville" || c.model == "kvh";
    if (classical && !(c.hvec[0].is_zero() && c.hvec[1].is_zero() && c.hvec[2].is_zero()))
        issues.push_back({ConfigIssue::Kind::RangeError, std::max(line_of({"model.name"}), line_of({"hamiltonian.preset", "hamiltonian.hx", "hamiltonian.hy", "hamiltonian.hz"})),
                          "model " + c.model + " is classical; the coupling 𝐇 must vanish (use preset = harmonic)"});

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(), [](const auto& a, const auto& b) { return a.line < b.line; });
        throw ConfigErrors(std::move(issues));
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

SpinHamiltonian build_spin_hamiltonian(const RunConfig& c, const Grid& g) {
    return SpinHamiltonian(g, c.h0, c.hvec, c.hbar);
}

Model build_model(const RunConfig& c, const Grid& g) {
    if (c.model == "liouville") return LiouvilleModel{ScalarJet::from_polynomial(g, c.h0)};
    if (c.model == "kvh") return KvhModel{ScalarJet::from_polynomial(g, c.h0)};
    const SpinHamiltonian sh = build_spin_hamiltonian(c, g);
    if (c.model == "spin") return SpinModel{sh};
    const HybridHamiltonian H = sh.to_matrix();
    if (c.model == "wave") return WaveModel{H};
    if (c.model == "closure") return ClosureModel{H};
    if (c.model == "ehrenfest") return EhrenfestModel{H};
    if (c.model == "meanfield") return MeanFieldModel{H};
    throw Error("unknown model " + c.model);
}

State build_state(const RunConfig& c, const Grid& g) {
    ScalarField D(g);
    ComplexField phase(g);
    AmplitudeField psi(g, 2);
    Vec3Field n{ScalarField(g), ScalarField(g), ScalarField(g)};
    for (int i = 0; i < g.nq(); ++i)
        for (int j = 0; j < g.np(); ++j) {
            const double q = g.q(i), p = g.p(j), dq = (q - c.q0) / c.sigma_q, dp = (p - c.p0) / c.sigma_p;
            const std::size_t k = g.index(i, j);
            D[k] = std::exp(-0.5 * (dq * dq + dp * dp));
            phase[k] = std::polar(1.0, (c.s0_q * q + c.s0_p * p) / c.hbar);
            const double th = c.theta(q, p), ph = c.phi(q, p);
            psi.comp(0)[k] = std::cos(th / 2);
            psi.comp(1)[k] = std::polar(std::sin(th / 2), ph);
            n[0][k] = std::sin(th) * std::cos(ph);
            n[1][k] = std::sin(th) * std::sin(ph);
            n[2][k] = std::cos(th);
        }
    D *= 1.0 / integrate(D);

    if (c.model == "liouville") return LiouvilleState{D};
    if (c.model == "kvh") {
        ComplexField Psi(g);
        for (std::size_t k = 0; k < g.size(); ++k) Psi[k] = std::sqrt(D[k]) * phase[k];
        return KoopmanWavefunction{std::move(Psi), c.hbar};
    }
    if (c.model == "wave") {
        AmplitudeField ups(g, 2);
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < g.size(); ++k) ups.comp(a)[k] = std::sqrt(D[k]) * phase[k] * psi.comp(a)[k];
        return HybridWavefunction{std::move(ups), c.hbar};
    }
    if (c.model == "meanfield") {
        const double th = c.theta(c.q0, c.p0), ph = c.phi(c.q0, c.p0);
        const Eigen::Vector2cd v(std::cos(th / 2), std::polar(std::sin(th / 2), ph));
        return MeanFieldState{D, v * v.adjoint(), c.hbar};
    }
    if (c.model == "spin") {
        SpinState s = SpinState::pure(D, n, c.hbar, c.d_floor);
        s.dealias = c.dealias;
        return s;
    }
    ClosureState s = ClosureState::pure(D, psi, c.hbar, c.d_floor);
    s.dealias = c.dealias;
    return s;
}

} // namespace kvh
