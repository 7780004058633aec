#pragma once

#include "kvh/dynamics.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kvh {

// Run configuration, read from key = value text with [section] headers. '#' starts a comment;
// lists are written [a, b, c]; polynomials are coefficient lists in the Polynomial order.
struct RunConfig {
    std::string model = "spin"; // liouville, kvh, wave, closure, ehrenfest, meanfield, spin
    double hbar = 1.0;
    double d_floor = 1e-10;
    Dealias dealias = Dealias::TwoThirds;
    std::uint64_t seed = 0;

    int nq = 128, np = 128;
    double q_min = -8, q_max = 8, p_min = -8, p_max = 8;

    // Ĥ = H0·Id + (ħ/2) 𝐇·σ. Presets fill these; explicit h0/hx/hy/hz keys override them.
    std::string preset = "spin_boson"; // spin_boson, harmonic, none
    double lambda = 0.5, omega_s = 1.0, omega = 1.0;
    Polynomial h0;
    std::array<Polynomial, 3> hvec;

    // Gaussian D₀ times a Bloch direction with polynomial angles θ(q,p), φ(q,p); Ψ₀ and Υ₀ carry
    // √D₀ and the phase S₀ = s0_q·q + s0_p·p.
    double q0 = 1.0, p0 = 0.0, sigma_q = 0.8, sigma_p = 0.8;
    Polynomial theta = Polynomial::constant(1.1), phi = Polynomial::constant(0.3);
    double s0_q = 0.0, s0_p = 0.0;

    IntegratorConfig integrator;

    std::string output_dir = ".";
    enum class Snapshots { None, Final, All } snapshots = Snapshots::Final;

    Grid grid() const { return Grid(nq, np, q_min, q_max, p_min, p_max); }
};

struct ConfigIssue {
    enum class Kind { Syntax, UnknownKey, RangeError, MissingSection } kind;
    int line; // 1-based; for a missing section, the line after the last
    std::string message;
};
std::string to_string(ConfigIssue::Kind k);

// Carries every problem found, not just the first.
struct ConfigErrors : Error {
    explicit ConfigErrors(std::vector<ConfigIssue> list);
    std::vector<ConfigIssue> issues;
};

const std::vector<std::string>& model_names();

// Required sections: [model] and [hamiltonian]; the rest fall back to the defaults above.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// The Hamiltonian, model and initial state a config describes.
SpinHamiltonian build_spin_hamiltonian(const RunConfig& c, const Grid& g);
Model build_model(const RunConfig& c, const Grid& g);
State build_state(const RunConfig& c, const Grid& g);

} // namespace kvh
