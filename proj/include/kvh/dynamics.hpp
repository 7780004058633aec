#pragma once

#include "kvh/spin2.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kvh {

enum class Method { RK4, Midpoint };

struct IntegratorConfig {
    Method method = Method::RK4;
    double dt = 1e-3;
    double t_final = 1.0;
    int snapshot_every = 100; // diagnostics cadence, in steps
    double cfl_factor = 0.5;
};

// Models. The classical Liouville solver is kept alongside the hybrid ones as the reference
// for the classical reduction.
struct LiouvilleModel {
    ScalarJet H;
};
struct KvhModel {
    ScalarJet H;
};
struct WaveModel {
    HybridHamiltonian H;
};
struct ClosureModel {
    HybridHamiltonian H;
};
struct EhrenfestModel {
    HybridHamiltonian H;
};
struct MeanFieldModel {
    HybridHamiltonian H;
};
struct SpinModel {
    SpinHamiltonian H;
};
using Model = std::variant<LiouvilleModel, KvhModel, WaveModel, ClosureModel, EhrenfestModel, MeanFieldModel, SpinModel>;

struct LiouvilleState {
    ScalarField rho;
};
using State = std::variant<LiouvilleState, KoopmanWavefunction, HybridWavefunction, ClosureState, MeanFieldState, SpinState>;

std::string model_name(const Model& m);

struct DiagnosticsRecord {
    double t = 0;
    double energy = 0;
    double total_mass = 0;
    double min_D = 0;
    std::optional<double> purity; // Tr ρ̂_q², absent for purely classical models
    std::map<std::string, double> casimirs;
    std::optional<double> berry_flux;
    std::map<std::string, double> residuals;
};

DiagnosticsRecord diagnostics(const Model& m, const State& s, double t = 0.0);

// One explicit step of size dt. Throws ShapeMismatch when the state does not belong to the model.
State step(const Model& m, const State& s, Method method, double dt);

// max ‖𝒳‖ over the support of the current state
double max_speed(const Model& m, const State& s);

struct RunResult {
    State final_state;
    double t = 0;
    std::vector<DiagnosticsRecord> series;
    std::vector<std::string> warnings;
};

// Thrown when a step produces NaN/Inf or the density degenerates; carries the last good state,
// the series so far and the original error message.
struct RunAborted : Error {
    RunAborted(const std::string& what, RunResult partial_) : Error(what), partial(std::move(partial_)) {}
    RunResult partial;
};

using Observer = std::function<void(double t, const State&)>;

// Diagnostics are sampled at t = 0, every snapshot_every steps and at the end. The observer,
// if given, sees the same samples.
RunResult run(const Model& m, State s, const IntegratorConfig& cfg, const Observer& observe = {});

// Relative L² distance of the primary fields (for spin states, D and s̃ stacked).
double state_distance(const State& a, const State& b);

struct ConvergenceTable {
    std::vector<double> dts;
    std::vector<double> errors; // against the Richardson reference
    std::optional<double> slope; // undefined when every error is below 1e-12
    int order = 4;              // nominal order used for the extrapolation
};

// Least-squares slope of log(err) against log(dt).
double fitted_slope(const std::vector<double>& dts, const std::vector<double>& errors);

// dts must hold at least three values with successive ratio 2 (any order).
ConvergenceTable convergence_study(const Model& m, const State& s, Method method, double t_final,
                                   std::vector<double> dts);

} // namespace kvh
