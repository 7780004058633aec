#pragma once

#include "kvh/config.hpp"

#include <filesystem>
#include <iosfwd>

namespace kvh {

// CSV header: t,energy,mass,min_D,purity,<casimir columns>,<residual columns>. Every value is
// printed with 17 significant digits; absent entries are written as nan.
std::string csv_header(const DiagnosticsRecord& r);
std::string csv_row(const DiagnosticsRecord& r);
void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series);

// Exit codes shared by the commands.
inline constexpr int exit_ok = 0, exit_check_failed = 1, exit_run_aborted = 3;

// All paths in the config are taken relative to out_dir.
int run_command(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& log);
int check_command(const RunConfig& c, std::ostream& log);

enum class Reference { Classical, Quantum, MeanField, Ehrenfest };
Reference parse_reference(const std::string& name);

struct ReductionReport {
    std::vector<double> t;
    std::vector<double> d_divergence;   // relative L² distance of D
    std::vector<double> rho_divergence; // max |ρ̂_q − ρ̂_q,ref|, NaN for the classical reference
    std::string aborted;                // reason, when either run stopped early
    double max_d() const;
    double max_rho() const;
};
// Runs the closure model alongside the named reduction from the same initial data. Samples up
// to the first abort are kept.
ReductionReport reduce(const RunConfig& c, Reference against);
int reduce_command(const RunConfig& c, Reference against, const std::filesystem::path& out_dir, std::ostream& log);

int convergence_command(const RunConfig& c, const std::vector<double>& dts, const std::filesystem::path& out_dir,
                        std::ostream& log);

} // namespace kvh
