#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmv/density.hpp"
#include "cmv/experiments.hpp"
#include "cmv/model.hpp"
#include "cmv/particle.hpp"

namespace cmv {

/// %.17g - enough digits for an exact double round trip.
std::string fmt_g17(double x);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// FNV-1a 64-bit over raw bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Loss series CSV: t,L_1..L_k,jump_flag,rounds
std::string meanfield_loss_csv(const MfRunResult& run);
/// Loss series CSV: t,L_1..L_k,defaults_cum,cascade_rounds
std::string particle_loss_csv(const ParticleRunResult& run);
/// Default-time list CSV: i,atom,tau
std::string default_list_csv(const ParticleRunResult& run);
/// Density snapshot CSV matrix: x,atom_0,...
std::string snapshot_csv(const Grid& grid, const std::vector<std::vector<double>>& rows);

std::string particle_summary_json(const ParticleRunResult& run, const ParticleRunParams& params);
std::string validation_report_json(const ValidationReport& rep);
std::string smallness_report_json(const SmallnessReport& rep);
std::string meanfield_summary_json(const MfRunResult& run, const SolverParams& params);
std::string convergence_report_json(const ConvergenceReport& rep);
std::string convergence_report_csv(const ConvergenceReport& rep);
std::string domination_report_json(const DominationReport& rep);
std::string domination_report_csv(const DominationReport& rep);
std::string crosscheck_report_json(const CrosscheckReport& rep);
std::string risk_report_json(const RiskReport& rep);
std::string risk_report_csv(const RiskReport& rep);
std::string fp_report_json(const FpValidationReport& rep);
std::string fp_report_csv(const FpValidationReport& rep);

struct RunManifest {
    std::string tool = "cmvsim";
    std::string version = "0.1.0";
    std::string subcommand;
    std::string config_path;
    std::string config_hash;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::vector<std::string> artifacts;
    double wall_time_s = 0.0;
};

std::string manifest_json(const RunManifest& m);

/// Creates <root>/<UTC stamp>-<hash8>-<subcommand>/ and returns the path.
std::string make_run_dir(const std::string& root, const std::string& subcommand,
                         const std::string& config_hash);

} // namespace cmv
