#include "cmv/runio.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cmv {

using nlohmann::json;

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string meanfield_loss_csv(const MfRunResult& run) {
    std::ostringstream os;
    os << "t";
    for (int l = 0; l < run.k(); ++l) os << ",L_" << (l + 1);
    os << ",jump_flag,rounds\n";
    for (std::size_t m = 0; m < run.times.size(); ++m) {
        os << fmt_g17(run.times[m]);
        for (int l = 0; l < run.k(); ++l) os << ',' << fmt_g17(run.loss[m][l]);
        os << ',' << static_cast<int>(run.jump_flag[m]) << ',' << run.rounds[m] << '\n';
    }
    return os.str();
}

std::string particle_loss_csv(const ParticleRunResult& run) {
    std::ostringstream os;
    int k = run.loss.empty() ? 0 : static_cast<int>(run.loss.front().size());
    os << "t";
    for (int l = 0; l < k; ++l) os << ",L_" << (l + 1);
    os << ",defaults_cum,cascade_rounds\n";
    for (std::size_t m = 0; m < run.times.size(); ++m) {
        os << fmt_g17(run.times[m]);
        for (int l = 0; l < k; ++l) os << ',' << fmt_g17(run.loss[m][l]);
        os << ',' << run.defaults_cum[m] << ',' << run.cascade_rounds[m] << '\n';
    }
    return os.str();
}

std::string default_list_csv(const ParticleRunResult& run) {
    std::ostringstream os;
    os << "i,atom,tau\n";
    for (const auto& d : run.defaults)
        os << d.index << ',' << d.atom << ',' << fmt_g17(d.tau) << '\n';
    return os.str();
}

std::string snapshot_csv(const Grid& grid, const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << "x";
    for (std::size_t a = 0; a < rows.size(); ++a) os << ",atom_" << a;
    os << '\n';
    for (int j = 0; j < grid.cells; ++j) {
        os << fmt_g17(grid.cell_mid(j));
        for (const auto& row : rows) os << ',' << fmt_g17(row[j]);
        os << '\n';
    }
    return os.str();
}

std::string particle_summary_json(const ParticleRunResult& run, const ParticleRunParams& params) {
    json j;
    j["seed"] = params.seed;
    j["n"] = params.n;
    j["dt"] = params.dt;
    j["bridge"] = params.bridge;
    j["assignment"] = params.mode == AssignmentMode::iid ? "iid" : "proportional";
    j["budget_steps"] = params.budget_steps;
    j["budget_exceeded"] = run.budget_exceeded;
    j["completed_horizon"] = run.completed_horizon;
    j["defaults_total"] = run.defaults.size();
    return j.dump(2) + "\n";
}

std::string validation_report_json(const ValidationReport& rep) {
    json j;
    j["valid"] = rep.ok();
    j["violations"] = json::array();
    for (const auto& v : rep.violations)
        j["violations"].push_back({{"atom", v.atom}, {"what", v.what}, {"value", v.value}});
    return j.dump(2) + "\n";
}

std::string smallness_report_json(const SmallnessReport& rep) {
    json j;
    j["bound"] = rep.bound;
    j["passes"] = rep.passes;
    j["per_atom_margin"] = rep.per_atom_margin;
    return j.dump(2) + "\n";
}

std::string meanfield_summary_json(const MfRunResult& run, const SolverParams& params) {
    json j;
    j["grid_h"] = params.grid.h;
    j["grid_x_max"] = params.grid.x_max();
    j["dt"] = params.dt;
    j["kernel"] = params.kernel == KernelMode::images ? "images" : "truncate";
    j["cascade_tol"] = params.cascade.tol;
    j["jump_ratio_threshold"] = params.cascade.jump_ratio;
    j["jump_mass_threshold"] = params.cascade.jump_mass;
    j["t_star"] = run.t_star ? json(*run.t_star) : json(nullptr);
    j["halted"] = run.halted;
    j["sup_slack"] = run.sup_slack;
    j["mass_residual"] = run.mass_residual;
    j["feedback_residual"] = run.feedback_residual;
    j["jumps"] = json::array();
    for (const auto& rec : run.jump_log)
        j["jumps"].push_back({{"t", rec.t},
                              {"dl", rec.dl},
                              {"rounds", rec.rounds},
                              {"amplification", rec.amplification},
                              {"flagged", rec.flagged},
                              {"exploded", rec.exploded}});
    return j.dump(2) + "\n";
}

std::string convergence_report_json(const ConvergenceReport& rep) {
    json j;
    j["n_ladder"] = rep.n_ladder;
    j["median_err"] = rep.median_err;
    j["per_seed_err"] = rep.per_seed_err;
    j["excluded_times"] = rep.excluded_times;
    j["valid"] = rep.valid;
    j["pass"] = rep.pass;
    j["verdict"] = rep.verdict;
    return j.dump(2) + "\n";
}

std::string convergence_report_csv(const ConvergenceReport& rep) {
    std::ostringstream os;
    os << "n,median_err\n";
    for (std::size_t i = 0; i < rep.n_ladder.size(); ++i)
        os << rep.n_ladder[i] << ',' << fmt_g17(rep.median_err[i]) << '\n';
    return os.str();
}

std::string domination_report_json(const DominationReport& rep) {
    json j;
    j["eps_ladder"] = rep.eps_ladder;
    j["envelope"] = rep.envelope;
    j["t0"] = rep.t0;
    j["domination_ok"] = rep.domination_ok;
    j["worst_gap"] = rep.worst_gap;
    j["env_monotone"] = rep.env_monotone;
    j["pass"] = rep.pass;
    j["verdict"] = rep.verdict;
    if (!rep.domination_ok) {
        j["first_violation"] = {{"eps", rep.first_violation_eps},
                                {"t", rep.first_violation_t},
                                {"atom", rep.first_violation_atom}};
    }
    return j.dump(2) + "\n";
}

std::string domination_report_csv(const DominationReport& rep) {
    std::ostringstream os;
    os << "eps,envelope\n";
    for (std::size_t i = 0; i < rep.eps_ladder.size(); ++i)
        os << fmt_g17(rep.eps_ladder[i]) << ',' << fmt_g17(rep.envelope[i]) << '\n';
    return os.str();
}

std::string crosscheck_report_json(const CrosscheckReport& rep) {
    json j;
    j["applicable"] = rep.applicable;
    j["t_jump"] = rep.t_jump;
    j["cascade_jump_mass"] = rep.cascade_jump_mass;
    j["bisection_point"] = rep.bisection_point == std::numeric_limits<double>::infinity()
                               ? json("inf")
                               : json(rep.bisection_point);
    j["direct_jump_mass"] = rep.direct_jump_mass;
    j["gap"] = rep.gap;
    j["tolerance"] = rep.tolerance;
    j["pass"] = rep.pass;
    j["verdict"] = rep.verdict;
    return j.dump(2) + "\n";
}

std::string risk_report_json(const RiskReport& rep) {
    json j;
    j["scenarios"] = rep.scenarios;
    j["q"] = rep.q;
    j["window_end"] = rep.window_end;
    j["conditional_size"] = rep.conditional_size;
    j["ok"] = rep.ok;
    j["rows"] = json::array();
    for (const auto& r : rep.rows)
        j["rows"].push_back({{"alpha", r.alpha},
                             {"var_uncond", r.var_uncond},
                             {"es_uncond", r.es_uncond},
                             {"var_cond", r.var_cond},
                             {"es_cond", r.es_cond}});
    return j.dump(2) + "\n";
}

std::string risk_report_csv(const RiskReport& rep) {
    std::ostringstream os;
    os << "scenario,core_increment,periphery_loss\n";
    for (std::size_t s = 0; s < rep.core_increment.size(); ++s)
        os << s << ',' << fmt_g17(rep.core_increment[s]) << ',' << fmt_g17(rep.periphery_loss[s]) << '\n';
    return os.str();
}

std::string fp_report_json(const FpValidationReport& rep) {
    json j;
    j["times"] = rep.times;
    j["absorbed"] = rep.absorbed;
    j["exact"] = rep.exact;
    j["max_abs_err"] = rep.max_abs_err;
    return j.dump(2) + "\n";
}

std::string fp_report_csv(const FpValidationReport& rep) {
    std::ostringstream os;
    os << "t,absorbed,exact,err\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        os << fmt_g17(rep.times[i]) << ',' << fmt_g17(rep.absorbed[i]) << ','
           << fmt_g17(rep.exact[i]) << ',' << fmt_g17(rep.absorbed[i] - rep.exact[i]) << '\n';
    return os.str();
}

std::string manifest_json(const RunManifest& m) {
    json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["subcommand"] = m.subcommand;
    j["config_path"] = m.config_path;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["jobs"] = m.jobs;
    j["artifacts"] = m.artifacts;
    j["wall_time_s"] = m.wall_time_s;
    return j.dump(2) + "\n";
}

std::string make_run_dir(const std::string& root, const std::string& subcommand,
                         const std::string& config_hash) {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    std::string base = root + "/" + stamp + "-" + config_hash.substr(0, 8) + "-" + subcommand;
    std::string dir = base;
    int suffix = 1;
    while (std::filesystem::exists(dir)) dir = base + "-" + std::to_string(suffix++);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace cmv
