#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmv/density.hpp"
#include "cmv/experiments.hpp"
#include "cmv/model.hpp"
#include "cmv/particle.hpp"

namespace cmv {

/// One configuration value. Numbers keep their raw spelling so 64-bit
/// seeds round-trip exactly.
struct ConfigValue {
    enum class Kind { number, boolean, string, number_list, string_list } kind = Kind::number;
    double num = 0.0;
    bool b = false;
    std::string str;
    std::vector<double> nums;
    std::vector<std::string> strs;
    std::string raw;

    std::uint64_t as_u64() const;
};

/// Parsed configuration: scalar keys flattened to dotted paths
/// ("solver.dt"), plus [[atom]] blocks kept in order.
struct Config {
    std::map<std::string, ConfigValue> kv;
    std::vector<std::map<std::string, ConfigValue>> atoms;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    double num(const std::string& key, double fallback) const;
    double num_req(const std::string& key) const;
    bool flag(const std::string& key, bool fallback) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> num_list(const std::string& key) const;
    std::vector<std::string> str_list(const std::string& key) const;
};

/// Parses the key/value format: [section] headers, [[atom]] table arrays,
/// dotted keys, numbers / booleans / quoted strings / homogeneous arrays,
/// '#' comments. Throws std::runtime_error with a line number on bad input.
Config parse_config(const std::string& text);
Config load_config_file(const std::string& path);

/// Applies one "dotted.path=value" override; last writer wins.
void apply_override(Config& cfg, const std::string& assignment);

/// Serializes with numbers at 17 significant digits so a round trip is
/// value-exact.
std::string serialize_config(const Config& cfg);

ModelSpec build_model_spec(const Config& cfg);
SolverParams build_solver_params(const Config& cfg);
ParticleRunParams build_particle_params(const Config& cfg);
ConvergenceParams build_convergence_params(const Config& cfg);
DominationParams build_domination_params(const Config& cfg);
RiskParams build_risk_params(const Config& cfg);
FpValidationParams build_fp_params(const Config& cfg);

} // namespace cmv
