#include "cmv/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cmv {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw std::runtime_error("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

bool parse_number(const std::string& tok, double& out) {
    if (tok.empty()) return false;
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

ConfigValue parse_value(const std::string& raw0, int line) {
    std::string raw = trim(raw0);
    ConfigValue v;
    v.raw = raw;
    if (raw.empty()) fail(line, "missing value");
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::boolean;
        v.b = raw == "true";
        return v;
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
        v.kind = ConfigValue::Kind::string;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') fail(line, "unterminated array");
        std::string body = raw.substr(1, raw.size() - 2);
        std::vector<std::string> items;
        std::string cur;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) { items.push_back(trim(cur)); cur.clear(); }
            else cur += c;
        }
        if (!trim(cur).empty()) items.push_back(trim(cur));
        bool strings = !items.empty() && items.front().size() > 0 && items.front().front() == '"';
        if (strings) {
            v.kind = ConfigValue::Kind::string_list;
            for (const auto& it : items) {
                if (it.size() < 2 || it.front() != '"' || it.back() != '"') fail(line, "bad string array element: " + it);
                v.strs.push_back(it.substr(1, it.size() - 2));
            }
        } else {
            v.kind = ConfigValue::Kind::number_list;
            for (const auto& it : items) {
                double d;
                if (!parse_number(it, d)) fail(line, "bad numeric array element: " + it);
                v.nums.push_back(d);
            }
        }
        return v;
    }
    double d;
    if (!parse_number(raw, d)) fail(line, "unrecognized value: " + raw);
    v.kind = ConfigValue::Kind::number;
    v.num = d;
    return v;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

std::uint64_t ConfigValue::as_u64() const {
    std::uint64_t out = 0;
    auto res = std::from_chars(raw.data(), raw.data() + raw.size(), out);
    if (res.ec == std::errc() && res.ptr == raw.data() + raw.size()) return out;
    if (num >= 0.0 && num <= 9.007199254740992e15 && std::floor(num) == num)
        return static_cast<std::uint64_t>(num);
    throw std::runtime_error("value is not an unsigned integer: " + raw);
}

double Config::num(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second.kind != ConfigValue::Kind::number) throw std::runtime_error(key + " must be a number");
    return it->second.num;
}

double Config::num_req(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing required config key: " + key);
    if (it->second.kind != ConfigValue::Kind::number) throw std::runtime_error(key + " must be a number");
    return it->second.num;
}

bool Config::flag(const std::string& key, bool fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second.kind != ConfigValue::Kind::boolean) throw std::runtime_error(key + " must be true or false");
    return it->second.b;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second.kind != ConfigValue::Kind::string) throw std::runtime_error(key + " must be a string");
    return it->second.str;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return it->second.as_u64();
}

std::vector<double> Config::num_list(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    if (it->second.kind == ConfigValue::Kind::number) return {it->second.num};
    if (it->second.kind != ConfigValue::Kind::number_list) throw std::runtime_error(key + " must be a numeric array");
    return it->second.nums;
}

std::vector<std::string> Config::str_list(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    if (it->second.kind == ConfigValue::Kind::string) return {it->second.str};
    if (it->second.kind != ConfigValue::Kind::string_list) throw std::runtime_error(key + " must be a string array");
    return it->second.strs;
}

Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::map<std::string, ConfigValue>* atom = nullptr;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.rfind("[[", 0) == 0) {
            if (s.substr(s.size() - 2) != "]]") fail(ln, "bad table-array header");
            std::string name = trim(s.substr(2, s.size() - 4));
            if (name != "atom") fail(ln, "only [[atom]] table arrays are supported");
            cfg.atoms.emplace_back();
            atom = &cfg.atoms.back();
            section.clear();
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') fail(ln, "bad section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) fail(ln, "empty section name");
            atom = nullptr;
            continue;
        }
        std::size_t eq = std::string::npos;
        bool in_str = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_str = !in_str;
            if (s[i] == '=' && !in_str) { eq = i; break; }
        }
        if (eq == std::string::npos) fail(ln, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) fail(ln, "empty key");
        ConfigValue v = parse_value(s.substr(eq + 1), ln);
        if (atom)
            (*atom)[key] = std::move(v);
        else
            cfg.kv[section.empty() ? key : section + "." + key] = std::move(v);
    }
    return cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(Config& cfg, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::runtime_error("override must look like dotted.key=value: " + assignment);
    std::string key = trim(assignment.substr(0, eq));
    cfg.kv[key] = parse_value(assignment.substr(eq + 1), 0);
}

std::string serialize_config(const Config& cfg) {
    std::ostringstream os;
    for (const auto& [key, v] : cfg.kv) {
        os << key << " = ";
        switch (v.kind) {
            case ConfigValue::Kind::number: os << (v.raw.empty() ? fmt17(v.num) : v.raw); break;
            case ConfigValue::Kind::boolean: os << (v.b ? "true" : "false"); break;
            case ConfigValue::Kind::string: os << '"' << v.str << '"'; break;
            case ConfigValue::Kind::number_list: {
                os << '[';
                for (std::size_t i = 0; i < v.nums.size(); ++i) os << (i ? ", " : "") << fmt17(v.nums[i]);
                os << ']';
                break;
            }
            case ConfigValue::Kind::string_list: {
                os << '[';
                for (std::size_t i = 0; i < v.strs.size(); ++i) os << (i ? ", " : "") << '"' << v.strs[i] << '"';
                os << ']';
                break;
            }
        }
        os << '\n';
    }
    for (const auto& atom : cfg.atoms) {
        os << "\n[[atom]]\n";
        for (const auto& [key, v] : atom) {
            os << key << " = ";
            switch (v.kind) {
                case ConfigValue::Kind::number: os << (v.raw.empty() ? fmt17(v.num) : v.raw); break;
                case ConfigValue::Kind::boolean: os << (v.b ? "true" : "false"); break;
                case ConfigValue::Kind::string: os << '"' << v.str << '"'; break;
                case ConfigValue::Kind::number_list: {
                    os << '[';
                    for (std::size_t i = 0; i < v.nums.size(); ++i) os << (i ? ", " : "") << fmt17(v.nums[i]);
                    os << ']';
                    break;
                }
                case ConfigValue::Kind::string_list: {
                    os << '[';
                    for (std::size_t i = 0; i < v.strs.size(); ++i) os << (i ? ", " : "") << '"' << v.strs[i] << '"';
                    os << ']';
                    break;
                }
            }
            os << '\n';
        }
    }
    return os.str();
}

namespace {

// reads a value from the atom block when present, else the section default
const ConfigValue* pick(const std::map<std::string, ConfigValue>& atom, const std::string& akey,
                        const Config& cfg, const std::string& dkey) {
    auto it = atom.find(akey);
    if (it != atom.end()) return &it->second;
    auto jt = cfg.kv.find(dkey);
    if (jt != cfg.kv.end()) return &jt->second;
    return nullptr;
}

double pick_num(const std::map<std::string, ConfigValue>& atom, const std::string& akey,
                const Config& cfg, const std::string& dkey, double fallback) {
    const ConfigValue* v = pick(atom, akey, cfg, dkey);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::number) throw std::runtime_error(akey + " must be a number");
    return v->num;
}

std::string pick_str(const std::map<std::string, ConfigValue>& atom, const std::string& akey,
                     const Config& cfg, const std::string& dkey, const std::string& fallback) {
    const ConfigValue* v = pick(atom, akey, cfg, dkey);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::string) throw std::runtime_error(akey + " must be a string");
    return v->str;
}

std::vector<double> pick_list(const std::map<std::string, ConfigValue>& atom, const std::string& akey,
                              const Config& cfg, const std::string& dkey) {
    const ConfigValue* v = pick(atom, akey, cfg, dkey);
    if (!v) return {};
    if (v->kind != ConfigValue::Kind::number_list) throw std::runtime_error(akey + " must be a numeric array");
    return v->nums;
}

FeedbackWeight build_g(const std::map<std::string, ConfigValue>& atom, const Config& cfg, double horizon) {
    std::string kind = pick_str(atom, "g_kind", cfg, "coefficients.g.kind", "constant");
    double c = pick_num(atom, "g_c", cfg, "coefficients.g.c", 1.0);
    if (kind == "constant") return FeedbackWeight::constant(c);
    if (kind == "linear_decay") return FeedbackWeight::linear_decay(c, horizon);
    if (kind == "exp_decay")
        return FeedbackWeight::exp_decay(c, pick_num(atom, "g_lambda", cfg, "coefficients.g.lambda", 1.0));
    throw std::runtime_error("unknown feedback weight kind: " + kind);
}

TimeCoef build_time_coef(const std::map<std::string, ConfigValue>& atom, const Config& cfg,
                         const std::string& stem, const std::string& section, double fallback_c) {
    std::string kind = pick_str(atom, stem + "_kind", cfg, section + ".kind", "constant");
    double c = pick_num(atom, stem + "_c", cfg, section + ".c", fallback_c);
    if (kind == "constant") return TimeCoef::constant(c);
    if (kind == "affine")
        return TimeCoef::affine(c, pick_num(atom, stem + "_slope", cfg, section + ".slope", 0.0));
    throw std::runtime_error("unknown coefficient kind: " + kind);
}

InitialDensity build_initial(const std::map<std::string, ConfigValue>& atom, const Config& cfg) {
    std::string kind = pick_str(atom, "init_kind", cfg, "initial.kind", "uniform");
    if (kind == "uniform")
        return InitialDensity::uniform(pick_num(atom, "init_a", cfg, "initial.a", 0.0),
                                       pick_num(atom, "init_b", cfg, "initial.b", 2.0));
    if (kind == "power_ramp")
        return InitialDensity::power_ramp(pick_num(atom, "init_beta", cfg, "initial.beta", 1.0),
                                          pick_num(atom, "init_cap", cfg, "initial.cap", 1.0));
    if (kind == "table")
        return InitialDensity::table(pick_list(atom, "init_xs", cfg, "initial.xs"),
                                     pick_list(atom, "init_vs", cfg, "initial.vs"),
                                     pick_num(atom, "init_table_beta", cfg, "initial.table_beta", 0.0));
    throw std::runtime_error("unknown initial density kind: " + kind);
}

} // namespace

ModelSpec build_model_spec(const Config& cfg) {
    ModelSpec spec;
    spec.horizon = cfg.num("model.horizon", 1.0);
    spec.dist.k = static_cast<int>(cfg.num("model.k", 1));
    spec.dist.support_bound = cfg.num("model.support_bound", 100.0);
    if (cfg.atoms.empty()) throw std::runtime_error("config defines no [[atom]] blocks");

    for (const auto& a : cfg.atoms) {
        TypeAtom atom;
        auto ui = a.find("u");
        auto vi = a.find("v");
        auto pi = a.find("p");
        if (ui == a.end() || vi == a.end() || pi == a.end())
            throw std::runtime_error("each [[atom]] needs u, v and p");
        atom.u = ui->second.kind == ConfigValue::Kind::number ? std::vector<double>{ui->second.num} : ui->second.nums;
        atom.v = vi->second.kind == ConfigValue::Kind::number ? std::vector<double>{vi->second.num} : vi->second.nums;
        atom.p = pi->second.num;
        auto li = a.find("label");
        if (li != a.end()) atom.label = li->second.str;
        spec.dist.atoms.push_back(std::move(atom));

        spec.coef.g.push_back(build_g(a, cfg, spec.horizon));
        spec.coef.drift.push_back(build_time_coef(a, cfg, "drift", "coefficients.drift", 0.0));
        spec.coef.vol.push_back(build_time_coef(a, cfg, "sigma", "coefficients.sigma", 1.0));
        spec.initial.push_back(build_initial(a, cfg));
    }

    std::string loss = cfg.str("coefficients.loss", "identity");
    if (loss == "identity") spec.coef.loss = LossTransform::identity();
    else if (loss == "log1p") spec.coef.loss = LossTransform::log1p_scaled(cfg.num("coefficients.loss_scale", 1.0));
    else if (loss == "capped_linear")
        spec.coef.loss = LossTransform::capped_linear(cfg.num("coefficients.loss_scale", 1.0),
                                                      cfg.num("coefficients.loss_cap", 1.0));
    else throw std::runtime_error("unknown loss transform: " + loss);

    spec.coef.rho = cfg.num("coefficients.rho", 0.0);
    spec.coef.vol_lo = cfg.num("coefficients.sigma_lo", 0.1);
    spec.coef.vol_hi = cfg.num("coefficients.sigma_hi", 10.0);
    spec.coef.hook.c = cfg.num("coefficients.hook_c", 0.0);
    return spec;
}

SolverParams build_solver_params(const Config& cfg) {
    SolverParams p;
    p.grid = Grid::make(cfg.num("solver.h", 4e-3), cfg.num("solver.x_max", 6.0));
    p.dt = cfg.num("solver.dt", 1e-3);
    std::string kernel = cfg.str("solver.kernel", "truncate");
    if (kernel == "truncate") p.kernel = KernelMode::truncate;
    else if (kernel == "images") p.kernel = KernelMode::images;
    else throw std::runtime_error("unknown kernel mode: " + kernel);
    p.cascade.tol = cfg.num("solver.cascade_tol", 1e-12);
    p.cascade.m_max = static_cast<int>(cfg.num("solver.cascade_max_rounds", 0));
    p.cascade.jump_ratio = cfg.num("solver.jump_ratio", 50.0);
    p.cascade.jump_mass = cfg.num("solver.jump_mass", 0.05);
    std::string mode = cfg.str("solver.mode", "continue");
    if (mode == "strict") p.strict = true;
    else if (mode != "continue") throw std::runtime_error("solver.mode must be continue or strict");
    p.snapshot_times = cfg.num_list("solver.snapshot_times");
    p.seed = cfg.u64("run.seed", 1);
    p.noise = cfg.num("coefficients.rho", 0.0) > 0.0 ? NoiseMode::seeded : NoiseMode::none;
    return p;
}

ParticleRunParams build_particle_params(const Config& cfg) {
    ParticleRunParams p;
    p.n = static_cast<int>(cfg.num("particle.n", 1000));
    p.dt = cfg.num("particle.dt", 1e-3);
    p.seed = cfg.u64("run.seed", 1);
    p.bridge = cfg.flag("particle.bridge", true);
    std::string mode = cfg.str("particle.assignment", "iid");
    if (mode == "iid") p.mode = AssignmentMode::iid;
    else if (mode == "proportional") p.mode = AssignmentMode::proportional;
    else throw std::runtime_error("particle.assignment must be iid or proportional");
    p.budget_steps = cfg.u64("particle.budget_steps", 4'000'000'000ULL);
    return p;
}

ConvergenceParams build_convergence_params(const Config& cfg) {
    ConvergenceParams p;
    auto ladder = cfg.num_list("study.n_ladder");
    for (double n : ladder) p.n_ladder.push_back(static_cast<int>(n));
    if (p.n_ladder.empty()) p.n_ladder = {500, 2000, 8000};
    p.seeds = static_cast<int>(cfg.num("study.seeds", 20));
    p.master_seed = cfg.u64("run.seed", 1);
    p.particle_dt = cfg.num("particle.dt", 2e-3);
    p.bridge = cfg.flag("particle.bridge", true);
    p.mode = build_particle_params(cfg).mode;
    p.solver = build_solver_params(cfg);
    p.output_points = static_cast<int>(cfg.num("study.output_points", 50));
    p.threshold = cfg.num("study.threshold", 0.05);
    p.jobs = static_cast<int>(cfg.num("run.jobs", 1));
    return p;
}

DominationParams build_domination_params(const Config& cfg) {
    DominationParams p;
    p.eps_ladder = cfg.num_list("study.eps_ladder");
    if (p.eps_ladder.empty()) p.eps_ladder = {0.1, 0.05, 0.025};
    p.solver = build_solver_params(cfg);
    p.output_points = static_cast<int>(cfg.num("study.output_points", 50));
    p.envelope_threshold = cfg.num("study.envelope_threshold", 0.05);
    p.jobs = static_cast<int>(cfg.num("run.jobs", 1));
    return p;
}

RiskParams build_risk_params(const Config& cfg) {
    RiskParams p;
    p.scenarios = static_cast<int>(cfg.num("study.scenarios", 200));
    p.q = cfg.num("study.q", 0.9);
    p.window_frac = cfg.num("study.window", 0.25);
    auto alphas = cfg.num_list("study.alpha");
    if (!alphas.empty()) p.alphas = alphas;
    auto labels = cfg.str_list("study.core_labels");
    if (!labels.empty()) p.core_labels = labels;
    p.solver = build_solver_params(cfg);
    p.master_seed = cfg.u64("run.seed", 1);
    p.jobs = static_cast<int>(cfg.num("run.jobs", 1));
    return p;
}

FpValidationParams build_fp_params(const Config& cfg) {
    FpValidationParams p;
    p.h = cfg.num("study.fp_h", 2e-3);
    p.dt = cfg.num("study.fp_dt", 1e-4);
    p.x_max = cfg.num("study.fp_x_max", 3.5);
    p.x0 = cfg.num("study.fp_x0", 1.0);
    p.window = cfg.num("study.fp_window", 8e-3);
    p.sigma = cfg.num("study.fp_sigma", 1.0);
    auto times = cfg.num_list("study.fp_times");
    if (!times.empty()) p.times = times;
    std::string kernel = cfg.str("study.fp_kernel", "images");
    p.kernel = kernel == "truncate" ? KernelMode::truncate : KernelMode::images;
    return p;
}

} // namespace cmv
