#include "cdr/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "cdr/errors.hpp"
#include "cdr/types.hpp"

namespace cdr {

namespace {

using nlohmann::json;

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
}

struct SystemField {
    const char* name;
    double SystemConfig::*member;
    bool required;
};

constexpr SystemField kSystemFields[] = {
    {"f_q_hz", &SystemConfig::f_q_hz, false},         {"f_c_hz", &SystemConfig::f_c_hz, false},
    {"f_f_hz", &SystemConfig::f_f_hz, false},         {"kappa_hz", &SystemConfig::kappa_hz, true},
    {"alpha_hz", &SystemConfig::alpha_hz, false},     {"chi_qc_hz", &SystemConfig::chi_qc_hz, false},
    {"chi_qf_hz", &SystemConfig::chi_qf_hz, false},   {"e_j_hz", &SystemConfig::e_j_hz, false},
    {"t1_s", &SystemConfig::t1_s, false},             {"t2_s", &SystemConfig::t2_s, false},
    {"t_filter_s", &SystemConfig::t_filter_s, false}, {"eta", &SystemConfig::eta, false},
};

SystemConfig parse_system(const json& j) {
    if (!j.is_object()) throw ConfigError("system", "expected an object");
    SystemConfig sys;
    std::set<std::string> known;
    for (const auto& f : kSystemFields) {
        known.insert(f.name);
        const std::string field = std::string("system.") + f.name;
        if (j.contains(f.name)) {
            sys.*f.member = get_number(j.at(f.name), field);
        } else if (f.required) {
            throw ConfigError(field, "required field is missing");
        }
        if (!(sys.*f.member > 0.0)) throw ConfigError(field, "must be positive");
    }
    reject_unknown(j, known, "system");
    if (sys.eta > 1.0) throw ConfigError("system.eta", "must lie in (0, 1]");
    if (sys.t2_s > 2.0 * sys.t1_s) throw ConfigError("system.t2_s", "exceeds 2 * t1_s");
    return sys;
}

}  // namespace

std::string to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("output.format", "must be csv or json, got '" + s + "'");
}

ExperimentConfig parse_config(const json& root) {
    if (!root.is_object()) throw ConfigError("<root>", "expected a JSON object");
    // A manifest carries the effective config it ran with.
    if (root.contains("tool") && root.contains("config")) return parse_config(root.at("config"));

    reject_unknown(root, {"system", "experiment", "output", "seed"}, "");
    ExperimentConfig cfg;
    if (!root.contains("system")) throw ConfigError("system", "required block is missing");
    cfg.system = parse_system(root.at("system"));

    if (!root.contains("experiment")) throw ConfigError("experiment", "required block is missing");
    const json& ex = root.at("experiment");
    if (!ex.is_object()) throw ConfigError("experiment", "expected an object");
    if (!ex.contains("name") || !ex.at("name").is_string()) {
        throw ConfigError("experiment.name", "required string is missing");
    }
    cfg.experiment = ex.at("name").get<std::string>();
    bool known = false;
    for (const auto& n : kExperimentNames) known = known || n == cfg.experiment;
    if (!known) throw ConfigError("experiment.name", "unknown experiment '" + cfg.experiment + "'");
    cfg.params = ex;
    cfg.params.erase("name");

    if (root.contains("output")) {
        const json& out = root.at("output");
        if (!out.is_object()) throw ConfigError("output", "expected an object");
        reject_unknown(out, {"directory", "format"}, "output");
        if (out.contains("directory")) {
            if (!out.at("directory").is_string()) throw ConfigError("output.directory", "expected a string");
            cfg.out_dir = out.at("directory").get<std::string>();
        }
        if (out.contains("format")) {
            if (!out.at("format").is_string()) throw ConfigError("output.format", "expected a string");
            cfg.format = parse_format(out.at("format").get<std::string>());
        }
    }
    if (root.contains("seed")) {
        const json& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("--config", "cannot open '" + path.string() + "'");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg, const json* effective_params) {
    json sys = json::object();
    for (const auto& f : kSystemFields) sys[f.name] = cfg.system.*f.member;
    json ex = effective_params ? *effective_params : cfg.params;
    ex["name"] = cfg.experiment;
    return {
        {"system", sys},
        {"experiment", ex},
        {"output", {{"directory", cfg.out_dir}, {"format", to_string(cfg.format)}}},
        {"seed", cfg.seed},
    };
}

SystemParams to_system_params(const SystemConfig& sys, std::vector<std::string>* warnings) {
    SystemParams p;
    p.e_j = hz_to_rad(sys.e_j_hz);
    Participations fit;
    try {
        fit = fit_participations(hz_to_rad(sys.alpha_hz), hz_to_rad(sys.chi_qc_hz), hz_to_rad(sys.chi_qf_hz), p.e_j);
    } catch (const Error& e) {
        throw ConfigError("system", std::string("participations cannot be fitted: ") + e.what());
    }
    p.phi_q = fit.phi_q;
    p.phi_c = fit.phi_c;
    p.phi_f = fit.phi_f;
    p.omega_q = hz_to_rad(sys.f_q_hz);
    p.omega_c = hz_to_rad(sys.f_c_hz);
    p.omega_f = hz_to_rad(sys.f_f_hz);
    p.kappa = hz_to_rad(sys.kappa_hz);
    p.kappa_filter_decay = 1.0 / sys.t_filter_s;
    p.gamma1 = 1.0 / sys.t1_s;
    p.gamma_phi = 1.0 / sys.t2_s - 0.5 / sys.t1_s;
    p.eta = sys.eta;
    try {
        auto w = validate(p);
        // validate() repeats the participation advisories of the fit
        if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
    } catch (const ValidationError& e) {
        throw ConfigError("system", e.what());
    }
    return p;
}

ParamReader::ParamReader(json params, std::string prefix) : params_(std::move(params)), prefix_(std::move(prefix)) {}

const json* ParamReader::find(const std::string& key) {
    auto it = params_.find(key);
    return it == params_.end() ? nullptr : &*it;
}

double ParamReader::number(const std::string& key, double def) {
    const json* j = find(key);
    const double v = j ? get_number(*j, field(key)) : def;
    effective_[key] = v;
    return v;
}

double ParamReader::positive(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
}

std::optional<double> ParamReader::optional_positive(const std::string& key) {
    const json* j = find(key);
    if (!j || j->is_null()) {
        effective_[key] = nullptr;
        return std::nullopt;
    }
    return positive(key, 0.0);
}

std::int64_t ParamReader::integer(const std::string& key, std::int64_t def, std::int64_t min_value) {
    const json* j = find(key);
    std::int64_t v = def;
    if (j) {
        if (!j->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        v = j->get<std::int64_t>();
    }
    if (v < min_value) throw ConfigError(field(key), "must be at least " + std::to_string(min_value));
    effective_[key] = v;
    return v;
}

bool ParamReader::flag(const std::string& key, bool def) {
    const json* j = find(key);
    bool v = def;
    if (j) {
        if (!j->is_boolean()) throw ConfigError(field(key), "expected true or false");
        v = j->get<bool>();
    }
    effective_[key] = v;
    return v;
}

std::string ParamReader::choice(const std::string& key, const std::string& def,
                                const std::vector<std::string>& allowed) {
    const json* j = find(key);
    std::string v = def;
    if (j) {
        if (!j->is_string()) throw ConfigError(field(key), "expected a string");
        v = j->get<std::string>();
    }
    bool ok = false;
    std::string list;
    for (const auto& a : allowed) {
        ok = ok || a == v;
        list += (list.empty() ? "" : "|") + a;
    }
    if (!ok) throw ConfigError(field(key), "must be one of " + list + ", got '" + v + "'");
    effective_[key] = v;
    return v;
}

std::vector<double> ParamReader::numbers(const std::string& key, const std::vector<double>& def) {
    const json* j = find(key);
    std::vector<double> v = def;
    if (j) {
        if (!j->is_array()) throw ConfigError(field(key), "expected an array of numbers");
        v.clear();
        for (std::size_t k = 0; k < j->size(); ++k) {
            v.push_back(get_number((*j)[k], field(key) + "[" + std::to_string(k) + "]"));
        }
    }
    effective_[key] = v;
    return v;
}

void ParamReader::finish() const {
    for (const auto& [key, _] : params_.items()) {
        if (!effective_.contains(key)) throw ConfigError(field(key), "unknown parameter");
    }
}

}  // namespace cdr
