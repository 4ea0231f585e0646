#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdr/sysmodel.hpp"

namespace cdr {

enum class OutputFormat { csv, json };

/// Device block of a config file; frequencies in Hz (ordinary, not angular), times in s.
struct SystemConfig {
    double f_q_hz = 4.982e9;
    double f_c_hz = 7.995e9;
    double f_f_hz = 6.339e9;
    double kappa_hz = 0.0;     // required
    double alpha_hz = 221e6;
    double chi_qc_hz = 1e5;
    double chi_qf_hz = 2.5e6;
    double e_j_hz = 25e9;
    double t1_s = 90e-6;
    double t2_s = 30e-6;
    double t_filter_s = 19e-6;
    double eta = 0.6;
};

inline const std::vector<std::string> kExperimentNames = {
    "snr-sweep",         "histogram",         "qnd-chain",        "spectator-echo",
    "efficiency-calib",  "cancellation-tune", "depletion-design", "frame-check",
};

struct ExperimentConfig {
    SystemConfig system;
    std::string experiment;
    nlohmann::json params = nlohmann::json::object();  // experiment block minus "name"
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::csv;
    std::uint64_t seed = 0;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the field.
/// A run manifest is accepted too; its recorded config is used.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the config. Experiment parameters are taken from
/// `effective_params` when given (defaults filled in by the run).
nlohmann::json to_json(const ExperimentConfig& cfg, const nlohmann::json* effective_params = nullptr);

/// Device parameters in rad/s. Participations are fitted from alpha and the chis.
SystemParams to_system_params(const SystemConfig& sys, std::vector<std::string>* warnings = nullptr);

/// Typed access to experiment parameters. Every lookup records the value used
/// (given or default) so the manifest holds the complete effective config.
class ParamReader {
public:
    explicit ParamReader(nlohmann::json params, std::string prefix = "experiment");

    double number(const std::string& key, double def);
    double positive(const std::string& key, double def);
    std::optional<double> optional_positive(const std::string& key);
    std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t min_value);
    bool flag(const std::string& key, bool def);
    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed);
    std::vector<double> numbers(const std::string& key, const std::vector<double>& def);

    /// Throws ConfigError for keys that were never read.
    void finish() const;
    const nlohmann::json& effective() const noexcept { return effective_; }

private:
    const nlohmann::json* find(const std::string& key);
    std::string field(const std::string& key) const { return prefix_ + "." + key; }

    nlohmann::json params_;
    nlohmann::json effective_ = nlohmann::json::object();
    std::string prefix_;
};

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& s);

}  // namespace cdr
