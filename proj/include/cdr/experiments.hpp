#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdr/config.hpp"
#include "cdr/table.hpp"

namespace cdr {

struct RunOutput {
    std::vector<Table> tables;
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json effective_params = nlohmann::json::object();
    std::vector<std::string> warnings;
};

/// Runs the named experiment. Results do not depend on `threads`.
RunOutput run_experiment(const ExperimentConfig& cfg, unsigned threads);

/// Writes one file per table, summary.json and manifest.json into cfg.out_dir.
void write_run(const ExperimentConfig& cfg, const RunOutput& out, double wall_time_s, unsigned threads);

/// Hex SHA-256 of the canonical (system, experiment, seed) part of the effective config.
std::string config_hash(const ExperimentConfig& cfg, const nlohmann::json& effective_params);
std::string sha256_hex(const std::string& data);

struct CompareReport {
    std::vector<double> tau;
    std::vector<double> snr_a, snr_b, ratio;
    std::vector<double> crossovers;  // tau where ratio crosses 1 (linear interpolation)
    double a_dominates_until = 0.0;  // end of the leading run of tau with ratio > 1; 0 if none
    double ratio_first = 0.0;
    double ratio_last = 0.0;
};

/// Ratio of the "snr" columns of two snr-sweep runs. Grid mismatch is a ShapeError.
CompareReport compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);
void write_compare(const std::filesystem::path& dir, const CompareReport& report, OutputFormat format);
std::string format_compare(const CompareReport& report);

}  // namespace cdr
