// cdreadout: runs readout experiments from JSON configs and compares SNR sweeps.
//
//   cdreadout run --config configs/fig2b.json [--seed N] [--out DIR] [--threads N] [--format csv|json]
//   cdreadout compare RUN_A RUN_B [--out DIR]
//
// Exit codes: 0 success, 1 config error, 2 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <thread>

#include "cdr/config.hpp"
#include "cdr/errors.hpp"
#include "cdr/experiments.hpp"

namespace {

constexpr int kConfigExit = 1;
constexpr int kNumericExit = 2;

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

int do_run(const RunArgs& a) {
    auto cfg = cdr::load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (a.out) cfg.out_dir = *a.out;
    if (a.format) cfg.format = cdr::parse_format(*a.format);

    const auto t0 = std::chrono::steady_clock::now();
    const auto out = cdr::run_experiment(cfg, a.threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    cdr::write_run(cfg, out, wall, a.threads);

    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << cfg.experiment << ": wrote " << out.tables.size() << " table(s) to " << cfg.out_dir << " in "
              << wall << " s\n";
    return 0;
}

int do_compare(const std::string& a, const std::string& b, const std::optional<std::string>& out) {
    const auto report = cdr::compare_runs(a, b);
    if (out) cdr::write_compare(*out, report, cdr::OutputFormat::csv);
    std::cout << cdr::format_compare(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional-displacement readout simulator"};
    app.set_version_flag("--version", std::string(CDR_VERSION));
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
    run_cmd->add_option("--config", run.config, "Experiment config (JSON) or a previous run's manifest")->required();
    run_cmd->add_option("--seed", run.seed, "Override the config seed");
    run_cmd->add_option("--out", run.out, "Override the output directory");
    run_cmd->add_option("--threads", run.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--format", run.format, "Table format")->check(CLI::IsMember({"csv", "json"}));

    std::string dir_a, dir_b;
    std::optional<std::string> cmp_out;
    auto* cmp_cmd = app.add_subcommand("compare", "Ratio of the SNR curves of two snr-sweep runs (A / B)");
    cmp_cmd->add_option("run_a", dir_a, "Output directory of run A")->required();
    cmp_cmd->add_option("run_b", dir_b, "Output directory of run B")->required();
    cmp_cmd->add_option("--out", cmp_out, "Write compare.csv and compare_summary.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigExit;
    }

    try {
        if (*run_cmd) return do_run(run);
        return do_compare(dir_a, dir_b, cmp_out);
    } catch (const cdr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigExit;
    } catch (const cdr::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericExit;
    }
}
