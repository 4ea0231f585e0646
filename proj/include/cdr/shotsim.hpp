#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdr/cavitydyn.hpp"
#include "cdr/demod.hpp"
#include "cdr/types.hpp"

namespace cdr {

struct InitState {
    enum class Kind { g, e, thermal } kind = Kind::g;
    double p_e = 0.0;  // used by thermal only

    static InitState ground() { return {Kind::g, 0.0}; }
    static InitState excited() { return {Kind::e, 1.0}; }
    static InitState thermal(double p) { return {Kind::thermal, p}; }
};

/// One measurement window: conditional output fields, demodulation weights,
/// and the detection chain.
struct ReadoutSetup {
    ConditionalTrajectory traj;
    DemodEnvelope env;
    double eta = 1.0;
    std::optional<double> phi_demod;  // chosen by best_demod_phase when absent
    double q_variance_ratio = 1.0;    // Q noise variance relative to I (amplifier squeezing)
};

struct ShotConfig {
    std::size_t n_shots = 1;
    std::uint64_t seed = 0;
    InitState init;
    double t1 = std::numeric_limits<double>::infinity();
    double excitation_rate = 0.0;  // g -> e rate during the window (1/s)
    ReadoutSetup readout;
    std::size_t n_repeats = 1;  // back-to-back windows per shot
    unsigned threads = 1;
};

/// Record r = shot * n_repeats + repeat. I and Q are in units of the I noise
/// standard deviation. labels hold the true qubit state at the start of each
/// window; jump_times is NaN when no jump happened in that window.
struct ShotBatch {
    std::size_t n_shots = 0;
    std::size_t n_repeats = 1;
    std::vector<double> i_vals, q_vals;
    std::vector<QubitState> labels;
    std::vector<double> jump_times;

    std::size_t size() const noexcept { return i_vals.size(); }
    bool jumped(std::size_t r) const { return !std::isnan(jump_times[r]); }
};

struct GaussianFit {
    double mean = 0.0;
    double sigma = 0.0;
    std::size_t count = 0;
};

struct ReadoutMetrics {
    double snr_measured = 0.0;
    double sigma_i = 0.0;
    double separation_sigmas = 0.0;
    double discrimination_power = 0.0;
    double f_g = 0.0;
    double f_e = 0.0;
    double f_total = 0.0;
    std::optional<double> qndness;
    double threshold = 0.0;
    GaussianFit fit_g, fit_e;
    std::vector<std::string> warnings;
};

struct Histogram2D {
    std::vector<double> i_edges, q_edges;         // in fitted-sigma units
    std::vector<double> i_edges_lossless;         // i_edges / sqrt(eta)
    std::vector<std::size_t> counts;              // row-major [i_bin * q_bins + q_bin]
    std::vector<std::size_t> i_marginal, q_marginal;
    double sigma_i = 0.0;
    double sigma_q = 0.0;
    std::vector<std::string> warnings;
};

struct ChainResult {
    ShotBatch batch;
    ReadoutMetrics metrics;                       // f_* from post-selected pairs, qndness from all pairs
    std::vector<QubitState> assigned;             // threshold assignment per record
    std::vector<QubitState> latched;              // hysteresis-filtered trace per record
    double kept_fraction_g = 0.0;                 // share of pairs heralded in g / e by the strict cut
    double kept_fraction_e = 0.0;
    double minority_weight_g = 0.0;               // second-shot e fraction after heralding g
    double minority_weight_e = 0.0;               // second-shot g fraction after heralding e
};

/// Separation of the two noiseless outcomes in units of the I noise std.
/// Equals sqrt(2) times the demodulation SNR of the same window.
double separation_sigmas(const ReadoutSetup& readout);

ShotBatch simulate_shots(const ShotConfig& cfg);

/// Median and 1.4826 * MAD: insensitive to the tails that jumps add.
GaussianFit fit_gaussian(std::span<const double> values);

Histogram2D histogram(const ShotBatch& batch, std::size_t bins, double eta = 1.0);

/// Scores records against their true window-start labels. The discrimination
/// power uses only jump-free records; the fidelities use all of them.
ReadoutMetrics assign_and_score(const ShotBatch& batch, std::optional<double> threshold = std::nullopt);

ChainResult chain_measure(const ShotConfig& cfg, double latch_k = 2.0);

/// Shot CSV: shot_idx, repeat_idx, init_label, i_val, q_val, jump_time_s.
void write_shots_csv(std::ostream& os, const ShotBatch& batch);

}  // namespace cdr
