#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdr/cavitydyn.hpp"
#include "cdr/types.hpp"

namespace cdr {

struct DephasingResult {
    double gamma_m = 0.0;  // coherence decays as exp(-gamma_m)
    double snr_ref = 0.0;  // optimal-envelope SNR of the same trajectory at the supplied efficiency
    std::optional<double> eta_inferred;
};

/// gamma_m = (kappa/2) int |alpha_g - alpha_e|^2 dt. With eta given, snr_ref uses
/// it and eta_inferred = snr_ref^2 / (4 gamma_m).
DephasingResult measurement_dephasing(const ConditionalTrajectory& traj, std::optional<double> eta = std::nullopt);

/// (drive amplitude, measured quantity) pair of a calibration sweep.
struct EfficiencyPoint {
    double amplitude = 0.0;
    double value = 0.0;
};

struct EfficiencyFit {
    double eta = 0.0;
    double sigma_d = 0.0;    // Gaussian width of the Ramsey contrast in amplitude units
    double slope = 0.0;      // SNR per unit amplitude
    double r2_contrast = 0.0;
    double r2_snr = 0.0;
};

/// Fits contrast = c0 exp(-A^2 / (2 sigma_d^2)) and SNR = a A, returns eta = sigma_d^2 a^2 / 2.
EfficiencyFit extract_efficiency(std::span<const EfficiencyPoint> ramsey, std::span<const EfficiencyPoint> snr);

struct EfficiencyData {
    std::vector<EfficiencyPoint> ramsey;
    std::vector<EfficiencyPoint> snr;
};

/// Forward model of the calibration: unit_traj is the readout at amplitude 1;
/// amplitude A scales the fields by A. Relative Gaussian noise is optional.
EfficiencyData synthesize_efficiency_data(const ConditionalTrajectory& unit_traj, double eta,
                                          std::span<const double> amplitudes, double relative_noise = 0.0,
                                          std::uint64_t seed = 0);

struct SpectatorConfig {
    double chi_spectator = 0.0;      // rad/s
    std::size_t n_echo = 0;
    double sequence_length = 0.0;    // s, Ramsey length; the readout window is centered in it
    bool measurement_on = true;
    ConditionalTrajectory traj;      // target-qubit readout
    double p_e = 0.5;                // target-qubit excited population
    double t1 = std::numeric_limits<double>::infinity();  // target-qubit relaxation during readout
    std::optional<double> noise_rate;  // photon-noise correlation rate, defaults to traj.kappa
    std::size_t n_shots = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct SpectatorResult {
    std::size_t n_echo = 0;
    double contrast_ratio = 1.0;
    double stderr_ratio = 0.0;
    double stark_phase = 0.0;         // mean deterministic phase (rad)
    double noise_variance = 0.0;      // mean stochastic phase variance (rad^2)
    double mean_photons = 0.0;        // time-averaged photon number over the readout window
};

/// Echo pulse times of an N-pulse CPMG sequence of length T: T (k - 1/2) / N.
std::vector<double> cpmg_times(std::size_t n_echo, double sequence_length);

SpectatorResult spectator_dephasing(const SpectatorConfig& cfg);

struct CancellationSetup {
    cplx drive_ref{};                // drive amplitude on the leakage path (rad/s)
    cplx leakage{};                  // transmission of the drive into the cavity
    std::vector<cplx> zeta;          // readout coupling during the pulse (may be all zero)
    double chi = 0.0;
    double kappa = 0.0;
    double dt = 0.0;
};

struct CancellationGrid {
    std::vector<double> amps;
    std::vector<double> phases;
};

struct CancellationResult {
    double best_amp = 0.0;
    double best_phase = 0.0;
    double best_residual = 0.0;
    std::vector<double> residual;    // row-major [amp_index * phases + phase_index], in noise-std units
    std::vector<std::string> warnings;
};

/// Scans |I_g + I_e| for cavity drive drive_ref * (leakage + a exp(i theta)).
CancellationResult tune_cancellation(const CancellationSetup& setup, const CancellationGrid& grid);

/// Residual map CSV: amp, phase, residual.
void write_residual_csv(std::ostream& os, const CancellationGrid& grid, const CancellationResult& result);

}  // namespace cdr
