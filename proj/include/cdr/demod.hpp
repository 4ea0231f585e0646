#pragma once

#include <cstddef>
#include <numbers>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdr/cavitydyn.hpp"
#include "cdr/types.hpp"

namespace cdr {

enum class EnvelopeKind { boxcar, optimal, custom };

struct DemodEnvelope {
    double dt = 0.0;
    std::vector<cplx> weights;
    EnvelopeKind kind = EnvelopeKind::custom;
};

/// Amplitude SNR as a function of integration time.
struct SnrCurve {
    std::vector<double> tau;
    std::vector<double> snr;
    std::string label;
};

struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    std::size_t points = 0;
};

DemodEnvelope boxcar_envelope(std::size_t samples, double dt);

/// K = conj(out_e - out_g), scaled so that max |K| = 1.
DemodEnvelope optimal_envelope(const ConditionalTrajectory& traj);

/// Demodulated mean signal Z(t_n) = int_0^t_n K (out_e - out_g) dt for every sample.
std::vector<cplx> integrated_signal(const ConditionalTrajectory& traj, const DemodEnvelope& env);

/// Demodulation phase on a 1e-3 rad grid maximizing Re(exp(-i phi) Z) at the end of the record.
double best_demod_phase(const ConditionalTrajectory& traj, const DemodEnvelope& env);

/// SNR(t_n) = sqrt(2 eta) |Re(exp(-i phi) Z_n)| / sqrt(int_0^t_n |K|^2 dt), trapezoid quadrature.
/// Without an explicit phase, the optimal envelope uses 0 and other envelopes use best_demod_phase.
SnrCurve snr_numeric(const ConditionalTrajectory& traj, const DemodEnvelope& env, std::optional<double> phi_demod,
                     double eta);

/// Closed forms. phi is the demodulation quadrature; pi/2 is the information quadrature.
double snr_dispersive_boxcar(double eps, double chi, double kappa, double tau, double phi = std::numbers::pi / 2);
double snr_dispersive_optimal(double eps, double chi, double kappa, double tau);
double snr_longitudinal_boxcar(double zeta, double kappa, double tau);
double snr_longitudinal_optimal(double zeta, double kappa, double tau);

/// Ordinary least-squares slope of log(snr) against log(tau) over tau in [tau_min, tau_max].
SlopeFit fit_loglog_slope(const SnrCurve& curve, double tau_min, double tau_max);

/// Logarithmically spaced grid with `count` points from a to b inclusive.
std::vector<double> log_grid(double a, double b, std::size_t count);

/// SNR curve CSV: tau_s, snr.
void write_snr_csv(std::ostream& os, const SnrCurve& curve);

}  // namespace cdr
