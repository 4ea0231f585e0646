#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cdr/types.hpp"

namespace cdr {

enum class CouplingMode { dispersive, longitudinal, combined };

/// Conditional cavity amplitudes for the two qubit states on a shared grid
/// t_n = n * dt. Output fields obey out = input + sqrt(kappa) * alpha with the
/// same constant input amplitude for both branches.
struct ConditionalTrajectory {
    double dt = 0.0;
    double kappa = 0.0;
    CouplingMode mode = CouplingMode::dispersive;
    cplx input{};
    std::vector<cplx> alpha_g, alpha_e;
    std::vector<cplx> out_g, out_e;

    std::size_t size() const noexcept { return alpha_g.size(); }
    double time(std::size_t n) const noexcept { return dt * static_cast<double>(n); }
    double duration() const noexcept { return size() > 0 ? time(size() - 1) : 0.0; }
    const std::vector<cplx>& alpha(QubitState s) const { return s == QubitState::e ? alpha_e : alpha_g; }
    const std::vector<cplx>& out(QubitState s) const { return s == QubitState::e ? out_e : out_g; }
};

/// Constant real drive eps with dispersive shift chi. Uses round(duration/dt)
/// steps, so the trajectory holds that many samples plus the initial one.
ConditionalTrajectory evolve_dispersive(double drive_amp, double chi, double kappa, double duration, double dt);

/// Longitudinal coupling zeta[n] held over [t_n, t_{n+1}); M couplings give
/// M + 1 trajectory samples. Vacuum input.
ConditionalTrajectory evolve_longitudinal(std::span<const cplx> zeta, double kappa, double dt);

/// alpha' = -i (chi/2) s alpha - i (zeta/2) s - (kappa/2) alpha + eps, per branch s = -1 (g), +1 (e).
ConditionalTrajectory evolve_combined(cplx drive_amp, std::span<const cplx> zeta, double chi, double kappa, double dt);

/// Time for which a constant coupling multiplier * zeta0 drives a branch that
/// starts at alpha0 back to the origin.
double design_depletion(cplx alpha0, cplx zeta0, double multiplier, double kappa);

/// Closed-form dispersive amplitude 2 eps / (kappa + i chi s) (1 - exp(-(kappa + i chi s) t / 2)).
cplx dispersive_closed_form(double drive_amp, double chi, double kappa, double sigma, double t);

/// Closed-form longitudinal amplitude for constant zeta, -i s (zeta/kappa)(1 - exp(-kappa t / 2)).
cplx longitudinal_closed_form(cplx zeta, double kappa, double sigma, double t);

/// Trajectory CSV: t_s, re_alpha_g, im_alpha_g, re_alpha_e, im_alpha_e, re_out_g, im_out_g, re_out_e, im_out_e.
void write_trajectory_csv(std::ostream& os, const ConditionalTrajectory& traj);

}  // namespace cdr
