#pragma once

#include <string>
#include <vector>

namespace cdr {

/// Raw physical parameters. Frequencies and rates are angular (rad/s).
struct SystemParams {
    double e_j = 0.0;
    double phi_q = 0.0;
    double phi_c = 0.0;
    double phi_f = 0.0;
    double omega_q = 0.0;
    double omega_c = 0.0;
    double omega_f = 0.0;
    double kappa = 0.0;
    double kappa_filter_decay = 0.0;  // 1 / T_f
    double gamma1 = 0.0;              // 1 / T1
    double gamma_phi = 0.0;
    double eta = 1.0;
};

struct DerivedCouplings {
    double alpha = 0.0;
    double chi_qc = 0.0;
    double chi_qf = 0.0;
    double purcell_limit = 0.0;  // seconds
};

struct Participations {
    double phi_q = 0.0;
    double phi_c = 0.0;
    double phi_f = 0.0;
    std::vector<std::string> warnings;
};

// Above this the fourth-order expansion starts to lose accuracy; at or above
// kPhiHardLimit the parameters are rejected.
inline constexpr double kPhiWarnLimit = 0.2;
inline constexpr double kPhiHardLimit = 0.5;

/// Checks every invariant of SystemParams. Throws ValidationError naming the
/// first offending field; returns advisory warnings otherwise.
std::vector<std::string> validate(const SystemParams& p);

/// Fourth-order Josephson expansion: alpha = E_J phi_q^4 / 2, chi_ij = E_J phi_i^2 phi_j^2.
DerivedCouplings derive_couplings(const SystemParams& p);

/// Inverts derive_couplings for given (alpha, chi_qc, chi_qf) at fixed E_J.
Participations fit_participations(double alpha_target, double chi_qc_target, double chi_qf_target, double e_j);

/// Prefactor mapping the displaced-frame amplitude to the longitudinal coupling, E_J phi_q^3 phi_c.
double zeta_per_xi(const SystemParams& p);

}  // namespace cdr
