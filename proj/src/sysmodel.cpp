#include "cdr/sysmodel.hpp"

#include <cmath>
#include <sstream>

#include "cdr/errors.hpp"

namespace cdr {

namespace {

void require_positive(double v, const char* field, const char* op) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "must be positive and finite, got " << v;
        throw ValidationError("sysmodel", op, field, os.str());
    }
}

}  // namespace

std::vector<std::string> validate(const SystemParams& p) {
    constexpr const char* op = "validate";
    require_positive(p.e_j, "e_j", op);
    require_positive(p.kappa, "kappa", op);
    require_positive(p.kappa_filter_decay, "kappa_filter_decay", op);
    require_positive(p.gamma1, "gamma1", op);
    require_positive(p.omega_q, "omega_q", op);
    require_positive(p.omega_c, "omega_c", op);
    require_positive(p.omega_f, "omega_f", op);
    if (!(p.gamma_phi >= 0.0)) throw ValidationError("sysmodel", op, "gamma_phi", "must be non-negative");
    if (!(p.eta > 0.0 && p.eta <= 1.0)) throw ValidationError("sysmodel", op, "eta", "must lie in (0, 1]");
    if (p.omega_c == p.omega_q) throw ValidationError("sysmodel", op, "omega_c", "equals omega_q (zero detuning)");
    if (p.omega_c == p.omega_f) throw ValidationError("sysmodel", op, "omega_c", "equals omega_f (zero detuning)");

    std::vector<std::string> warnings;
    const std::pair<const char*, double> phis[] = {{"phi_q", p.phi_q}, {"phi_c", p.phi_c}, {"phi_f", p.phi_f}};
    for (const auto& [name, v] : phis) {
        require_positive(v, name, op);
        if (v >= kPhiHardLimit) throw ValidationError("sysmodel", op, name, "participation must be below 0.5");
        if (v > kPhiWarnLimit) {
            warnings.push_back(std::string(name) + " above 0.2: fourth-order expansion may be inaccurate");
        }
    }
    return warnings;
}

DerivedCouplings derive_couplings(const SystemParams& p) {
    constexpr const char* op = "derive_couplings";
    require_positive(p.e_j, "e_j", op);
    require_positive(p.phi_q, "phi_q", op);
    require_positive(p.phi_c, "phi_c", op);
    require_positive(p.phi_f, "phi_f", op);
    require_positive(p.kappa_filter_decay, "kappa_filter_decay", op);

    const double q2 = p.phi_q * p.phi_q;
    DerivedCouplings d;
    d.alpha = 0.5 * p.e_j * q2 * q2;
    d.chi_qc = p.e_j * q2 * p.phi_c * p.phi_c;
    d.chi_qf = p.e_j * q2 * p.phi_f * p.phi_f;
    d.purcell_limit = (1.0 / p.kappa_filter_decay) * d.alpha / d.chi_qf;
    return d;
}

Participations fit_participations(double alpha_target, double chi_qc_target, double chi_qf_target, double e_j) {
    constexpr const char* op = "fit_participations";
    if (!(e_j > 0.0) || !std::isfinite(e_j)) throw DomainError("sysmodel", op, "no real solution for non-positive e_j");
    require_positive(alpha_target, "alpha", op);
    require_positive(chi_qc_target, "chi_qc", op);
    require_positive(chi_qf_target, "chi_qf", op);

    Participations out;
    out.phi_q = std::pow(2.0 * alpha_target / e_j, 0.25);
    out.phi_c = std::sqrt(chi_qc_target / e_j) / out.phi_q;
    out.phi_f = std::sqrt(chi_qf_target / e_j) / out.phi_q;
    const std::pair<const char*, double> phis[] = {{"phi_q", out.phi_q}, {"phi_c", out.phi_c}, {"phi_f", out.phi_f}};
    for (const auto& [name, v] : phis) {
        if (v > kPhiWarnLimit) {
            std::ostringstream os;
            os << name << " = " << v << " exceeds 0.2; fourth-order expansion is unreliable";
            out.warnings.push_back(os.str());
        }
    }
    return out;
}

double zeta_per_xi(const SystemParams& p) { return p.e_j * p.phi_q * p.phi_q * p.phi_q * p.phi_c; }

}  // namespace cdr
