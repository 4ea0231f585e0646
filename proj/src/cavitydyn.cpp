#include "cdr/cavitydyn.hpp"

#include <cmath>
#include <ostream>

#include "cdr/csv.hpp"
#include "cdr/errors.hpp"
#include "cdr/numerics.hpp"

namespace cdr {

namespace {

constexpr double kMaxKappaDt = 0.05;
constexpr cplx kI(0.0, 1.0);

void check_grid(double kappa, double dt, const char* op) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("cavitydyn", op, "kappa", "must be positive");
    if (!(dt > 0.0)) throw ValidationError("cavitydyn", op, "dt", "must be positive");
    if (dt * kappa > kMaxKappaDt) {
        throw ResolutionError("cavitydyn", op, "dt * kappa exceeds 0.05; refine the time grid");
    }
}

// Both branches of alpha' = -(kappa/2 + i chi s/2) alpha + (eps - i zeta s / 2),
// with zeta piecewise constant between samples.
ConditionalTrajectory integrate(cplx eps, std::span<const cplx> zeta, std::size_t steps, double chi, double kappa,
                                double dt, CouplingMode mode) {
    ConditionalTrajectory tr;
    tr.dt = dt;
    tr.kappa = kappa;
    tr.mode = mode;
    tr.input = -eps / std::sqrt(kappa);

    for (QubitState s : {QubitState::g, QubitState::e}) {
        const double sz = sigma_z(s);
        const cplx decay(0.5 * kappa, 0.5 * chi * sz);
        std::vector<cplx> a(steps + 1);
        a[0] = cplx{};
        for (std::size_t n = 0; n < steps; ++n) {
            const cplx z = zeta.empty() ? cplx{} : zeta[n];
            const cplx source = eps - 0.5 * kI * z * sz;
            auto rhs = [&](double, cplx x) { return -decay * x + source; };
            a[n + 1] = numerics::rk4_step(rhs, 0.0, a[n], dt);
        }
        (s == QubitState::e ? tr.alpha_e : tr.alpha_g) = std::move(a);
    }

    const double sk = std::sqrt(kappa);
    tr.out_g.resize(steps + 1);
    tr.out_e.resize(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n) {
        tr.out_g[n] = tr.input + sk * tr.alpha_g[n];
        tr.out_e[n] = tr.input + sk * tr.alpha_e[n];
    }
    return tr;
}

}  // namespace

ConditionalTrajectory evolve_dispersive(double drive_amp, double chi, double kappa, double duration, double dt) {
    constexpr const char* op = "evolve_dispersive";
    check_grid(kappa, dt, op);
    if (!(duration >= 0.0)) throw ValidationError("cavitydyn", op, "duration", "must be non-negative");
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    return integrate(cplx(drive_amp, 0.0), {}, steps, chi, kappa, dt, CouplingMode::dispersive);
}

ConditionalTrajectory evolve_longitudinal(std::span<const cplx> zeta, double kappa, double dt) {
    constexpr const char* op = "evolve_longitudinal";
    check_grid(kappa, dt, op);
    if (zeta.empty()) throw ShapeError("cavitydyn", op, "coupling sequence is empty");
    return integrate(cplx{}, zeta, zeta.size(), 0.0, kappa, dt, CouplingMode::longitudinal);
}

ConditionalTrajectory evolve_combined(cplx drive_amp, std::span<const cplx> zeta, double chi, double kappa, double dt) {
    constexpr const char* op = "evolve_combined";
    check_grid(kappa, dt, op);
    if (zeta.empty()) throw ShapeError("cavitydyn", op, "coupling sequence is empty");
    return integrate(drive_amp, zeta, zeta.size(), chi, kappa, dt, CouplingMode::combined);
}

double design_depletion(cplx alpha0, cplx zeta0, double multiplier, double kappa) {
    constexpr const char* op = "design_depletion";
    if (!(kappa > 0.0)) throw ValidationError("cavitydyn", op, "kappa", "must be positive");
    if (!(multiplier < 0.0)) throw ValidationError("cavitydyn", op, "multiplier", "must be negative (reversal)");
    if (std::abs(alpha0) < 1e-12) throw DomainError("cavitydyn", op, "cavity is already empty");
    if (zeta0 == cplx{}) throw ValidationError("cavitydyn", op, "zeta0", "must be non-zero");

    // alpha(t) = target + (alpha0 - target) exp(-kappa t / 2) with the reversed
    // fixed point target; it reaches zero only if the ratio below is real in (0, 1).
    for (double sz : {1.0, -1.0}) {
        const cplx target = -kI * multiplier * zeta0 * sz / kappa;
        const cplx r = -target / (alpha0 - target);
        if (std::abs(r.imag()) < 1e-6 * std::abs(r) && r.real() > 0.0 && r.real() < 1.0) {
            return -(2.0 / kappa) * std::log(r.real());
        }
    }
    throw DomainError("cavitydyn", op, "branch never crosses zero under the reversed coupling");
}

cplx dispersive_closed_form(double drive_amp, double chi, double kappa, double sigma, double t) {
    const cplx lam(kappa, chi * sigma);
    return 2.0 * drive_amp / lam * -numerics::expm1(-0.5 * lam * t);
}

cplx longitudinal_closed_form(cplx zeta, double kappa, double sigma, double t) {
    return -kI * sigma * (zeta / kappa) * -std::expm1(-0.5 * kappa * t);
}

void write_trajectory_csv(std::ostream& os, const ConditionalTrajectory& traj) {
    os << "t_s,re_alpha_g,im_alpha_g,re_alpha_e,im_alpha_e,re_out_g,im_out_g,re_out_e,im_out_e\n";
    for (std::size_t n = 0; n < traj.size(); ++n) {
        os << csv::format_double(traj.time(n));
        for (const cplx v : {traj.alpha_g[n], traj.alpha_e[n], traj.out_g[n], traj.out_e[n]}) {
            os << ',' << csv::format_double(v.real()) << ',' << csv::format_double(v.imag());
        }
        os << '\n';
    }
}

}  // namespace cdr
