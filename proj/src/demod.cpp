#include "cdr/demod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cdr/csv.hpp"
#include "cdr/errors.hpp"
#include "cdr/numerics.hpp"

namespace cdr {

namespace {

constexpr double kPhaseStep = 1e-3;

void check_grid(const ConditionalTrajectory& traj, const DemodEnvelope& env, const char* op) {
    if (env.weights.size() != traj.size() || std::abs(env.dt - traj.dt) > 1e-12 * traj.dt) {
        throw ShapeError("demod", op, "envelope grid does not match trajectory grid");
    }
}

}  // namespace

DemodEnvelope boxcar_envelope(std::size_t samples, double dt) {
    return {dt, std::vector<cplx>(samples, cplx(1.0, 0.0)), EnvelopeKind::boxcar};
}

DemodEnvelope optimal_envelope(const ConditionalTrajectory& traj) {
    DemodEnvelope env{traj.dt, std::vector<cplx>(traj.size()), EnvelopeKind::optimal};
    double peak = 0.0;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        env.weights[n] = std::conj(traj.out_e[n] - traj.out_g[n]);
        peak = std::max(peak, std::abs(env.weights[n]));
    }
    if (!(peak > 0.0)) throw DomainError("demod", "optimal_envelope", "degenerate envelope: branches are identical");
    for (cplx& w : env.weights) w /= peak;
    return env;
}

std::vector<cplx> integrated_signal(const ConditionalTrajectory& traj, const DemodEnvelope& env) {
    check_grid(traj, env, "integrated_signal");
    std::vector<cplx> f(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) f[n] = env.weights[n] * (traj.out_e[n] - traj.out_g[n]);
    return numerics::cumulative_trapezoid<cplx>(f, traj.dt);
}

double best_demod_phase(const ConditionalTrajectory& traj, const DemodEnvelope& env) {
    const auto z = integrated_signal(traj, env);
    const cplx end = z.empty() ? cplx{} : z.back();
    const auto steps = static_cast<std::size_t>(std::ceil(kTwoPi / kPhaseStep));
    double best_phi = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < steps; ++k) {
        const double phi = static_cast<double>(k) * kPhaseStep;
        const double v = (std::polar(1.0, -phi) * end).real();
        if (v > best) {
            best = v;
            best_phi = phi;
        }
    }
    return best_phi;
}

SnrCurve snr_numeric(const ConditionalTrajectory& traj, const DemodEnvelope& env, std::optional<double> phi_demod,
                     double eta) {
    constexpr const char* op = "snr_numeric";
    check_grid(traj, env, op);
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("demod", op, "eta", "must lie in (0, 1]");

    const double phi = phi_demod ? *phi_demod : (env.kind == EnvelopeKind::optimal ? 0.0 : best_demod_phase(traj, env));
    const auto z = integrated_signal(traj, env);
    std::vector<double> k2(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) k2[n] = std::norm(env.weights[n]);
    const auto noise = numerics::cumulative_trapezoid<double>(k2, traj.dt);

    SnrCurve curve;
    curve.label = env.kind == EnvelopeKind::optimal ? "numeric-optimal"
                  : env.kind == EnvelopeKind::boxcar ? "numeric-boxcar"
                                                     : "numeric-custom";
    curve.tau.resize(traj.size());
    curve.snr.resize(traj.size());
    const cplx rot = std::polar(1.0, -phi);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        curve.tau[n] = traj.time(n);
        curve.snr[n] = noise[n] > 0.0 ? std::sqrt(2.0 * eta) * std::abs((rot * z[n]).real()) / std::sqrt(noise[n]) : 0.0;
    }
    return curve;
}

double snr_dispersive_boxcar(double eps, double chi, double kappa, double tau, double phi) {
    if (tau <= 0.0) return 0.0;
    const double pq = std::atan2(chi, kappa);
    const double x = kappa * tau;
    const double c = std::cos(pq);
    const double s2 = std::sin(2.0 * pq);
    // Written without dividing by sin(2 phi_qb) so that chi = 0 is regular.
    const double bracket = s2 - (4.0 * c * c / x) * (s2 - std::exp(-0.5 * x) * std::sin(2.0 * pq + 0.5 * chi * tau));
    return std::sqrt(8.0) * (eps / kappa) * std::abs(std::sin(phi)) * std::sqrt(x) * bracket;
}

double snr_dispersive_optimal(double eps, double chi, double kappa, double tau) {
    if (tau <= 0.0) return 0.0;
    // The terms cancel to O((kappa tau)^5) at short times; extended precision
    // keeps the short-time tail accurate.
    using real = long double;
    const real k = kappa, c_hi = chi, t = tau;
    const real pq = std::atan2(c_hi, k);
    const real c = std::cos(pq);
    const real s2 = std::sin(2 * pq);
    const real i1 = (2 / k) * c * (s2 - std::exp(-k * t / 2) * std::sin(2 * pq + c_hi * t / 2));
    const real i2 = (c / k) * (std::cos(3 * pq) - std::exp(-k * t) * std::cos(3 * pq + c_hi * t));
    const real inner = s2 * s2 * t - 4 * c * s2 * i1 - (2 / k) * c * c * std::expm1(-k * t) - 2 * c * c * i2;
    return std::sqrt(8.0) * (eps / std::sqrt(kappa)) * std::sqrt(std::max(static_cast<double>(inner), 0.0));
}

double snr_longitudinal_boxcar(double zeta, double kappa, double tau) {
    if (tau <= 0.0) return 0.0;
    const double x = kappa * tau;
    return std::sqrt(8.0) * (zeta / kappa) * (x + 2.0 * std::expm1(-0.5 * x)) / std::sqrt(x);
}

double snr_longitudinal_optimal(double zeta, double kappa, double tau) {
    if (tau <= 0.0) return 0.0;
    const double x = kappa * tau;
    const double inner = x + 4.0 * std::expm1(-0.5 * x) - std::expm1(-x);
    return std::sqrt(8.0) * (zeta / kappa) * std::sqrt(std::max(inner, 0.0));
}

SlopeFit fit_loglog_slope(const SnrCurve& curve, double tau_min, double tau_max) {
    constexpr const char* op = "fit_loglog_slope";
    std::vector<double> lx, ly;
    for (std::size_t n = 0; n < curve.tau.size(); ++n) {
        if (curve.tau[n] < tau_min || curve.tau[n] > tau_max) continue;
        if (!(curve.snr[n] > 0.0) || !(curve.tau[n] > 0.0)) {
            throw DomainError("demod", op, "non-positive SNR inside the fit window");
        }
        lx.push_back(std::log(curve.tau[n]));
        ly.push_back(std::log(curve.snr[n]));
    }
    const std::size_t m = lx.size();
    if (m < 10) throw DomainError("demod", op, "fewer than 10 points inside the fit window");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.points = m;
    fit.slope = sxy / sxx;
    const double icept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (icept + fit.slope * lx[i]);
        rss += r * r;
    }
    fit.std_error = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
    return fit;
}

std::vector<double> log_grid(double a, double b, std::size_t count) {
    std::vector<double> g(count);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (std::size_t i = 0; i < count; ++i) {
        const double w = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        g[i] = std::exp(la + w * (lb - la));
    }
    if (count > 0) {
        g.front() = a;
        g.back() = b;
    }
    return g;
}

void write_snr_csv(std::ostream& os, const SnrCurve& curve) {
    os << "tau_s,snr\n";
    for (std::size_t n = 0; n < curve.tau.size(); ++n) {
        os << csv::format_double(curve.tau[n]) << ',' << csv::format_double(curve.snr[n]) << '\n';
    }
}

}  // namespace cdr
