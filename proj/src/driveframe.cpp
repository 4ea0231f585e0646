#include "cdr/driveframe.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "cdr/csv.hpp"
#include "cdr/errors.hpp"
#include "cdr/numerics.hpp"

namespace cdr {

namespace {

constexpr double kMaxPhasePerStep = 0.1;

double detuning(const SystemParams& p, bool use_filter) {
    return use_filter ? p.omega_c - p.omega_f : p.omega_c - p.omega_q;
}

void check_detuning(double delta, const char* op) {
    if (delta == 0.0 || !std::isfinite(delta)) {
        throw DomainError("driveframe", op, "drive detuning is zero");
    }
}

void check_envelope(const DriveEnvelope& env, const char* op) {
    if (!(env.dt > 0.0)) throw ValidationError("driveframe", op, "dt", "must be positive");
    if (env.samples.empty()) throw ValidationError("driveframe", op, "samples", "envelope is empty");
}

}  // namespace

double ramp_profile(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 0.5 * (1.0 + std::tanh(std::tan(std::numbers::pi * (u - 0.5))));
}

DriveEnvelope make_envelope(std::span<const Segment> segments, double dt) {
    constexpr const char* op = "make_envelope";
    if (segments.empty()) throw ValidationError("driveframe", op, "segments", "segment list is empty");
    if (!(dt > 0.0)) throw ValidationError("driveframe", op, "dt", "must be positive");

    DriveEnvelope env;
    env.dt = dt;
    cplx level{};
    bool have_level = false;
    for (const Segment& seg : segments) {
        if (!(seg.duration > 0.0)) throw ValidationError("driveframe", op, "duration", "must be positive");
        const auto n = static_cast<std::size_t>(std::llround(seg.duration / dt));
        if (n == 0) throw ValidationError("driveframe", op, "duration", "shorter than one sample");

        switch (seg.kind) {
        case SegmentKind::constant:
            level = seg.amplitude;
            env.samples.insert(env.samples.end(), n, level);
            break;
        case SegmentKind::tanh_ramp: {
            const cplx from = level;
            for (std::size_t k = 0; k < n; ++k) {
                const double u = static_cast<double>(k + 1) / static_cast<double>(n);
                env.samples.push_back(from + (seg.amplitude - from) * ramp_profile(u));
            }
            level = seg.amplitude;
            env.ring_time = std::max(env.ring_time, static_cast<double>(n) * dt);
            break;
        }
        case SegmentKind::reversal:
            if (!have_level || level == cplx{}) {
                throw DomainError("driveframe", op, "reversal needs a preceding non-zero segment");
            }
            level *= seg.amplitude;
            env.samples.insert(env.samples.end(), n, level);
            break;
        }
        have_level = true;
    }
    return env;
}

FrameSolution solve_frame(const DriveEnvelope& env, const SystemParams& params, bool use_filter) {
    constexpr const char* op = "solve_frame";
    check_envelope(env, op);
    const double delta = detuning(params, use_filter);
    check_detuning(delta, op);
    if (env.dt * std::abs(delta) > kMaxPhasePerStep) {
        throw ResolutionError("driveframe", op, "dt * |detuning| exceeds 0.1; refine the envelope grid");
    }

    const double gamma = use_filter ? params.kappa_filter_decay : params.gamma1;
    const cplx lambda(0.5 * gamma, -delta);  // x' = -lambda x + i eps
    const std::size_t n = env.samples.size();
    const auto& eps = env.samples;

    FrameSolution sol;
    sol.xi.resize(n);
    sol.xi[0] = cplx{};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const cplx e0 = eps[k];
        const cplx e1 = eps[k + 1];
        const double t0 = static_cast<double>(k) * env.dt;
        auto rhs = [&](double t, cplx x) {
            const double w = (t - t0) / env.dt;
            return -lambda * x + cplx(0.0, 1.0) * ((1.0 - w) * e0 + w * e1);
        };
        sol.xi[k + 1] = numerics::rk4_step(rhs, t0, sol.xi[k], env.dt);
    }

    // Zeta from xi: the minus sign undoes the one in the adiabatic branch -eps/D,
    // so zeta carries the phase of eps/D.
    const double sign = use_filter ? (delta > 0.0 ? 1.0 : -1.0) : 1.0;
    const double scale = use_filter ? params.e_j * params.phi_q * params.phi_q * params.phi_c * params.phi_f
                                    : zeta_per_xi(params);
    sol.zeta.resize(n);
    for (std::size_t k = 0; k < n; ++k) sol.zeta[k] = -sign * scale * sol.xi[k];

    // Residual of the free (resonant) branch at the end of the ring-up.
    double peak = 0.0;
    for (const cplx& e : eps) peak = std::max(peak, std::abs(e));
    if (peak > 0.0) {
        std::size_t k_end = 0;
        while (std::abs(eps[k_end]) < (1.0 - 1e-12) * peak) ++k_end;
        const cplx adiabatic = cplx(0.0, 1.0) * eps[k_end] / lambda;
        sol.resonant_residual = std::abs(sol.xi[k_end] - adiabatic);
    }
    return sol;
}

std::vector<cplx> zeta_of_envelope(const DriveEnvelope& env, const DerivedCouplings& couplings,
                                   const SystemParams& params, bool use_filter) {
    constexpr const char* op = "zeta_of_envelope";
    check_envelope(env, op);
    const double delta = detuning(params, use_filter);
    check_detuning(delta, op);

    const double factor = use_filter ? std::sqrt(couplings.chi_qf * couplings.chi_qc) / std::abs(delta)
                                     : std::sqrt(2.0 * couplings.alpha * couplings.chi_qc) / delta;
    std::vector<cplx> zeta(env.samples.size());
    std::transform(env.samples.begin(), env.samples.end(), zeta.begin(), [factor](cplx e) { return factor * e; });
    return zeta;
}

void write_envelope_csv(std::ostream& os, const DriveEnvelope& env) {
    os << "t_s,re_eps_hz,im_eps_hz\n";
    for (std::size_t k = 0; k < env.samples.size(); ++k) {
        os << csv::format_double(static_cast<double>(k) * env.dt) << ','
           << csv::format_double(rad_to_hz(env.samples[k].real())) << ','
           << csv::format_double(rad_to_hz(env.samples[k].imag())) << '\n';
    }
}

DriveEnvelope read_envelope_csv(std::istream& is) {
    constexpr const char* op = "read_envelope_csv";
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("driveframe", op, "header", "missing header row");
    std::vector<double> t;
    DriveEnvelope env;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cols = csv::split(line);
        if (cols.size() != 3) throw ValidationError("driveframe", op, "row", "expected three columns");
        try {
            t.push_back(csv::parse_double(cols[0]));
            env.samples.emplace_back(hz_to_rad(csv::parse_double(cols[1])), hz_to_rad(csv::parse_double(cols[2])));
        } catch (const std::invalid_argument& e) {
            throw ValidationError("driveframe", op, "row", e.what());
        }
    }
    if (t.size() < 2) throw ValidationError("driveframe", op, "samples", "need at least two rows");
    env.dt = t[1] - t[0];
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - env.dt) > 1e-6 * env.dt) {
            throw ShapeError("driveframe", op, "time column is not uniformly spaced");
        }
    }
    return env;
}

}  // namespace cdr
