#include "cdr/dephase.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "cdr/csv.hpp"
#include "cdr/errors.hpp"
#include "cdr/numerics.hpp"
#include "cdr/parallel.hpp"
#include "cdr/rng.hpp"

namespace cdr {

namespace {

constexpr double kMinR2 = 0.95;
constexpr std::size_t kMinCalibrationPoints = 5;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double output_difference_energy(const ConditionalTrajectory& traj) {
    std::vector<double> d(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) d[n] = std::norm(traj.out_e[n] - traj.out_g[n]);
    return numerics::trapezoid<double>(d, traj.dt);
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, bool through_origin) {
    const auto n = static_cast<double>(x.size());
    LineFit f;
    if (through_origin) {
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += x[i] * y[i];
            sxx += x[i] * x[i];
        }
        f.slope = sxy / sxx;
    } else {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        f.slope = sxy / sxx;
        f.intercept = my - f.slope * mx;
    }
    double my = 0.0;
    for (double v : y) my += v;
    my /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return f;
}

}  // namespace

DephasingResult measurement_dephasing(const ConditionalTrajectory& traj, std::optional<double> eta) {
    constexpr const char* op = "measurement_dephasing";
    if (traj.size() == 0 || !(traj.dt > 0.0)) throw ShapeError("dephase", op, "empty trajectory");
    if (eta && !(*eta > 0.0 && *eta <= 1.0)) throw ValidationError("dephase", op, "eta", "must lie in (0, 1]");

    std::vector<double> d(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) d[n] = std::norm(traj.alpha_g[n] - traj.alpha_e[n]);
    DephasingResult r;
    r.gamma_m = 0.5 * traj.kappa * numerics::trapezoid<double>(d, traj.dt);
    r.snr_ref = std::sqrt(eta.value_or(1.0)) * std::sqrt(2.0 * output_difference_energy(traj));
    if (eta && r.gamma_m > 0.0) r.eta_inferred = r.snr_ref * r.snr_ref / (4.0 * r.gamma_m);
    return r;
}

EfficiencyFit extract_efficiency(std::span<const EfficiencyPoint> ramsey, std::span<const EfficiencyPoint> snr) {
    constexpr const char* op = "extract_efficiency";
    if (ramsey.size() < kMinCalibrationPoints) throw ValidationError("dephase", op, "ramsey", "need at least 5 points");
    if (snr.size() < kMinCalibrationPoints) throw ValidationError("dephase", op, "snr", "need at least 5 points");

    std::vector<double> a2, logc;
    for (const auto& p : ramsey) {
        if (!(p.value > 0.0)) throw FitQualityError("dephase", op, "Ramsey contrast must be positive");
        a2.push_back(p.amplitude * p.amplitude);
        logc.push_back(std::log(p.value));
    }
    const LineFit gauss = fit_line(a2, logc, false);
    if (!(gauss.slope < 0.0)) throw FitQualityError("dephase", op, "Ramsey contrast does not decay with amplitude");
    if (gauss.r2 < kMinR2) throw FitQualityError("dephase", op, "Gaussian contrast fit has R^2 below 0.95");

    std::vector<double> amp, val;
    for (const auto& p : snr) {
        amp.push_back(p.amplitude);
        val.push_back(p.value);
    }
    const LineFit lin = fit_line(amp, val, true);
    if (lin.r2 < kMinR2) throw FitQualityError("dephase", op, "linear SNR fit has R^2 below 0.95");

    EfficiencyFit out;
    out.sigma_d = std::sqrt(-0.5 / gauss.slope);
    out.slope = lin.slope;
    out.r2_contrast = gauss.r2;
    out.r2_snr = lin.r2;
    out.eta = 0.5 * out.sigma_d * out.sigma_d * out.slope * out.slope;
    return out;
}

EfficiencyData synthesize_efficiency_data(const ConditionalTrajectory& unit_traj, double eta,
                                          std::span<const double> amplitudes, double relative_noise,
                                          std::uint64_t seed) {
    constexpr const char* op = "synthesize_efficiency_data";
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("dephase", op, "eta", "must lie in (0, 1]");
    const DephasingResult unit = measurement_dephasing(unit_traj, 1.0);
    EfficiencyData data;
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
        const double a = amplitudes[k];
        auto eng = stream_engine(seed, k);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double nc = relative_noise * gauss(eng);
        const double ns = relative_noise * gauss(eng);
        data.ramsey.push_back({a, std::exp(-a * a * unit.gamma_m) * (1.0 + nc)});
        data.snr.push_back({a, std::sqrt(eta) * unit.snr_ref * a * (1.0 + ns)});
    }
    return data;
}

std::vector<double> cpmg_times(std::size_t n_echo, double sequence_length) {
    std::vector<double> t(n_echo);
    for (std::size_t k = 0; k < n_echo; ++k) {
        t[k] = sequence_length * (static_cast<double>(k) + 0.5) / static_cast<double>(n_echo);
    }
    return t;
}

SpectatorResult spectator_dephasing(const SpectatorConfig& cfg) {
    constexpr const char* op = "spectator_dephasing";
    const ConditionalTrajectory& tr = cfg.traj;
    if (!(cfg.sequence_length > 0.0)) throw ValidationError("dephase", op, "sequence_length", "must be positive");
    if (cfg.n_shots < 2) throw ValidationError("dephase", op, "n_shots", "need at least 2 shots");
    if (!(cfg.p_e >= 0.0 && cfg.p_e <= 1.0)) throw ValidationError("dephase", op, "p_e", "must lie in [0, 1]");
    if (!(cfg.t1 > 0.0)) throw ValidationError("dephase", op, "t1", "must be positive");
    if (tr.size() < 2) throw ShapeError("dephase", op, "readout trajectory needs at least two samples");
    const double window = tr.duration();
    if (window > cfg.sequence_length * (1.0 + 1e-12)) {
        throw ValidationError("dephase", op, "sequence_length", "shorter than the readout window");
    }
    if (cfg.n_echo > 0 && cfg.sequence_length / static_cast<double>(cfg.n_echo) < 10.0 * tr.dt) {
        throw ResolutionError("dephase", op, "echo spacing below 10 samples of the readout grid");
    }

    SpectatorResult res;
    res.n_echo = cfg.n_echo;
    {
        double acc = 0.0;
        for (std::size_t n = 0; n < tr.size(); ++n) acc += 0.5 * (std::norm(tr.alpha_g[n]) + std::norm(tr.alpha_e[n]));
        res.mean_photons = acc / static_cast<double>(tr.size());
    }
    if (!cfg.measurement_on) return res;

    const double lambda = cfg.noise_rate.value_or(tr.kappa);
    if (!(lambda > 0.0)) throw ValidationError("dephase", op, "noise_rate", "must be positive");
    const double t_start = 0.5 * (cfg.sequence_length - window);
    const auto flips = cpmg_times(cfg.n_echo, cfg.sequence_length);

    // Integration nodes: the readout samples (shifted to t_start) split at every flip.
    std::vector<double> nodes;
    nodes.reserve(tr.size() + flips.size() + 2);
    for (std::size_t n = 0; n < tr.size(); ++n) nodes.push_back(t_start + tr.time(n));
    for (double f : flips) {
        if (f > t_start && f < t_start + window) nodes.push_back(f);
    }
    std::sort(nodes.begin(), nodes.end());
    std::vector<double> sign(nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double mid = 0.5 * (nodes[k] + nodes[k + 1]);
        const auto before = std::lower_bound(flips.begin(), flips.end(), mid) - flips.begin();
        sign[k] = before % 2 == 0 ? 1.0 : -1.0;
    }

    const double decay_rate = std::isinf(cfg.t1) ? 0.0 : 1.0 / cfg.t1;
    std::vector<double> ng(tr.size()), ne(tr.size());
    for (std::size_t n = 0; n < tr.size(); ++n) {
        ng[n] = std::norm(tr.alpha_g[n]);
        ne[n] = std::norm(tr.alpha_e[n]);
    }

    std::vector<cplx> shot_value(cfg.n_shots);
    std::vector<double> shot_phase(cfg.n_shots), shot_var(cfg.n_shots);
    parallel_for(cfg.n_shots, cfg.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> photons(nodes.size());
        for (std::size_t shot = begin; shot < end; ++shot) {
            auto eng = stream_engine(cfg.seed, shot);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            const bool excited = uni(eng) < cfg.p_e;
            const double u = uni(eng);
            double t_jump = kNan;
            if (excited && decay_rate > 0.0) {
                const double t = -std::log1p(-u) / decay_rate;
                if (t < window) t_jump = t;
            }
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                const double t = std::clamp(nodes[k] - t_start, 0.0, window);
                const bool in_e = excited && (std::isnan(t_jump) || t < t_jump);
                photons[k] = numerics::interpolate<double>(in_e ? ne : ng, tr.dt, t);
            }

            // Deterministic Stark phase (n linear between nodes) and Ornstein-Uhlenbeck
            // phase variance with f = s sqrt(n) piecewise constant, via the running
            // exponentially weighted integral g(t) = int f(t') exp(-lambda (t - t')) dt'.
            double phase = 0.0, cross = 0.0, g = 0.0;
            for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
                const double h = nodes[k + 1] - nodes[k];
                if (h <= 0.0) continue;
                const double n_mid = 0.5 * (photons[k] + photons[k + 1]);
                phase += sign[k] * n_mid * h;
                const double f = sign[k] * std::sqrt(n_mid);
                const double one_minus = -std::expm1(-lambda * h);
                cross += f * (g * one_minus / lambda + f * (h - one_minus / lambda) / lambda);
                g = g * (1.0 - one_minus) + f * one_minus / lambda;
            }
            const double chi = cfg.chi_spectator;
            shot_phase[shot] = chi * phase;
            shot_var[shot] = 2.0 * chi * chi * cross;
            shot_value[shot] = std::polar(std::exp(-0.5 * shot_var[shot]), shot_phase[shot]);
        }
    });

    const auto n = static_cast<double>(cfg.n_shots);
    cplx mean{};
    double mean_phase = 0.0, mean_var = 0.0;
    for (std::size_t s = 0; s < cfg.n_shots; ++s) {
        mean += shot_value[s];
        mean_phase += shot_phase[s];
        mean_var += shot_var[s];
    }
    mean /= n;
    double spread = 0.0;
    for (const cplx& v : shot_value) spread += std::norm(v - mean);
    res.contrast_ratio = std::abs(mean);
    res.stderr_ratio = std::sqrt(spread / (n * (n - 1.0)));
    res.stark_phase = mean_phase / n;
    res.noise_variance = mean_var / n;
    return res;
}

CancellationResult tune_cancellation(const CancellationSetup& setup, const CancellationGrid& grid) {
    constexpr const char* op = "tune_cancellation";
    if (grid.amps.empty() || grid.phases.empty()) throw ValidationError("dephase", op, "grid", "grid is empty");
    if (setup.zeta.empty()) throw ShapeError("dephase", op, "pulse coupling sequence is empty");

    CancellationResult res;
    res.residual.resize(grid.amps.size() * grid.phases.size());
    const double window = setup.dt * static_cast<double>(setup.zeta.size());
    const double sk = std::sqrt(setup.kappa);
    std::size_t best = 0;
    for (std::size_t ia = 0; ia < grid.amps.size(); ++ia) {
        for (std::size_t ip = 0; ip < grid.phases.size(); ++ip) {
            const cplx eps = setup.drive_ref * (setup.leakage + std::polar(grid.amps[ia], grid.phases[ip]));
            const auto tr = evolve_combined(eps, setup.zeta, setup.chi, setup.kappa, setup.dt);
            std::vector<cplx> sum(tr.size());
            for (std::size_t n = 0; n < tr.size(); ++n) sum[n] = sk * (tr.alpha_g[n] + tr.alpha_e[n]);
            // Boxcar outcome in units of the I noise standard deviation.
            const cplx z = numerics::trapezoid<cplx>(sum, tr.dt);
            const std::size_t idx = ia * grid.phases.size() + ip;
            res.residual[idx] = 2.0 * std::abs(z) / std::sqrt(window);
            if (res.residual[idx] < res.residual[best]) best = idx;
        }
    }
    const std::size_t ia = best / grid.phases.size();
    const std::size_t ip = best % grid.phases.size();
    res.best_amp = grid.amps[ia];
    res.best_phase = grid.phases[ip];
    res.best_residual = res.residual[best];

    if (grid.amps.size() > 1 && (ia == 0 || ia + 1 == grid.amps.size())) {
        res.warnings.push_back("optimum amplitude on the grid boundary; widen the amplitude range");
    }
    if (grid.phases.size() > 1) {
        const double step = grid.phases[1] - grid.phases[0];
        const bool full_circle = grid.phases.back() - grid.phases.front() + step >= kTwoPi - 1e-9;
        if (!full_circle && (ip == 0 || ip + 1 == grid.phases.size())) {
            res.warnings.push_back("optimum phase on the grid boundary; widen the phase range");
        }
    }
    return res;
}

void write_residual_csv(std::ostream& os, const CancellationGrid& grid, const CancellationResult& result) {
    os << "amp,phase,residual\n";
    for (std::size_t ia = 0; ia < grid.amps.size(); ++ia) {
        for (std::size_t ip = 0; ip < grid.phases.size(); ++ip) {
            os << csv::format_double(grid.amps[ia]) << ',' << csv::format_double(grid.phases[ip]) << ','
               << csv::format_double(result.residual[ia * grid.phases.size() + ip]) << '\n';
        }
    }
}

}  // namespace cdr
