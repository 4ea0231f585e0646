#include "cdr/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "cdr/cavitydyn.hpp"
#include "cdr/csv.hpp"
#include "cdr/demod.hpp"
#include "cdr/dephase.hpp"
#include "cdr/driveframe.hpp"
#include "cdr/errors.hpp"
#include "cdr/numerics.hpp"
#include "cdr/rng.hpp"
#include "cdr/shotsim.hpp"

namespace cdr {

namespace {

using nlohmann::json;

struct Context {
    const ExperimentConfig& cfg;
    SystemParams sys;
    ParamReader params;
    unsigned threads;
    RunOutput out;
};

std::size_t steps_for(double duration, double dt) {
    return static_cast<std::size_t>(std::llround(duration / dt));
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

/// Constant coupling for the readout, then a reversed segment that empties the cavity.
struct ReadoutShape {
    double zeta = 0.0;  // rad/s
    double readout_s = 0.0;
    double depletion_s = 0.0;
    double multiplier = 0.0;
    double dt = 0.0;

    ConditionalTrajectory trajectory(double kappa) const {
        std::vector<cplx> z(steps_for(readout_s, dt), cplx(zeta, 0.0));
        z.insert(z.end(), steps_for(depletion_s, dt), cplx(multiplier * zeta, 0.0));
        return evolve_longitudinal(z, kappa, dt);
    }
};

ReadoutShape read_shape(ParamReader& p) {
    ReadoutShape s;
    s.zeta = hz_to_rad(p.positive("zeta_hz", 1.28e6));
    s.readout_s = p.positive("readout_s", 750e-9);
    s.depletion_s = p.number("depletion_s", 120e-9);
    if (s.depletion_s < 0.0) throw ConfigError("experiment.depletion_s", "must be non-negative");
    s.multiplier = p.number("depletion_multiplier", -2.0);
    s.dt = p.positive("dt_s", 1e-9);
    return s;
}

/// Readout chain for shot experiments; rescales zeta to hit a requested separation.
ReadoutSetup make_readout(Context& c, ReadoutShape& shape, std::optional<double> target_sigmas, double q_ratio) {
    ReadoutSetup r;
    r.traj = shape.trajectory(c.sys.kappa);
    r.env = optimal_envelope(r.traj);
    r.eta = c.sys.eta;
    r.q_variance_ratio = q_ratio;
    if (target_sigmas) {
        const double scale = *target_sigmas / separation_sigmas(r);
        shape.zeta *= scale;
        r.traj = shape.trajectory(c.sys.kappa);
        r.env = optimal_envelope(r.traj);
    }
    c.out.summary["zeta_hz"] = rad_to_hz(shape.zeta);
    c.out.summary["separation_sigmas"] = separation_sigmas(r);
    return r;
}

std::string label(QubitState s) { return std::string(to_string(s)); }

void put_metrics(json& j, const ReadoutMetrics& m) {
    j["snr_measured"] = m.snr_measured;
    j["separation_sigmas_measured"] = m.separation_sigmas;
    j["discrimination_power"] = m.discrimination_power;
    j["f_g"] = m.f_g;
    j["f_e"] = m.f_e;
    j["f_total"] = m.f_total;
    j["threshold"] = m.threshold;
    j["fit_g"] = {{"mean", m.fit_g.mean}, {"sigma", m.fit_g.sigma}, {"count", m.fit_g.count}};
    j["fit_e"] = {{"mean", m.fit_e.mean}, {"sigma", m.fit_e.sigma}, {"count", m.fit_e.count}};
    if (m.qndness) j["qndness"] = *m.qndness;
}

Table shots_table(const ShotBatch& b, std::size_t max_shots) {
    Table t("shots", {"shot_idx", "repeat_idx", "init_label", "i_val", "q_val", "jump_time_s"});
    const std::size_t n = std::min(b.n_shots, max_shots) * b.n_repeats;
    for (std::size_t r = 0; r < n; ++r) {
        t.add_row({as_int(r / b.n_repeats), as_int(r % b.n_repeats), label(b.labels[r]), b.i_vals[r], b.q_vals[r],
                   b.jump_times[r]});
    }
    return t;
}

// ---------------------------------------------------------------------------

void run_snr_sweep(Context& c) {
    auto& p = c.params;
    const std::string coupling = p.choice("coupling", "longitudinal", {"longitudinal", "dispersive"});
    const std::string envelope = p.choice("envelope", "optimal", {"optimal", "boxcar"});
    const double zeta = hz_to_rad(p.positive("zeta_hz", 1.28e6));
    const double kappa = c.sys.kappa;
    const double chi = coupling == "dispersive" ? hz_to_rad(p.positive("chi_hz", rad_to_hz(kappa))) : 0.0;
    const double tau_min = p.positive("tau_min_s", 1e-8);
    const double tau_max = p.positive("tau_max_s", 2e-6);
    const auto points = static_cast<std::size_t>(p.integer("points", 60, 2));
    const auto steps = static_cast<std::size_t>(p.integer("steps_per_point", 2000, 100));
    if (tau_max <= tau_min) throw ConfigError("experiment.tau_max_s", "must exceed tau_min_s");
    p.finish();

    // Equal steady-state separation alpha_m = 2 zeta / kappa for both couplings.
    const double alpha_m = 2.0 * zeta / kappa;
    const double eps = alpha_m * (kappa * kappa + chi * chi) / (4.0 * chi);
    const double eta = c.sys.eta;
    const bool optimal = envelope == "optimal";

    Table t("snr", {"tau_s", "kappa_tau", "snr", "snr_closed_form"});
    SnrCurve curve;
    for (double tau : log_grid(tau_min, tau_max, points)) {
        // kappa * dt <= 0.01 keeps RK4 and the quadrature well below 1e-6 relative
        const auto n = std::max(steps, static_cast<std::size_t>(std::ceil(100.0 * kappa * tau)));
        const double dt = tau / static_cast<double>(n);
        double numeric = 0.0;
        double closed = 0.0;
        if (coupling == "longitudinal") {
            const auto tr = evolve_longitudinal(std::vector<cplx>(n, cplx(zeta, 0.0)), kappa, dt);
            const auto env = optimal ? optimal_envelope(tr) : boxcar_envelope(tr.size(), dt);
            numeric = snr_numeric(tr, env, std::nullopt, eta).snr.back();
            closed = optimal ? snr_longitudinal_optimal(zeta, kappa, tau) : snr_longitudinal_boxcar(zeta, kappa, tau);
        } else {
            const auto tr = evolve_dispersive(eps, chi, kappa, tau, dt);
            const auto env = optimal ? optimal_envelope(tr) : boxcar_envelope(tr.size(), dt);
            const std::optional<double> phi = optimal ? std::nullopt : std::optional(std::numbers::pi / 2);
            numeric = snr_numeric(tr, env, phi, eta).snr.back();
            closed = optimal ? snr_dispersive_optimal(eps, chi, kappa, tau) : snr_dispersive_boxcar(eps, chi, kappa, tau);
        }
        closed *= std::sqrt(eta);
        t.add_row({tau, kappa * tau, numeric, closed});
        curve.tau.push_back(tau);
        curve.snr.push_back(numeric);
    }
    c.out.tables.push_back(std::move(t));

    auto& s = c.out.summary;
    s["coupling"] = coupling;
    s["envelope"] = envelope;
    s["alpha_m_sq"] = alpha_m * alpha_m;
    if (coupling == "dispersive") s["drive_hz"] = rad_to_hz(eps);
    // Local log-log slopes at both ends of the grid.
    const std::size_t n = curve.tau.size();
    const std::size_t w = std::max<std::size_t>(10, n / 6);
    if (n >= w) {
        s["slope_short"] = fit_loglog_slope(curve, curve.tau[0], curve.tau[w - 1]).slope;
        s["slope_long"] = fit_loglog_slope(curve, curve.tau[n - w], curve.tau[n - 1]).slope;
    }
}

void run_histogram(Context& c) {
    auto& p = c.params;
    auto shape = read_shape(p);
    const auto target = p.optional_positive("target_separation_sigmas");
    const auto n_shots = static_cast<std::size_t>(p.integer("n_shots", 100000, 10));
    const auto bins = static_cast<std::size_t>(p.integer("bins", 60, 2));
    const double q_ratio = p.positive("q_variance_ratio", 0.5);
    const bool with_t1 = p.flag("relaxation", true);
    const auto write_shots = static_cast<std::size_t>(p.integer("write_shots", 0, 0));
    p.finish();
    const auto readout = make_readout(c, shape, target, q_ratio);

    ShotConfig sc;
    sc.n_shots = n_shots;
    sc.readout = readout;
    sc.t1 = with_t1 ? 1.0 / c.sys.gamma1 : INFINITY;
    sc.threads = c.threads;
    sc.init = InitState::ground();
    sc.seed = mix64(c.cfg.seed);
    ShotBatch batch = simulate_shots(sc);
    sc.init = InitState::excited();
    sc.seed = mix64(c.cfg.seed + 1);
    const ShotBatch be = simulate_shots(sc);
    batch.n_shots += be.n_shots;
    batch.i_vals.insert(batch.i_vals.end(), be.i_vals.begin(), be.i_vals.end());
    batch.q_vals.insert(batch.q_vals.end(), be.q_vals.begin(), be.q_vals.end());
    batch.labels.insert(batch.labels.end(), be.labels.begin(), be.labels.end());
    batch.jump_times.insert(batch.jump_times.end(), be.jump_times.begin(), be.jump_times.end());

    const auto m = assign_and_score(batch);
    const auto h = histogram(batch, bins, c.sys.eta);
    Table t("histogram", {"i_center", "q_center", "i_center_lossless", "count"});
    const std::size_t qb = h.q_edges.size() - 1;
    for (std::size_t i = 0; i + 1 < h.i_edges.size(); ++i) {
        const double ic = 0.5 * (h.i_edges[i] + h.i_edges[i + 1]);
        const double il = 0.5 * (h.i_edges_lossless[i] + h.i_edges_lossless[i + 1]);
        for (std::size_t q = 0; q < qb; ++q) {
            t.add_row({ic, 0.5 * (h.q_edges[q] + h.q_edges[q + 1]), il, as_int(h.counts[i * qb + q])});
        }
    }
    c.out.tables.push_back(std::move(t));
    if (write_shots) c.out.tables.push_back(shots_table(batch, write_shots));

    auto& s = c.out.summary;
    put_metrics(s, m);
    s["sigma_i"] = h.sigma_i;
    s["sigma_q"] = h.sigma_q;
    s["discrimination_oracle"] = 1.0 - 2.0 * numerics::normal_cdf(-0.5 * s["separation_sigmas"].get<double>());
    c.out.warnings.insert(c.out.warnings.end(), m.warnings.begin(), m.warnings.end());
    c.out.warnings.insert(c.out.warnings.end(), h.warnings.begin(), h.warnings.end());
}

void run_qnd_chain(Context& c) {
    auto& p = c.params;
    auto shape = read_shape(p);
    const auto target = p.optional_positive("target_separation_sigmas");
    const auto n_chains = static_cast<std::size_t>(p.integer("n_chains", 100000, 10));
    const auto n_repeats = static_cast<std::size_t>(p.integer("n_repeats", 2, 2));
    const double p_e = p.number("p_excited", 0.5);
    if (p_e < 0.0 || p_e > 1.0) throw ConfigError("experiment.p_excited", "must lie in [0, 1]");
    const double up_rate = p.number("excitation_rate_per_s", 0.0);
    if (up_rate < 0.0) throw ConfigError("experiment.excitation_rate_per_s", "must be non-negative");
    const double q_ratio = p.positive("q_variance_ratio", 0.5);
    const double latch_k = p.positive("latch_k", 2.0);
    const auto trace = static_cast<std::size_t>(p.integer("trace_chains", 20, 0));
    const auto bins = static_cast<std::size_t>(p.integer("bins", 80, 2));
    p.finish();

    ShotConfig sc;
    sc.n_shots = n_chains;
    sc.n_repeats = n_repeats;
    sc.seed = c.cfg.seed;
    sc.init = InitState::thermal(p_e);
    sc.t1 = 1.0 / c.sys.gamma1;
    sc.excitation_rate = up_rate;
    sc.readout = make_readout(c, shape, target, q_ratio);
    sc.threads = c.threads;
    const auto res = chain_measure(sc, latch_k);
    const auto& b = res.batch;

    Table rec("records", {"shot_idx", "repeat_idx", "init_label", "i_val", "q_val", "assigned", "latched"});
    for (std::size_t r = 0; r < std::min(trace, b.n_shots) * b.n_repeats; ++r) {
        rec.add_row({as_int(r / b.n_repeats), as_int(r % b.n_repeats), label(b.labels[r]), b.i_vals[r], b.q_vals[r],
                     label(res.assigned[r]), label(res.latched[r])});
    }
    c.out.tables.push_back(std::move(rec));

    // Second-measurement I distribution after heralding by the first (strict cut at the fitted means).
    const auto& m = res.metrics;
    const double dir = m.fit_e.mean >= m.fit_g.mean ? 1.0 : -1.0;
    const auto [lo_it, hi_it] = std::minmax_element(b.i_vals.begin(), b.i_vals.end());
    const double lo = *lo_it, width = (*hi_it - *lo_it) / static_cast<double>(bins);
    std::vector<std::int64_t> hg(bins, 0), he(bins, 0);
    for (std::size_t s = 0; s < b.n_shots; ++s) {
        const double first = b.i_vals[s * b.n_repeats];
        const double second = b.i_vals[s * b.n_repeats + 1];
        const auto k = std::min(bins - 1, static_cast<std::size_t>((second - lo) / width));
        if (dir * (first - m.fit_g.mean) < 0.0) ++hg[k];
        if (dir * (first - m.fit_e.mean) > 0.0) ++he[k];
    }
    Table ht("heralded_histogram", {"i_center", "count_heralded_g", "count_heralded_e"});
    for (std::size_t k = 0; k < bins; ++k) ht.add_row({lo + (k + 0.5) * width, hg[k], he[k]});
    c.out.tables.push_back(std::move(ht));

    auto& s = c.out.summary;
    put_metrics(s, m);
    s["kept_fraction_g"] = res.kept_fraction_g;
    s["kept_fraction_e"] = res.kept_fraction_e;
    s["minority_weight_g"] = res.minority_weight_g;
    s["minority_weight_e"] = res.minority_weight_e;
    std::size_t jumps = 0;
    for (std::size_t r = 1; r < res.latched.size(); ++r) {
        if (r % b.n_repeats != 0 && res.latched[r] != res.latched[r - 1]) ++jumps;
    }
    s["latched_jumps"] = jumps;
    c.out.warnings.insert(c.out.warnings.end(), m.warnings.begin(), m.warnings.end());
}

void run_spectator(Context& c) {
    auto& p = c.params;
    auto shape = read_shape(p);
    SpectatorConfig sc;
    sc.chi_spectator = hz_to_rad(p.positive("chi_spectator_hz", c.cfg.system.chi_qc_hz));
    sc.sequence_length = p.positive("sequence_length_s", 1e-6);
    const auto echoes = p.numbers("n_echo", {0, 1, 2, 3, 4, 5, 6, 7, 8});
    sc.n_shots = static_cast<std::size_t>(p.integer("n_shots", 2000, 2));
    sc.p_e = p.number("p_excited", 0.5);
    if (sc.p_e < 0.0 || sc.p_e > 1.0) throw ConfigError("experiment.p_excited", "must lie in [0, 1]");
    sc.t1 = p.flag("relaxation", true) ? 1.0 / c.sys.gamma1 : INFINITY;
    sc.measurement_on = p.flag("measurement_on", true);
    sc.noise_rate = p.optional_positive("noise_rate_per_s");
    p.finish();
    sc.traj = shape.trajectory(c.sys.kappa);
    sc.seed = c.cfg.seed;
    sc.threads = c.threads;

    Table t("spectator", {"n_echo", "contrast_ratio", "stderr", "stark_phase_rad", "noise_variance_rad2"});
    double mean_photons = 0.0;
    for (std::size_t k = 0; k < echoes.size(); ++k) {
        const double n = echoes[k];
        if (n < 0.0 || n != std::floor(n)) {
            throw ConfigError("experiment.n_echo[" + std::to_string(k) + "]", "must be a non-negative integer");
        }
        sc.n_echo = static_cast<std::size_t>(n);
        const auto r = spectator_dephasing(sc);
        t.add_row({as_int(r.n_echo), r.contrast_ratio, r.stderr_ratio, r.stark_phase, r.noise_variance});
        mean_photons = r.mean_photons;
    }
    c.out.tables.push_back(std::move(t));
    auto& s = c.out.summary;
    s["mean_photons"] = mean_photons;
    s["gamma_d_per_s"] = mean_photons * sc.chi_spectator * sc.chi_spectator / c.sys.kappa;
}

void run_efficiency(Context& c) {
    auto& p = c.params;
    auto shape = read_shape(p);
    std::vector<double> amps;
    for (int k = 1; k <= 12; ++k) amps.push_back(0.15 * k);
    amps = p.numbers("amplitudes", amps);
    const double eta = p.positive("eta_true", c.sys.eta);
    if (eta > 1.0) throw ConfigError("experiment.eta_true", "must lie in (0, 1]");
    const double noise = p.number("relative_noise", 0.01);
    if (noise < 0.0) throw ConfigError("experiment.relative_noise", "must be non-negative");
    p.finish();

    const auto data = synthesize_efficiency_data(shape.trajectory(c.sys.kappa), eta, amps, noise, c.cfg.seed);
    Table ramsey("ramsey", {"amplitude", "contrast"});
    for (const auto& pt : data.ramsey) ramsey.add_row({pt.amplitude, pt.value});
    Table snr("snr", {"amplitude", "snr"});
    for (const auto& pt : data.snr) snr.add_row({pt.amplitude, pt.value});
    c.out.tables.push_back(std::move(ramsey));
    c.out.tables.push_back(std::move(snr));

    const auto fit = extract_efficiency(data.ramsey, data.snr);
    auto& s = c.out.summary;
    s["eta_true"] = eta;
    s["eta"] = fit.eta;
    s["sigma_d"] = fit.sigma_d;
    s["slope"] = fit.slope;
    s["r2_contrast"] = fit.r2_contrast;
    s["r2_snr"] = fit.r2_snr;
}

void run_cancellation(Context& c) {
    auto& p = c.params;
    CancellationSetup s;
    s.drive_ref = hz_to_rad(p.positive("drive_hz", 0.3 * c.cfg.system.kappa_hz));
    s.leakage = std::polar(p.number("leakage_amplitude", 1.0), p.number("leakage_phase_rad", 0.0));
    const double zeta = hz_to_rad(p.number("zeta_hz", 1.28e6));
    const double duration = p.positive("duration_s", 750e-9);
    s.dt = p.positive("dt_s", 1e-9);
    s.zeta.assign(steps_for(duration, s.dt), cplx(zeta, 0.0));
    s.chi = hz_to_rad(p.number("chi_hz", c.cfg.system.chi_qc_hz));
    s.kappa = c.sys.kappa;

    const double a0 = p.number("amp_min", 0.0);
    const double a1 = p.number("amp_max", 2.0);
    const auto na = p.integer("amp_points", 41, 2);
    const auto np = p.integer("phase_points", 72, 1);
    if (a1 <= a0) throw ConfigError("experiment.amp_max", "must exceed amp_min");
    p.finish();
    CancellationGrid g;
    for (std::int64_t k = 0; k < na; ++k) g.amps.push_back(a0 + static_cast<double>(k) * (a1 - a0) / (na - 1));
    for (std::int64_t k = 0; k < np; ++k) g.phases.push_back(2.0 * std::numbers::pi * k / np);

    const auto r = tune_cancellation(s, g);
    Table t("residual", {"amp", "phase", "residual"});
    for (std::size_t i = 0; i < g.amps.size(); ++i) {
        for (std::size_t j = 0; j < g.phases.size(); ++j) {
            t.add_row({g.amps[i], g.phases[j], r.residual[i * g.phases.size() + j]});
        }
    }
    c.out.tables.push_back(std::move(t));
    auto& sum = c.out.summary;
    sum["best_amp"] = r.best_amp;
    sum["best_phase_rad"] = r.best_phase;
    sum["best_residual"] = r.best_residual;
    c.out.warnings.insert(c.out.warnings.end(), r.warnings.begin(), r.warnings.end());
}

Table trajectory_table(const ConditionalTrajectory& tr) {
    Table t("trajectory", {"t_s", "re_alpha_g", "im_alpha_g", "re_alpha_e", "im_alpha_e", "re_out_g", "im_out_g",
                           "re_out_e", "im_out_e"});
    for (std::size_t n = 0; n < tr.size(); ++n) {
        t.add_row({tr.time(n), tr.alpha_g[n].real(), tr.alpha_g[n].imag(), tr.alpha_e[n].real(), tr.alpha_e[n].imag(),
                   tr.out_g[n].real(), tr.out_g[n].imag(), tr.out_e[n].real(), tr.out_e[n].imag()});
    }
    return t;
}

void run_depletion(Context& c) {
    auto& p = c.params;
    ReadoutShape shape;
    shape.zeta = hz_to_rad(p.positive("zeta_hz", 1.28e6));
    shape.readout_s = p.positive("readout_s", 750e-9);
    shape.multiplier = p.number("depletion_multiplier", -2.0);
    shape.dt = p.positive("dt_s", 1e-9);
    p.finish();

    const auto ring = shape.trajectory(c.sys.kappa);
    const cplx alpha0 = ring.alpha_e.back();
    const double t_dep = design_depletion(alpha0, cplx(shape.zeta, 0.0), shape.multiplier, c.sys.kappa);
    shape.depletion_s = static_cast<double>(steps_for(t_dep, shape.dt)) * shape.dt;
    const auto tr = shape.trajectory(c.sys.kappa);
    c.out.tables.push_back(trajectory_table(tr));

    auto& s = c.out.summary;
    s["depletion_s"] = t_dep;
    s["depletion_s_on_grid"] = shape.depletion_s;
    s["photons_before_depletion"] = std::norm(alpha0);
    s["residual_photons_g"] = std::norm(tr.alpha_g.back());
    s["residual_photons_e"] = std::norm(tr.alpha_e.back());
}

void run_frame_check(Context& c) {
    auto& p = c.params;
    const double zeta = hz_to_rad(p.positive("zeta_hz", 1.28e6));
    const double ring = p.positive("ring_s", 40e-9);
    const double flat = p.positive("flat_s", 100e-9);
    const bool filter = p.flag("use_filter", false);
    const double delta = filter ? c.sys.omega_c - c.sys.omega_f : c.sys.omega_c - c.sys.omega_q;
    const double dt = p.positive("dt_s", 0.05 / std::abs(delta));
    const auto max_rows = static_cast<std::size_t>(p.integer("max_rows", 2000, 2));
    p.finish();

    const auto derived = derive_couplings(c.sys);
    const DriveEnvelope unit{dt, {cplx(1.0, 0.0)}, 0.0};
    const double per_eps = std::abs(zeta_of_envelope(unit, derived, c.sys, filter)[0]);
    const double eps = zeta / per_eps;
    const std::vector<Segment> segs = {
        {SegmentKind::tanh_ramp, cplx(eps, 0.0), ring},
        {SegmentKind::constant, cplx(eps, 0.0), flat},
        {SegmentKind::tanh_ramp, cplx(0.0, 0.0), ring},
    };
    const auto env = make_envelope(segs, dt);
    const auto sol = solve_frame(env, c.sys, filter);
    const auto adiabatic = zeta_of_envelope(env, derived, c.sys, filter);

    double peak = 0.0, worst = 0.0;
    for (const cplx& z : adiabatic) peak = std::max(peak, std::abs(z));
    for (std::size_t k = 0; k < adiabatic.size(); ++k) worst = std::max(worst, std::abs(sol.zeta[k] - adiabatic[k]));

    Table t("frame", {"t_s", "re_eps_hz", "im_eps_hz", "re_zeta_hz", "im_zeta_hz", "re_zeta_adiabatic_hz",
                      "im_zeta_adiabatic_hz"});
    const std::size_t stride = std::max<std::size_t>(1, (env.samples.size() + max_rows - 1) / max_rows);
    for (std::size_t k = 0; k < env.samples.size(); k += stride) {
        const cplx e = env.samples[k] / kTwoPi, z = sol.zeta[k] / kTwoPi, a = adiabatic[k] / kTwoPi;
        t.add_row({static_cast<double>(k) * dt, e.real(), e.imag(), z.real(), z.imag(), a.real(), a.imag()});
    }
    c.out.tables.push_back(std::move(t));

    auto& s = c.out.summary;
    s["detuning_hz"] = rad_to_hz(delta);
    s["drive_hz"] = rad_to_hz(eps);
    s["dt_s"] = dt;
    s["samples"] = env.samples.size();
    s["resonant_residual"] = sol.resonant_residual;
    s["max_deviation_relative"] = peak > 0.0 ? worst / peak : 0.0;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, unsigned threads) {
    std::vector<std::string> warnings;
    const SystemParams sys = to_system_params(cfg.system, &warnings);
    Context c{cfg, sys, ParamReader(cfg.params), std::max(1u, threads), {}};
    c.out.warnings = std::move(warnings);
    const std::string& name = cfg.experiment;
    if (name == "snr-sweep") run_snr_sweep(c);
    else if (name == "histogram") run_histogram(c);
    else if (name == "qnd-chain") run_qnd_chain(c);
    else if (name == "spectator-echo") run_spectator(c);
    else if (name == "efficiency-calib") run_efficiency(c);
    else if (name == "cancellation-tune") run_cancellation(c);
    else if (name == "depletion-design") run_depletion(c);
    else if (name == "frame-check") run_frame_check(c);
    else throw ConfigError("experiment.name", "unknown experiment '" + name + "'");
    c.params.finish();
    c.out.effective_params = c.params.effective();
    c.out.summary["experiment"] = name;
    c.out.summary["warnings"] = c.out.warnings;
    return std::move(c.out);
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("cli", "sha256", "digest failed");
    }
    std::ostringstream os;
    for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg, const json& effective_params) {
    json j = to_json(cfg, &effective_params);
    j.erase("output");  // where results go does not change them
    return sha256_hex(j.dump());
}

void write_run(const ExperimentConfig& cfg, const RunOutput& out, double wall_time_s, unsigned threads) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("output.directory", "cannot create '" + dir.string() + "': " + ec.message());

    auto open = [&](const std::string& file) {
        std::ofstream os(dir / file, std::ios::binary);
        if (!os) throw ConfigError("output.directory", "cannot write '" + (dir / file).string() + "'");
        return os;
    };
    json outputs = json::array();
    for (const auto& t : out.tables) {
        const std::string file = t.name + (cfg.format == OutputFormat::csv ? ".csv" : ".json");
        auto os = open(file);
        if (cfg.format == OutputFormat::csv) write_csv(os, t);
        else os << to_json(t).dump() << '\n';
        outputs.push_back(file);
    }
    open("summary.json") << out.summary.dump(2) << '\n';
    outputs.push_back("summary.json");

    const json manifest = {
        {"tool", "cdreadout"},
        {"version", CDR_VERSION},
        {"config_sha256", config_hash(cfg, out.effective_params)},
        {"seed", cfg.seed},
        {"threads", threads},
        {"wall_time_s", wall_time_s},
        {"config", to_json(cfg, &out.effective_params)},
        {"outputs", outputs},
    };
    open("manifest.json") << manifest.dump(2) << '\n';
}

CompareReport compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b) {
    constexpr const char* op = "compare";
    const Table a = read_table(run_a, "snr");
    const Table b = read_table(run_b, "snr");
    CompareReport r;
    r.tau = a.column("tau_s");
    const auto tau_b = b.column("tau_s");
    if (r.tau.size() != tau_b.size() || r.tau.empty()) {
        throw ShapeError("cli", op, "tau grids differ in length (" + std::to_string(r.tau.size()) + " vs " +
                                        std::to_string(tau_b.size()) + ")");
    }
    for (std::size_t k = 0; k < r.tau.size(); ++k) {
        if (std::abs(r.tau[k] - tau_b[k]) > 1e-12 * std::abs(tau_b[k])) {
            throw ShapeError("cli", op, "tau grids differ at row " + std::to_string(k));
        }
    }
    r.snr_a = a.column("snr");
    r.snr_b = b.column("snr");
    for (std::size_t k = 0; k < r.tau.size(); ++k) {
        r.ratio.push_back(r.snr_b[k] != 0.0 ? r.snr_a[k] / r.snr_b[k] : std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t k = 0; k + 1 < r.tau.size(); ++k) {
        const double u = r.ratio[k] - 1.0, v = r.ratio[k + 1] - 1.0;
        if ((u > 0.0 && v <= 0.0) || (u < 0.0 && v >= 0.0)) {
            r.crossovers.push_back(r.tau[k] + (r.tau[k + 1] - r.tau[k]) * u / (u - v));
        }
    }
    if (r.ratio.front() > 1.0) r.a_dominates_until = r.crossovers.empty() ? r.tau.back() : r.crossovers.front();
    r.ratio_first = r.ratio.front();
    r.ratio_last = r.ratio.back();
    return r;
}

void write_compare(const std::filesystem::path& dir, const CompareReport& r, OutputFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("--out", "cannot create '" + dir.string() + "': " + ec.message());
    Table t("compare", {"tau_s", "snr_a", "snr_b", "ratio"});
    for (std::size_t k = 0; k < r.tau.size(); ++k) t.add_row({r.tau[k], r.snr_a[k], r.snr_b[k], r.ratio[k]});
    if (format == OutputFormat::csv) {
        std::ofstream os(dir / "compare.csv", std::ios::binary);
        write_csv(os, t);
    } else {
        std::ofstream os(dir / "compare.json", std::ios::binary);
        os << to_json(t).dump() << '\n';
    }
    const json summary = {
        {"crossovers_s", r.crossovers},
        {"a_dominates_until_s", r.a_dominates_until},
        {"ratio_first", r.ratio_first},
        {"ratio_last", r.ratio_last},
    };
    std::ofstream(dir / "compare_summary.json", std::ios::binary) << summary.dump(2) << '\n';
}

std::string format_compare(const CompareReport& r) {
    std::ostringstream os;
    os << "points: " << r.tau.size() << '\n';
    os << "ratio at tau = " << csv::format_double(r.tau.front()) << " s: " << csv::format_double(r.ratio_first) << '\n';
    os << "ratio at tau = " << csv::format_double(r.tau.back()) << " s: " << csv::format_double(r.ratio_last) << '\n';
    os << "crossovers:";
    if (r.crossovers.empty()) os << " none";
    for (double t : r.crossovers) os << ' ' << csv::format_double(t);
    os << '\n';
    if (r.a_dominates_until > 0.0) {
        os << "run A dominates up to tau = " << csv::format_double(r.a_dominates_until) << " s\n";
    } else {
        os << "run A does not dominate at short times\n";
    }
    return os.str();
}

}  // namespace cdr
