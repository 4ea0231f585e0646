// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "cdr/cavitydyn.hpp"
#include "cdr/config.hpp"
#include "cdr/demod.hpp"
#include "cdr/dephase.hpp"
#include "cdr/experiments.hpp"
#include "cdr/numerics.hpp"
#include "cdr/shotsim.hpp"

using namespace cdr;
namespace fs = std::filesystem;

namespace {

constexpr double kKappa = 1e7;
const double kZeta0 = hz_to_rad(1.28e6);

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

double rel(cplx a, cplx b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::abs(b);
}

/// 750 ns at zeta, 120 ns at -2 zeta, as in the measured pulse.
ConditionalTrajectory reference_readout(double zeta) {
    std::vector<cplx> z(750, cplx(zeta, 0.0));
    z.insert(z.end(), 120, cplx(-2 * zeta, 0.0));
    return evolve_longitudinal(z, kKappa, 1e-9);
}

ReadoutSetup setup_for(double target_sigmas, double eta, double q_ratio) {
    ReadoutSetup r;
    r.traj = reference_readout(kZeta0);
    r.env = optimal_envelope(r.traj);
    r.eta = eta;
    r.q_variance_ratio = q_ratio;
    const double zeta = kZeta0 * target_sigmas / separation_sigmas(r);
    r.traj = reference_readout(zeta);
    r.env = optimal_envelope(r.traj);
    return r;
}

Outcome ac1() {
    const std::vector<cplx> zeta(2000, cplx(kZeta0, 0.0));
    const auto lt = evolve_longitudinal(zeta, kKappa, 1e-9);
    const auto dt = evolve_dispersive(2e6, kKappa, kKappa, 2e-6, 1e-9);
    double worst = 0.0;
    for (std::size_t n = 0; n < lt.size(); ++n) {
        const double t = lt.time(n);
        worst = std::max({worst, rel(lt.alpha_e[n], longitudinal_closed_form(kZeta0, kKappa, 1, t)),
                          rel(lt.alpha_g[n], longitudinal_closed_form(kZeta0, kKappa, -1, t))});
    }
    for (std::size_t n = 0; n < dt.size(); ++n) {
        const double t = dt.time(n);
        worst = std::max({worst, rel(dt.alpha_e[n], dispersive_closed_form(2e6, kKappa, kKappa, 1, t)),
                          rel(dt.alpha_g[n], dispersive_closed_form(2e6, kKappa, kKappa, -1, t))});
    }
    return {worst <= 1e-9, "max relative deviation " + fmt(worst, 3)};
}

Outcome ac2() {
    double worst = 0.0;
    const double eps = 1e6;
    for (double x : log_grid(0.01, 20, 25)) {
        const double tau = x / kKappa;
        const auto lt = evolve_longitudinal(std::vector<cplx>(2000, cplx(kZeta0, 0.0)), kKappa, tau / 2000);
        const auto dt = evolve_dispersive(eps, kKappa, kKappa, tau, tau / 2000);
        auto snr = [](const ConditionalTrajectory& tr, const DemodEnvelope& env, std::optional<double> phi) {
            return snr_numeric(tr, env, phi, 1.0).snr.back();
        };
        const double pairs[4][2] = {
            {snr(lt, boxcar_envelope(lt.size(), lt.dt), std::nullopt), snr_longitudinal_boxcar(kZeta0, kKappa, tau)},
            {snr(lt, optimal_envelope(lt), std::nullopt), snr_longitudinal_optimal(kZeta0, kKappa, tau)},
            {snr(dt, boxcar_envelope(dt.size(), dt.dt), std::numbers::pi / 2), snr_dispersive_boxcar(eps, kKappa, kKappa, tau)},
            {snr(dt, optimal_envelope(dt), std::nullopt), snr_dispersive_optimal(eps, kKappa, kKappa, tau)},
        };
        for (const auto& p : pairs) worst = std::max(worst, std::abs(p[0] - p[1]) / p[1]);
    }
    return {worst <= 1e-6, "max relative deviation over 4 formulas x 25 times " + fmt(worst, 3)};
}

Outcome ac3() {
    // Numeric SNR curves from single trajectories, fitted on the stated windows.
    auto slope = [](const ConditionalTrajectory& tr, const DemodEnvelope& env, std::optional<double> phi, double x0,
                    double x1) {
        return fit_loglog_slope(snr_numeric(tr, env, phi, 1.0), x0 / kKappa, x1 / kKappa).slope;
    };
    const double fine = 1e-5 / kKappa, coarse = 0.01 / kKappa;
    const auto ls = evolve_longitudinal(std::vector<cplx>(1000, cplx(kZeta0, 0.0)), kKappa, fine);
    const auto ds = evolve_dispersive(1e6, kKappa, kKappa, 1e-2 / kKappa, fine);
    const auto ll = evolve_longitudinal(std::vector<cplx>(100000, cplx(kZeta0, 0.0)), kKappa, coarse);
    const auto dl = evolve_dispersive(1e6, kKappa, kKappa, 1000 / kKappa, coarse);

    const double l_short = slope(ls, optimal_envelope(ls), std::nullopt, 1e-3, 1e-2);
    const double d_short = slope(ds, boxcar_envelope(ds.size(), fine), std::numbers::pi / 2, 1e-3, 1e-2);
    const double l_long = slope(ll, optimal_envelope(ll), std::nullopt, 100, 1000);
    const double d_long = slope(dl, optimal_envelope(dl), std::nullopt, 100, 1000);
    const bool ok = std::abs(l_short - 1.5) <= 0.02 && std::abs(d_short - 2.5) <= 0.05 &&
                    std::abs(l_long - 0.5) <= 0.02 && std::abs(d_long - 0.5) <= 0.02;
    return {ok, "longitudinal short " + fmt(l_short, 5) + ", dispersive boxcar short " + fmt(d_short, 5) +
                    ", longitudinal long " + fmt(l_long, 5) + ", dispersive long " + fmt(d_long, 5)};
}

Outcome ac4() {
    const auto tr = evolve_longitudinal(std::vector<cplx>(6000, cplx(kZeta0, 0.0)), kKappa, 1e-9);
    const double n = std::norm(tr.alpha_e.back() - tr.alpha_g.back());
    return {std::abs(n - 2.59) <= 0.01, "|alpha_m|^2 = " + fmt(n, 5)};
}

Outcome ac5(unsigned threads) {
    ShotConfig cfg;
    cfg.n_shots = 750000;
    cfg.readout = setup_for(5.8, 0.6, 0.5);
    cfg.threads = threads;
    cfg.init = InitState::ground();
    cfg.seed = 5;
    auto batch = simulate_shots(cfg);
    cfg.init = InitState::excited();
    cfg.seed = 6;
    const auto be = simulate_shots(cfg);
    batch.n_shots += be.n_shots;
    batch.i_vals.insert(batch.i_vals.end(), be.i_vals.begin(), be.i_vals.end());
    batch.q_vals.insert(batch.q_vals.end(), be.q_vals.begin(), be.q_vals.end());
    batch.labels.insert(batch.labels.end(), be.labels.begin(), be.labels.end());
    batch.jump_times.insert(batch.jump_times.end(), be.jump_times.begin(), be.jump_times.end());

    const auto m = assign_and_score(batch);
    const double p = numerics::normal_cdf(-2.9);
    const double oracle = 1.0 - 2.0 * p;
    const double sigma = std::sqrt(2.0 * p * (1.0 - p) / 750000.0);
    const bool ok = std::abs(m.discrimination_power - 0.995) <= 0.0015 &&
                    std::abs(m.discrimination_power - oracle) <= 3.0 * sigma;
    return {ok, "D = " + fmt(m.discrimination_power) + ", oracle 1 - 2 Phi(-d/2) = " + fmt(oracle) +
                    ", binomial sigma " + fmt(sigma, 2)};
}

Outcome ac6(unsigned threads) {
    ShotConfig cfg;
    cfg.n_shots = 100000;
    cfg.n_repeats = 2;
    cfg.seed = 11;
    cfg.init = InitState::thermal(0.5);
    cfg.t1 = 90e-6;
    cfg.readout = setup_for(5.8, 0.6, 0.5);
    cfg.threads = threads;
    const auto res = chain_measure(cfg);
    const double f = res.metrics.f_total;
    const double q = res.metrics.qndness.value_or(0.0);
    const bool ok = f >= 0.968 && f <= 0.988 && q >= 0.974 && q <= 0.994;
    return {ok, "F = " + fmt(f) + " (band [0.968, 0.988]), Q = " + fmt(q) + " (band [0.974, 0.994]), F_g = " +
                    fmt(res.metrics.f_g) + ", F_e = " + fmt(res.metrics.f_e)};
}

Outcome ac7() {
    std::vector<double> amps;
    for (int k = 1; k <= 12; ++k) amps.push_back(0.15 * k);
    const auto data = synthesize_efficiency_data(reference_readout(kZeta0), 0.6, amps, 0.01, 7);
    const auto fit = extract_efficiency(data.ramsey, data.snr);
    return {std::abs(fit.eta - 0.6) <= 0.02, "eta = " + fmt(fit.eta, 5) + " from 1% noisy synthetic data"};
}

Outcome ac8() {
    std::mt19937_64 eng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<cplx> zeta(600);
        for (auto& z : zeta) z = kZeta0 * cplx(u(eng), u(eng));
        const auto tr = evolve_combined(kKappa * cplx(u(eng), u(eng)), zeta, kKappa * (0.5 + 0.5 * u(eng)), kKappa, 1e-9);
        const double snr = snr_numeric(tr, optimal_envelope(tr), std::nullopt, 1.0).snr.back();
        const double g = measurement_dephasing(tr).gamma_m;
        worst = std::max(worst, std::abs(snr * snr - 4 * g) / (4 * g));
    }
    return {worst <= 1e-6, "max relative deviation " + fmt(worst, 3) + " over 20 random trajectories"};
}

Outcome ac9(unsigned threads) {
    SpectatorConfig c;
    c.traj = reference_readout(kZeta0);
    c.chi_spectator = hz_to_rad(1e5);
    c.sequence_length = 1e-6;
    c.t1 = 90e-6;
    c.n_shots = 2000;
    c.seed = 3;
    c.threads = threads;
    bool ok = true;
    std::string detail;
    double max_err = 0.0;
    for (std::size_t n = 0; n <= 6; ++n) {
        c.n_echo = n;
        const auto r = spectator_dephasing(c);
        max_err = std::max(max_err, r.stderr_ratio);
        if (n == 0) ok = ok && r.contrast_ratio >= 0.9;
        if (n >= 3) ok = ok && r.contrast_ratio >= 0.99;
        detail += "N=" + std::to_string(n) + ":" + fmt(r.contrast_ratio, 5) + " ";
    }
    ok = ok && max_err < 0.005;
    return {ok, detail + "max stderr " + fmt(max_err, 2)};
}

Outcome ac10() {
    CancellationSetup s;
    s.drive_ref = cplx(0.3 * kKappa, 0.0);
    s.leakage = cplx(1.0, 0.0);
    s.zeta.assign(750, cplx(kZeta0, 0.0));
    s.kappa = kKappa;
    s.dt = 1e-9;
    CancellationGrid g;
    for (int k = 0; k <= 40; ++k) g.amps.push_back(0.05 * k);
    for (int k = 0; k < 72; ++k) g.phases.push_back(2 * std::numbers::pi * k / 72);
    const auto r = tune_cancellation(s, g);
    const bool ok = r.best_amp == 1.0 && std::abs(r.best_phase - std::numbers::pi) < 1e-12 && r.best_residual < 1e-10;
    return {ok, "argmin amplitude " + fmt(r.best_amp) + ", phase " + fmt(r.best_phase) + " rad, residual " +
                    fmt(r.best_residual, 3)};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome ac11() {
    const fs::path root = fs::temp_directory_path() / "cdr_acceptance_determinism";
    fs::remove_all(root);
    std::size_t files = 0, runs = 0;
    std::string mismatch;
    for (const auto& entry : fs::directory_iterator(CDR_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        auto cfg = load_config(entry.path());
        const std::string stem = entry.path().stem().string();
        for (unsigned threads : {1u, 3u, 3u}) {
            cfg.out_dir = (root / (stem + "_" + std::to_string(runs++))).string();
            write_run(cfg, run_experiment(cfg, threads), 0.0, threads);
        }
        const fs::path a = root / (stem + "_" + std::to_string(runs - 3));
        for (const auto& f : fs::directory_iterator(a)) {
            const auto name = f.path().filename();
            if (name == "manifest.json") continue;  // records wall time and thread count
            ++files;
            for (std::size_t k : {runs - 2, runs - 1}) {
                if (slurp(f.path()) != slurp(root / (stem + "_" + std::to_string(k)) / name)) {
                    mismatch += " " + stem + "/" + name.string();
                }
            }
        }
    }
    fs::remove_all(root);
    if (!mismatch.empty()) return {false, "differing outputs:" + mismatch};
    return {files > 0, std::to_string(files) + " output files identical across threads 1, 3, 3"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--only", only, "Run only these criterion numbers");
    app.add_option("--threads", threads, "Worker threads for Monte Carlo criteria")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "closed-form vs RK4 trajectories", 1.0, ac1},
        {2, "SNR closed forms vs quadrature", 5.0, ac2},
        {3, "asymptotic SNR scaling exponents", 1.0, ac3},
        {4, "steady-state photon number", 1.0, ac4},
        {5, "discrimination power at 5.8 sigma", 30.0, [&] { return ac5(threads); }},
        {6, "fidelity and QND-ness with T1 = 90 us", 60.0, [&] { return ac6(threads); }},
        {7, "efficiency closed loop", 10.0, ac7},
        {8, "gamma_m = SNR^2 / 4 identity", 5.0, ac8},
        {9, "spectator echoes", 60.0, [&] { return ac9(threads); }},
        {10, "cancellation tuning", 5.0, ac10},
        {11, "determinism across runs and thread counts", 0.0, ac11},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt(secs, 3) + " s";
        if (c.budget_s > 0.0) {
            timing += " / " + fmt(c.budget_s, 3) + " s";
            if (secs >= c.budget_s) {
                o.pass = false;
                o.detail += " [over time budget]";
            }
        }
        failed += o.pass ? 0 : 1;
        std::cout << "AC" << c.id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << c.title << ": " << o.detail << " ("
                  << timing << ")" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
