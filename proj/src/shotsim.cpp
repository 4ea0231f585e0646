#include "cdr/shotsim.hpp"

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

constexpr double kMadToSigma = 1.4826;
constexpr double kOverlapWarn = 0.4;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void validate_readout(const ReadoutSetup& r, const char* op) {
    if (r.env.weights.size() != r.traj.size() || std::abs(r.env.dt - r.traj.dt) > 1e-12 * r.traj.dt) {
        throw ShapeError("shotsim", op, "demodulation envelope grid does not match trajectory grid");
    }
    if (r.traj.size() < 2) throw ShapeError("shotsim", op, "trajectory needs at least two samples");
    if (!(r.eta > 0.0 && r.eta <= 1.0)) throw ValidationError("shotsim", op, "eta", "must lie in (0, 1]");
    if (!(r.q_variance_ratio > 0.0)) throw ValidationError("shotsim", op, "q_variance_ratio", "must be positive");
}

// Demodulated outcome of one window in noise-std units, with an optional
// branch switch at jump time t_j (signal spliced from the running integrals).
class WindowModel {
public:
    explicit WindowModel(const ReadoutSetup& r) : dt_(r.traj.dt), window_(r.traj.duration()) {
        const std::size_t n = r.traj.size();
        std::vector<cplx> fg(n), fe(n);
        std::vector<double> k2(n);
        for (std::size_t k = 0; k < n; ++k) {
            fg[k] = r.env.weights[k] * r.traj.out_g[k];
            fe[k] = r.env.weights[k] * r.traj.out_e[k];
            k2[k] = std::norm(r.env.weights[k]);
        }
        const double noise = numerics::trapezoid<double>(k2, dt_);
        if (!(noise > 0.0)) throw DomainError("shotsim", "simulate_shots", "demodulation envelope is zero");
        const double phi = r.phi_demod ? *r.phi_demod
                           : r.env.kind == EnvelopeKind::optimal ? 0.0
                                                                 : best_demod_phase(r.traj, r.env);
        // Unit I-noise std: per-state noise is half the summed variance in the
        // SNR denominator, so the separation is sqrt(2) * SNR.
        rot_ = std::polar(2.0 * std::sqrt(r.eta) / std::sqrt(noise), -phi);
        s_g_ = numerics::cumulative_trapezoid<cplx>(fg, dt_);
        s_e_ = numerics::cumulative_trapezoid<cplx>(fe, dt_);
    }

    double window() const noexcept { return window_; }

    cplx outcome(QubitState start, double t_jump) const {
        const auto& a = start == QubitState::e ? s_e_ : s_g_;
        if (std::isnan(t_jump)) return rot_ * a.back();
        const auto& b = start == QubitState::e ? s_g_ : s_e_;
        const cplx before = numerics::interpolate<cplx>(a, dt_, t_jump);
        const cplx after = b.back() - numerics::interpolate<cplx>(b, dt_, t_jump);
        return rot_ * (before + after);
    }

private:
    double dt_;
    double window_;
    cplx rot_;
    std::vector<cplx> s_g_, s_e_;
};

double fraction_beyond(const std::vector<double>& sorted, double th, bool above) {
    if (sorted.empty()) return 0.0;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), th);
    const auto below = static_cast<double>(it - sorted.begin());
    const auto n = static_cast<double>(sorted.size());
    return above ? (n - below) / n : below / n;
}

// Golden-section search on a unimodal-ish function over [a, b].
template <class F>
double golden_min(F&& f, double a, double b) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

struct Classifier {
    double threshold;
    bool e_high;
    QubitState operator()(double i) const {
        return (e_high ? i > threshold : i < threshold) ? QubitState::e : QubitState::g;
    }
};

}  // namespace

double separation_sigmas(const ReadoutSetup& readout) {
    validate_readout(readout, "separation_sigmas");
    const WindowModel model(readout);
    return std::abs(model.outcome(QubitState::e, kNan).real() - model.outcome(QubitState::g, kNan).real());
}

ShotBatch simulate_shots(const ShotConfig& cfg) {
    constexpr const char* op = "simulate_shots";
    validate_readout(cfg.readout, op);
    if (cfg.n_shots < 1) throw ValidationError("shotsim", op, "n_shots", "must be at least 1");
    if (cfg.n_repeats < 1) throw ValidationError("shotsim", op, "n_repeats", "must be at least 1");
    if (!(cfg.t1 > 0.0)) throw ValidationError("shotsim", op, "t1", "must be positive");
    if (!(cfg.excitation_rate >= 0.0)) throw ValidationError("shotsim", op, "excitation_rate", "must be non-negative");
    if (!(cfg.init.p_e >= 0.0 && cfg.init.p_e <= 1.0)) throw ValidationError("shotsim", op, "p_e", "must lie in [0, 1]");

    const WindowModel model(cfg.readout);
    const double decay_rate = std::isinf(cfg.t1) ? 0.0 : 1.0 / cfg.t1;
    const double q_std = std::sqrt(cfg.readout.q_variance_ratio);

    ShotBatch batch;
    batch.n_shots = cfg.n_shots;
    batch.n_repeats = cfg.n_repeats;
    const std::size_t total = cfg.n_shots * cfg.n_repeats;
    batch.i_vals.resize(total);
    batch.q_vals.resize(total);
    batch.labels.resize(total);
    batch.jump_times.resize(total);

    parallel_for(cfg.n_shots, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t shot = begin; shot < end; ++shot) {
            auto eng = stream_engine(cfg.seed, shot);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);

            const double u0 = uni(eng);
            QubitState state = cfg.init.kind == InitState::Kind::e ? QubitState::e
                               : cfg.init.kind == InitState::Kind::g ? QubitState::g
                               : (u0 < cfg.init.p_e ? QubitState::e : QubitState::g);
            for (std::size_t rep = 0; rep < cfg.n_repeats; ++rep) {
                const std::size_t r = shot * cfg.n_repeats + rep;
                const double rate = state == QubitState::e ? decay_rate : cfg.excitation_rate;
                const double u = uni(eng);
                double t_jump = kNan;
                if (rate > 0.0) {
                    const double t = -std::log1p(-u) / rate;
                    if (t < model.window()) t_jump = t;
                }
                const cplx z = model.outcome(state, t_jump);
                const double ni = gauss(eng);
                const double nq = gauss(eng);
                batch.labels[r] = state;
                batch.jump_times[r] = t_jump;
                batch.i_vals[r] = z.real() + ni;
                batch.q_vals[r] = z.imag() + q_std * nq;
                if (!std::isnan(t_jump)) state = flipped(state);
            }
        }
    });
    return batch;
}

GaussianFit fit_gaussian(std::span<const double> values) {
    GaussianFit fit;
    fit.count = values.size();
    if (values.empty()) return fit;
    std::vector<double> v(values.begin(), values.end());
    auto median = [](std::vector<double>& x) {
        const std::size_t m = x.size() / 2;
        std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
        double med = x[m];
        if (x.size() % 2 == 0) {
            med = 0.5 * (med + *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m)));
        }
        return med;
    };
    fit.mean = median(v);
    for (double& x : v) x = std::abs(x - fit.mean);
    fit.sigma = kMadToSigma * median(v);
    return fit;
}

ReadoutMetrics assign_and_score(const ShotBatch& batch, std::optional<double> threshold) {
    constexpr const char* op = "assign_and_score";
    std::vector<double> ig, ie, ig_clean, ie_clean;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const bool e = batch.labels[r] == QubitState::e;
        (e ? ie : ig).push_back(batch.i_vals[r]);
        if (!batch.jumped(r)) (e ? ie_clean : ig_clean).push_back(batch.i_vals[r]);
    }
    if (ig.empty() || ie.empty()) throw DomainError("shotsim", op, "batch must contain both g and e labels");

    ReadoutMetrics m;
    m.fit_g = fit_gaussian(ig);
    m.fit_e = fit_gaussian(ie);
    const bool e_high = m.fit_e.mean >= m.fit_g.mean;
    const double var_sum = m.fit_g.sigma * m.fit_g.sigma + m.fit_e.sigma * m.fit_e.sigma;
    const double gap = std::abs(m.fit_e.mean - m.fit_g.mean);
    m.sigma_i = std::sqrt(0.5 * var_sum);
    m.snr_measured = var_sum > 0.0 ? gap / std::sqrt(var_sum) : 0.0;
    m.separation_sigmas = m.sigma_i > 0.0 ? gap / m.sigma_i : 0.0;

    for (auto* v : {&ig, &ie, &ig_clean, &ie_clean}) std::sort(v->begin(), v->end());
    // p(e|g) + p(g|e) for a candidate threshold on the given populations.
    auto errors = [e_high](const std::vector<double>& g, const std::vector<double>& e, double th) {
        const double p_eg = fraction_beyond(g, th, e_high);
        const double p_ge = fraction_beyond(e, th, !e_high);
        return std::pair{p_eg, p_ge};
    };
    if (threshold) {
        m.threshold = *threshold;
    } else if (gap > 0.0) {
        const double lo = std::min(m.fit_g.mean, m.fit_e.mean);
        const double hi = std::max(m.fit_g.mean, m.fit_e.mean);
        m.threshold = golden_min(
            [&](double th) {
                const auto [a, b] = errors(ig, ie, th);
                return a + b;
            },
            lo, hi);
    } else {
        m.threshold = m.fit_g.mean;
    }

    const auto [p_eg, p_ge] = errors(ig, ie, m.threshold);
    m.f_g = 1.0 - p_eg;
    m.f_e = 1.0 - p_ge;
    m.f_total = m.f_g + m.f_e - 1.0;
    if (!ig_clean.empty() && !ie_clean.empty()) {
        const auto [c_eg, c_ge] = errors(ig_clean, ie_clean, m.threshold);
        m.discrimination_power = 1.0 - c_eg - c_ge;
    } else {
        m.discrimination_power = m.f_total;
    }

    if (batch.n_repeats >= 2) {
        const Classifier cls{m.threshold, e_high};
        std::size_t n_e = 0, n_ee = 0, n_g = 0, n_gg = 0;
        for (std::size_t s = 0; s < batch.n_shots; ++s) {
            for (std::size_t k = 0; k + 1 < batch.n_repeats; ++k) {
                const std::size_t r = s * batch.n_repeats + k;
                const QubitState a = cls(batch.i_vals[r]);
                const QubitState b = cls(batch.i_vals[r + 1]);
                if (a == QubitState::e) {
                    ++n_e;
                    n_ee += b == QubitState::e;
                } else {
                    ++n_g;
                    n_gg += b == QubitState::g;
                }
            }
        }
        if (n_e > 0 && n_g > 0) {
            m.qndness = 0.5 * (static_cast<double>(n_ee) / static_cast<double>(n_e) +
                               static_cast<double>(n_gg) / static_cast<double>(n_g));
        }
    }

    const double overlap = 2.0 * numerics::normal_cdf(-0.5 * m.separation_sigmas);
    if (overlap > kOverlapWarn) {
        m.warnings.push_back("metric-degenerate: fitted distributions overlap by more than 40%");
    }
    return m;
}

Histogram2D histogram(const ShotBatch& batch, std::size_t bins, double eta) {
    constexpr const char* op = "histogram";
    if (batch.size() == 0) throw DomainError("shotsim", op, "batch is empty");
    if (bins < 1) throw ValidationError("shotsim", op, "bins", "must be at least 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("shotsim", op, "eta", "must lie in (0, 1]");

    Histogram2D h;
    if (batch.size() < 100) h.warnings.push_back("fewer than 100 shots: Gaussian width fit is unreliable");

    // Width per label (pooled) when both labels are present, otherwise of the whole batch.
    auto pooled_sigma = [&](const std::vector<double>& vals) {
        std::vector<double> g, e;
        for (std::size_t r = 0; r < batch.size(); ++r) (batch.labels[r] == QubitState::e ? e : g).push_back(vals[r]);
        if (g.empty() || e.empty()) return fit_gaussian(vals).sigma;
        const double sg = fit_gaussian(g).sigma, se = fit_gaussian(e).sigma;
        return std::sqrt(0.5 * (sg * sg + se * se));
    };
    h.sigma_i = pooled_sigma(batch.i_vals);
    h.sigma_q = pooled_sigma(batch.q_vals);
    if (!(h.sigma_i > 0.0) || !(h.sigma_q > 0.0)) throw DomainError("shotsim", op, "zero fitted width");

    auto edges_for = [&](const std::vector<double>& vals, double sigma) {
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        const double a = *lo / sigma, b = *hi / sigma;
        const double width = (b > a ? b - a : 1.0) / static_cast<double>(bins);
        std::vector<double> e(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) e[k] = a + width * static_cast<double>(k);
        return e;
    };
    h.i_edges = edges_for(batch.i_vals, h.sigma_i);
    h.q_edges = edges_for(batch.q_vals, h.sigma_q);
    h.i_edges_lossless.resize(h.i_edges.size());
    for (std::size_t k = 0; k < h.i_edges.size(); ++k) h.i_edges_lossless[k] = h.i_edges[k] / std::sqrt(eta);

    auto bin_of = [bins](const std::vector<double>& edges, double x) {
        const double w = edges[1] - edges[0];
        const auto k = static_cast<std::ptrdiff_t>(std::floor((x - edges[0]) / w));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins) - 1));
    };
    h.counts.assign(bins * bins, 0);
    h.i_marginal.assign(bins, 0);
    h.q_marginal.assign(bins, 0);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const std::size_t bi = bin_of(h.i_edges, batch.i_vals[r] / h.sigma_i);
        const std::size_t bq = bin_of(h.q_edges, batch.q_vals[r] / h.sigma_q);
        ++h.counts[bi * bins + bq];
        ++h.i_marginal[bi];
        ++h.q_marginal[bq];
    }
    return h;
}

ChainResult chain_measure(const ShotConfig& cfg, double latch_k) {
    constexpr const char* op = "chain_measure";
    if (cfg.n_repeats < 2) throw ValidationError("shotsim", op, "n_repeats", "chains need at least 2 windows");
    if (!(latch_k >= 0.0)) throw ValidationError("shotsim", op, "latch_k", "must be non-negative");

    ChainResult out;
    out.batch = simulate_shots(cfg);
    const ShotBatch& b = out.batch;
    out.metrics = assign_and_score(b);
    ReadoutMetrics& m = out.metrics;

    const bool e_high = m.fit_e.mean >= m.fit_g.mean;
    const double sgn = e_high ? 1.0 : -1.0;
    const Classifier cls{m.threshold, e_high};
    out.assigned.resize(b.size());
    for (std::size_t r = 0; r < b.size(); ++r) out.assigned[r] = cls(b.i_vals[r]);

    // Strict herald: first outcome beyond the mean of its own distribution.
    std::size_t pairs = 0, herald_g = 0, herald_e = 0, g_then_e = 0, e_then_g = 0;
    for (std::size_t s = 0; s < b.n_shots; ++s) {
        for (std::size_t k = 0; k + 1 < b.n_repeats; ++k) {
            const std::size_t r = s * b.n_repeats + k;
            ++pairs;
            const double x = sgn * b.i_vals[r];
            if (x < sgn * m.fit_g.mean) {
                ++herald_g;
                g_then_e += out.assigned[r + 1] == QubitState::e;
            } else if (x > sgn * m.fit_e.mean) {
                ++herald_e;
                e_then_g += out.assigned[r + 1] == QubitState::g;
            }
        }
    }
    if (herald_g == 0 || herald_e == 0) throw DomainError("shotsim", op, "post-selection left no pairs for a state");
    const auto frac = [](std::size_t a, std::size_t n) { return static_cast<double>(a) / static_cast<double>(n); };
    out.kept_fraction_g = frac(herald_g, pairs);
    out.kept_fraction_e = frac(herald_e, pairs);
    out.minority_weight_g = frac(g_then_e, herald_g);
    out.minority_weight_e = frac(e_then_g, herald_e);
    m.f_g = 1.0 - out.minority_weight_g;
    m.f_e = 1.0 - out.minority_weight_e;
    m.f_total = m.f_g + m.f_e - 1.0;

    // Hysteresis latch: switch to e only above mu_e - k sigma_e, back to g only below mu_g + k sigma_g.
    double enter_e = sgn * m.fit_e.mean - latch_k * m.fit_e.sigma;
    double enter_g = sgn * m.fit_g.mean + latch_k * m.fit_g.sigma;
    if (enter_e < enter_g) enter_e = enter_g = sgn * m.threshold;  // bands cross: no hysteresis left
    out.latched.resize(b.size());
    for (std::size_t s = 0; s < b.n_shots; ++s) {
        QubitState cur = out.assigned[s * b.n_repeats];
        for (std::size_t k = 0; k < b.n_repeats; ++k) {
            const std::size_t r = s * b.n_repeats + k;
            const double x = sgn * b.i_vals[r];
            if (cur == QubitState::g && x > enter_e) cur = QubitState::e;
            else if (cur == QubitState::e && x < enter_g) cur = QubitState::g;
            out.latched[r] = cur;
        }
    }
    return out;
}

void write_shots_csv(std::ostream& os, const ShotBatch& batch) {
    os << "shot_idx,repeat_idx,init_label,i_val,q_val,jump_time_s\n";
    for (std::size_t r = 0; r < batch.size(); ++r) {
        os << r / batch.n_repeats << ',' << r % batch.n_repeats << ',' << to_string(batch.labels[r]) << ','
           << csv::format_double(batch.i_vals[r]) << ',' << csv::format_double(batch.q_vals[r]) << ',';
        if (batch.jumped(r)) os << csv::format_double(batch.jump_times[r]);
        os << '\n';
    }
}

}  // namespace cdr
