#pragma once

// Small numerical kernels shared by the physics modules.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cdr::numerics {

/// One classical fourth-order Runge-Kutta step of y' = f(t, y).
template <class State, class Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const State k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const State k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Running trapezoid integral: out[n] = integral of f over [t_0, t_n].
template <class T>
std::vector<T> cumulative_trapezoid(std::span<const T> f, double dt) {
    std::vector<T> out(f.size(), T{});
    for (std::size_t n = 1; n < f.size(); ++n) {
        out[n] = out[n - 1] + (0.5 * dt) * (f[n - 1] + f[n]);
    }
    return out;
}

template <class T>
T trapezoid(std::span<const T> f, double dt) {
    if (f.size() < 2) return T{};
    T acc = 0.5 * (f.front() + f.back());
    for (std::size_t n = 1; n + 1 < f.size(); ++n) acc += f[n];
    return dt * acc;
}

/// exp(z) - 1 without cancellation for small |z|.
inline std::complex<double> expm1(std::complex<double> z) {
    const double s = std::sin(0.5 * z.imag());
    return {std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * s * s, std::exp(z.real()) * std::sin(z.imag())};
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Linear interpolation of a uniformly sampled sequence at fractional index.
template <class T>
T interpolate(std::span<const T> f, double dt, double t) {
    if (t <= 0.0) return f.front();
    const double pos = t / dt;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= f.size()) return f.back();
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * f[i] + w * f[i + 1];
}

}  // namespace cdr::numerics
