#pragma once

#include <complex>
#include <numbers>
#include <string_view>

namespace cdr {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Qubit computational state. The project-wide convention is e <-> sigma_z = +1.
enum class QubitState : int { g = 0, e = 1 };

constexpr double sigma_z(QubitState s) noexcept { return s == QubitState::e ? 1.0 : -1.0; }

constexpr QubitState flipped(QubitState s) noexcept {
    return s == QubitState::e ? QubitState::g : QubitState::e;
}

constexpr std::string_view to_string(QubitState s) noexcept { return s == QubitState::e ? "e" : "g"; }

// Internal quantities are angular frequencies (rad/s); user-facing I/O is in Hz.
constexpr double hz_to_rad(double hz) noexcept { return kTwoPi * hz; }
constexpr double rad_to_hz(double w) noexcept { return w / kTwoPi; }

}  // namespace cdr
