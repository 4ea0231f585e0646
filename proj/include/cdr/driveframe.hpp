#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cdr/sysmodel.hpp"
#include "cdr/types.hpp"

namespace cdr {

/// Sampled slow drive envelope (rad/s) in the frame rotating at omega_c.
/// Sample n sits at t_n = n * dt.
struct DriveEnvelope {
    double dt = 0.0;
    std::vector<cplx> samples;
    double ring_time = 0.0;  // longest tanh ramp used to build the envelope

    std::size_t size() const noexcept { return samples.size(); }
    double duration() const noexcept { return dt * static_cast<double>(samples.size()); }
};

enum class SegmentKind { constant, tanh_ramp, reversal };

/// For constant and tanh_ramp, amplitude is the target level. For reversal it is
/// a multiplier applied to the level at the end of the previous segment.
struct Segment {
    SegmentKind kind = SegmentKind::constant;
    cplx amplitude{};
    double duration = 0.0;
};

struct FrameSolution {
    std::vector<cplx> xi;
    std::vector<cplx> zeta;
    double resonant_residual = 0.0;
};

/// Smooth step from 0 to 1 on u in [0, 1] whose derivatives all vanish at both ends.
double ramp_profile(double u);

DriveEnvelope make_envelope(std::span<const Segment> segments, double dt);

/// Integrates the slow-frame equation x' = -(G/2 - i D) x + i eps(t), x(0) = 0,
/// with D = omega_c - omega_q (omega_c - omega_f with the filter). Its adiabatic
/// branch is i eps / (G/2 - i D), i.e. -eps/D for G << |D|.
FrameSolution solve_frame(const DriveEnvelope& env, const SystemParams& params, bool use_filter);

/// Effective longitudinal coupling sqrt(2 alpha chi_qc) eps/D, or
/// sqrt(chi_qf chi_qc) eps/|D_f| through the filter mode.
std::vector<cplx> zeta_of_envelope(const DriveEnvelope& env, const DerivedCouplings& couplings,
                                   const SystemParams& params, bool use_filter);

/// Envelope CSV with columns t_s, re_eps_hz, im_eps_hz.
void write_envelope_csv(std::ostream& os, const DriveEnvelope& env);
DriveEnvelope read_envelope_csv(std::istream& is);

}  // namespace cdr
