// Jones matrices for the polarization-acting components. Global phase is
// fixed by constructing every matrix as R(theta) * D * R(-theta), which makes
// the (H,H) entry real non-negative wherever the form allows.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "tbq/hilbert.hpp"

namespace tbq {

struct JonesMatrix {
    cplx hh{1.0, 0.0}, hv{0.0, 0.0};
    cplx vh{0.0, 0.0}, vv{1.0, 0.0};

    static JonesMatrix identity() { return {}; }

    friend JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) {
        return {a.hh * b.hh + a.hv * b.vh, a.hh * b.hv + a.hv * b.vv,
                a.vh * b.hh + a.vv * b.vh, a.vh * b.hv + a.vv * b.vv};
    }

    JonesMatrix adjoint() const {
        return {std::conj(hh), std::conj(vh), std::conj(hv), std::conj(vv)};
    }

    double deviation_from_unitary() const {
        JonesMatrix p = adjoint() * (*this);
        double d = std::abs(p.hh - cplx{1.0, 0.0});
        d = std::max(d, std::abs(p.vv - cplx{1.0, 0.0}));
        d = std::max(d, std::abs(p.hv));
        d = std::max(d, std::abs(p.vh));
        return d;
    }
};

enum class WaveplateKind { half, quarter };

// Retarder with retardance `delta` and fast axis at `angle` from H:
// R(angle) * diag(1, e^{i delta}) * R(-angle).
inline JonesMatrix retarder_jones(double delta, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    cplx p = std::exp(cplx{0.0, delta});
    return {c * c + p * s * s, c * s * (1.0 - p),
            c * s * (1.0 - p), s * s + p * c * c};
}

// Half-wave plate at angle t: [[cos 2t, sin 2t], [sin 2t, -cos 2t]] up to the
// documented global-phase convention (here exactly, since e^{i pi} = -1).
inline JonesMatrix waveplate_jones(WaveplateKind kind, double angle) {
    double delta = kind == WaveplateKind::half ? std::numbers::pi
                                               : std::numbers::pi / 2.0;
    JonesMatrix m = retarder_jones(delta, angle);
    if (kind == WaveplateKind::half) {
        // Clean up the O(1e-16) imaginary residue of e^{i pi}.
        double c2 = std::cos(2.0 * angle), s2 = std::sin(2.0 * angle);
        m = {cplx{c2, 0.0}, cplx{s2, 0.0}, cplx{s2, 0.0}, cplx{-c2, 0.0}};
    }
    return m;
}

// Ultrafast polarization switch: cross-phase modulation imprints the pump
// phase delta_phi on the signal component parallel to the pump axis (at
// `theta` from the signal polarization). The H->V switch probability is
// exactly sin^2(2 theta) sin^2(delta_phi / 2).
inline JonesMatrix ups_jones(double theta, double delta_phi) {
    return retarder_jones(delta_phi, theta);
}

// Same switch with the pump-orientation phase on the rotated component.
// extra_phase = pi reproduces an orthogonally polarized pump (pump axis at
// -theta); 0 and pi are the unitary cases.
inline JonesMatrix ups_jones(double theta, double delta_phi, double extra_phase) {
    JonesMatrix m = retarder_jones(delta_phi, theta);
    cplx x = std::exp(cplx{0.0, extra_phase});
    m.hv *= x;
    m.vh *= x;
    return m;
}

inline double switch_probability(const JonesMatrix& m) { return std::norm(m.vh); }

// Nonlinear phase shift from cross-phase modulation in the fiber:
// 8 pi n2 L_eff I_pump / (3 lambda_signal). SI units; returns radians.
inline double xpm_phase_shift(double n2_m2_per_w, double effective_length_m,
                              double pump_intensity_w_per_m2,
                              double signal_wavelength_m) {
    return 8.0 * std::numbers::pi * n2_m2_per_w * effective_length_m *
           pump_intensity_w_per_m2 / (3.0 * signal_wavelength_m);
}

}  // namespace tbq
