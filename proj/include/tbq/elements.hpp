// Optical components and their action on photonic states. Time semantics are
// absolute: a birefringent delay moves the slow polarization to LATER fine
// bins, a polarization time delay adds a nanosecond offset. Nothing is ever
// relabeled mid-chain, so leakage from imperfect switching stays on the grid.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tbq/hilbert.hpp"
#include "tbq/jones.hpp"

namespace tbq {

struct Waveplate {
    WaveplateKind kind = WaveplateKind::half;
    double angle_rad = 0.0;
};

struct PolarizingSplitter {
    Polarization kept_pol = Polarization::H;
};

// alpha-BBO crystal; 5 mm of crystal delays the slow polarization by one
// 2.25 ps bin at the signal wavelength.
struct BirefringentDelay {
    int shift_bins = 1;
    Polarization slow_pol = Polarization::V;
};

inline constexpr double kAlphaBboMmPerBin = 5.0;

inline int crystal_shift_bins(double length_mm) {
    double bins = length_mm / kAlphaBboMmPerBin;
    int rounded = static_cast<int>(bins + 0.5);
    if (rounded < 1 || std::abs(bins - rounded) > 1e-9)
        throw Error(ErrorCode::config_error,
                    "crystal length must be a positive multiple of 5 mm");
    return rounded;
}

// One pump pulse position: a fine bin within a specific coarse frame.
struct SwitchTarget {
    int fine_bin = 0;
    std::int64_t coarse_ps = 0;

    friend bool operator==(const SwitchTarget&, const SwitchTarget&) = default;
    friend auto operator<=>(const SwitchTarget&, const SwitchTarget&) = default;
};

// Pump-driven polarization switch. Acts as ups_jones on the targeted modes,
// identity elsewhere. extra_phase rides on the polarization-flipped component
// (pi for an orthogonally polarized pump).
struct UltrafastSwitch {
    std::vector<SwitchTarget> targets;
    double theta_rad = std::numbers::pi / 4.0;
    double delta_phi_rad = std::numbers::pi;
    double extra_phase_rad = 0.0;
};

struct PolarizationTimeDelay {
    std::int64_t offset_ps = 0;
    Polarization delayed_pol = Polarization::V;
};

struct Attenuator {
    double transmission = 1.0;
};

// Per-fine-bin phase plate; bins beyond the list are untouched.
struct PhaseCorrector {
    std::vector<double> phases_rad;
};

using Element = std::variant<Waveplate, PolarizingSplitter, BirefringentDelay,
                             UltrafastSwitch, PolarizationTimeDelay, Attenuator,
                             PhaseCorrector>;

inline bool is_lossless(const Element& e) {
    if (std::holds_alternative<PolarizingSplitter>(e)) return false;
    if (const auto* a = std::get_if<Attenuator>(&e))
        return a->transmission >= 1.0;
    return true;
}

inline void validate_element(const Element& e, const TimeGrid& grid) {
    if (const auto* u = std::get_if<UltrafastSwitch>(&e)) {
        if (u->theta_rad < 0.0 || u->theta_rad > std::numbers::pi / 2.0)
            throw Error(ErrorCode::config_error, "switch theta outside [0, pi/2]");
        if (u->delta_phi_rad < 0.0 || u->delta_phi_rad >= 2.0 * std::numbers::pi)
            throw Error(ErrorCode::config_error, "switch delta_phi outside [0, 2pi)");
        auto offsets = grid.coarse_offsets();
        for (const auto& t : u->targets) {
            if (t.fine_bin < 0 || t.fine_bin >= grid.fine_capacity())
                throw Error(ErrorCode::config_error, "switch target fine bin off grid");
            if (offsets.count(t.coarse_ps) == 0)
                throw Error(ErrorCode::config_error,
                            "switch target coarse offset unreachable on grid");
        }
    } else if (const auto* b = std::get_if<BirefringentDelay>(&e)) {
        if (b->shift_bins < 1)
            throw Error(ErrorCode::config_error, "delay shift must be positive");
    } else if (const auto* a = std::get_if<Attenuator>(&e)) {
        if (a->transmission < 0.0 || a->transmission > 1.0)
            throw Error(ErrorCode::config_error, "transmission outside [0, 1]");
    } else if (const auto* p = std::get_if<PolarizationTimeDelay>(&e)) {
        if (p->offset_ps <= 0)
            throw Error(ErrorCode::config_error, "time-delay offset must be positive");
    }
}

namespace detail {

// Scatters one entry through a 2x2 polarization action.
inline void scatter_jones(PhotonicState& out, const ModeLabel& m, cplx a,
                          const JonesMatrix& j) {
    ModeLabel h = m, v = m;
    h.pol = Polarization::H;
    v.pol = Polarization::V;
    if (m.pol == Polarization::H) {
        out.add_amplitude(h, j.hh * a);
        out.add_amplitude(v, j.vh * a);
    } else {
        out.add_amplitude(h, j.hv * a);
        out.add_amplitude(v, j.vv * a);
    }
}

}  // namespace detail

inline PhotonicState apply_element(const PhotonicState& s, const Element& e) {
    const TimeGrid& grid = s.grid();
    PhotonicState out(grid);

    if (const auto* wp = std::get_if<Waveplate>(&e)) {
        JonesMatrix j = waveplate_jones(wp->kind, wp->angle_rad);
        for (const auto& [m, a] : s.amplitudes()) detail::scatter_jones(out, m, a, j);
    } else if (const auto* ps = std::get_if<PolarizingSplitter>(&e)) {
        for (const auto& [m, a] : s.amplitudes())
            if (m.pol == ps->kept_pol) out.add_amplitude(m, a);
    } else if (const auto* bd = std::get_if<BirefringentDelay>(&e)) {
        for (const auto& [m, a] : s.amplitudes()) {
            ModeLabel n = m;
            if (m.pol == bd->slow_pol) {
                n.fine_bin += bd->shift_bins;
                if (n.fine_bin >= grid.fine_capacity())
                    throw Error(ErrorCode::invalid_routing,
                                "delay pushes mode " + to_string(m) +
                                    " past the fine-bin capacity");
            }
            out.add_amplitude(n, a);
        }
    } else if (const auto* sw = std::get_if<UltrafastSwitch>(&e)) {
        JonesMatrix j =
            ups_jones(sw->theta_rad, sw->delta_phi_rad, sw->extra_phase_rad);
        for (const auto& [m, a] : s.amplitudes()) {
            bool hit = false;
            for (const auto& t : sw->targets)
                if (t.fine_bin == m.fine_bin && t.coarse_ps == m.coarse_ps) {
                    hit = true;
                    break;
                }
            if (hit)
                detail::scatter_jones(out, m, a, j);
            else
                out.add_amplitude(m, a);
        }
    } else if (const auto* td = std::get_if<PolarizationTimeDelay>(&e)) {
        for (const auto& [m, a] : s.amplitudes()) {
            ModeLabel n = m;
            if (m.pol == td->delayed_pol) n.coarse_ps += td->offset_ps;
            out.add_amplitude(n, a);
        }
    } else if (const auto* at = std::get_if<Attenuator>(&e)) {
        double f = std::sqrt(at->transmission);
        for (const auto& [m, a] : s.amplitudes()) out.add_amplitude(m, a * f);
    } else if (const auto* pc = std::get_if<PhaseCorrector>(&e)) {
        for (const auto& [m, a] : s.amplitudes()) {
            cplx f{1.0, 0.0};
            if (m.fine_bin >= 0 &&
                m.fine_bin < static_cast<int>(pc->phases_rad.size()))
                f = std::exp(cplx{0.0, pc->phases_rad[m.fine_bin]});
            out.add_amplitude(m, a * f);
        }
    }

    out.prune();
    return out;
}

inline std::string element_kind_name(const Element& e) {
    struct Visitor {
        std::string operator()(const Waveplate& w) const {
            return w.kind == WaveplateKind::half ? "hwp" : "qwp";
        }
        std::string operator()(const PolarizingSplitter&) const { return "pbs"; }
        std::string operator()(const BirefringentDelay&) const { return "bbo"; }
        std::string operator()(const UltrafastSwitch&) const { return "ups"; }
        std::string operator()(const PolarizationTimeDelay&) const { return "ptd"; }
        std::string operator()(const Attenuator&) const { return "att"; }
        std::string operator()(const PhaseCorrector&) const { return "phase"; }
    };
    return std::visit(Visitor{}, e);
}

}  // namespace tbq
