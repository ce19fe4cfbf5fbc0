// Builds the preparation and measurement apparatus out of optical elements
// and routes states through them.
//
// Measurement chain, one stage per qubit of dimension (d = 2^n):
//   coupler -> ultrafast switch -> phase plate -> alpha-BBO delay
//           -> basis half-wave plate -> polarization time delay
// Stage k recombines time bins 2^(k-1) apart; the pump pulses of stage k > 1
// sit at one absolute time per coarse frame, alternating between the early
// and late bin of each pair depending on which polarization the frame holds.
// Outcome-to-bin assignment is never hard-coded: it is recovered by
// propagating each reference state through the idealized chain.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "tbq/elements.hpp"
#include "tbq/hilbert.hpp"

namespace tbq {

inline constexpr double kDetectionWindowNs = 1.0;

struct DetectionWindow {
    int outcome = 0;
    double center_ns = 0.0;
    double width_ns = kDetectionWindowNs;

    bool contains(double t_ns) const {
        return std::abs(t_ns - center_ns) <= 0.5 * width_ns;
    }
};

struct DetectionWindows {
    std::vector<DetectionWindow> windows;

    std::optional<int> outcome_for(double t_ns) const {
        for (const auto& w : windows)
            if (w.contains(t_ns)) return w.outcome;
        return std::nullopt;
    }

    double last_edge_ns() const {
        double e = 0.0;
        for (const auto& w : windows)
            e = std::max(e, w.center_ns + 0.5 * w.width_ns);
        return e;
    }

    void validate_disjoint() const {
        for (std::size_t i = 0; i < windows.size(); ++i)
            for (std::size_t j = i + 1; j < windows.size(); ++j) {
                double gap = std::abs(windows[i].center_ns - windows[j].center_ns);
                if (gap < 0.5 * (windows[i].width_ns + windows[j].width_ns))
                    throw Error(ErrorCode::degenerate_routing,
                                "detection windows for outcomes " +
                                    std::to_string(windows[i].outcome) + " and " +
                                    std::to_string(windows[j].outcome) + " overlap");
            }
    }
};

// Per-stage switch settings plus the delayed-polarization convention.
// Vectors hold one entry per stage; ideal_hardware() fills the lossless,
// fully switching defaults.
struct HardwareParams {
    std::vector<double> theta_rad;
    std::vector<double> delta_phi_rad;
    std::vector<double> extra_phase_rad;
    std::vector<double> couplings;
    Polarization delayed_pol = Polarization::V;
    bool prep_compensation = true;

    Polarization input_pol() const { return opposite(delayed_pol); }
};

inline HardwareParams ideal_hardware(int stages) {
    HardwareParams hw;
    hw.theta_rad.assign(stages, std::numbers::pi / 4.0);
    hw.delta_phi_rad.assign(stages, std::numbers::pi);
    hw.extra_phase_rad.assign(stages, 0.0);
    hw.couplings.assign(stages, 1.0);
    return hw;
}

struct Apparatus {
    TimeGrid grid;
    std::vector<Element> elements;
    int stage_count = 0;
    int basis = 0;
    Polarization input_pol = Polarization::H;
};

inline int stage_count_for_dimension(int d) {
    if (d < 2 || !std::has_single_bit(static_cast<unsigned>(d)))
        throw Error(ErrorCode::unsupported_dimension,
                    "measurement chain requires d = 2^n, got d = " +
                        std::to_string(d));
    return std::countr_zero(static_cast<unsigned>(d));
}

// Compensation for the pump-orientation phase of the first switch: the
// preparation pre-rotates the targeted input bins by the opposite phase.
inline std::vector<double> preparation_compensation_phases(const HardwareParams& hw,
                                                           int d) {
    std::vector<double> phases(static_cast<std::size_t>(d), 0.0);
    if (!hw.prep_compensation || hw.extra_phase_rad.empty()) return phases;
    double x = hw.extra_phase_rad.front();
    if (x == 0.0) return phases;
    for (int m = 0; m < d; m += 2) phases[static_cast<std::size_t>(m)] = -x;
    return phases;
}

// Pump positions for stage k (1-based). Within every coarse frame the earlier
// bin of each recombining pair must end up on the slow axis and the later bin
// on the fast axis; frames that just received the previous time delay carry
// the delayed polarization, so the pump hits the late bin there and the early
// bin everywhere else.
inline std::vector<SwitchTarget> stage_switch_targets(
    int stage_k, int d, const std::vector<std::int64_t>& delays_ps) {
    int step = 1 << (stage_k - 1);
    std::vector<SwitchTarget> targets;
    int frame_bits = stage_k - 1;
    for (int mask = 0; mask < (1 << frame_bits); ++mask) {
        std::int64_t coarse = 0;
        for (int b = 0; b < frame_bits; ++b)
            if (mask & (1 << b)) coarse += delays_ps[static_cast<std::size_t>(b)];
        bool delayed_frame =
            frame_bits > 0 && (mask & (1 << (frame_bits - 1))) != 0;
        for (int j = 0; j < d / (2 * step); ++j) {
            int fine = step - 1 + j * 2 * step + (delayed_frame ? step : 0);
            targets.push_back({fine, coarse});
        }
    }
    return targets;
}

inline Apparatus build_measurement_chain(int d, int basis, const HardwareParams& hw,
                                         const TimeGrid& grid) {
    int stages = stage_count_for_dimension(d);
    if (grid.dimension != d)
        throw Error(ErrorCode::config_error, "grid dimension does not match d");
    if (basis != 0 && basis != 1)
        throw Error(ErrorCode::config_error, "basis must be 0 or 1");
    if (static_cast<int>(grid.coarse_delays_ps.size()) < stages)
        throw Error(ErrorCode::config_error,
                    "need one coarse delay per stage: " + std::to_string(stages));
    if (static_cast<int>(hw.theta_rad.size()) < stages ||
        static_cast<int>(hw.delta_phi_rad.size()) < stages ||
        static_cast<int>(hw.extra_phase_rad.size()) < stages ||
        static_cast<int>(hw.couplings.size()) < stages)
        throw Error(ErrorCode::config_error, "hardware parameter list shorter than "
                                             "the number of stages");
    grid.validate();

    double mirror = hw.input_pol() == Polarization::H ? 1.0 : -1.0;
    double basis_angle =
        basis == 1 ? mirror * std::numbers::pi / 8.0 : 0.0;

    Apparatus a;
    a.grid = grid;
    a.stage_count = stages;
    a.basis = basis;
    a.input_pol = hw.input_pol();
    for (int k = 1; k <= stages; ++k) {
        std::size_t i = static_cast<std::size_t>(k - 1);
        a.elements.push_back(Attenuator{hw.couplings[i]});
        a.elements.push_back(UltrafastSwitch{
            stage_switch_targets(k, d, grid.coarse_delays_ps), hw.theta_rad[i],
            hw.delta_phi_rad[i], hw.extra_phase_rad[i]});
        a.elements.push_back(PhaseCorrector{});
        a.elements.push_back(BirefringentDelay{1 << (k - 1), hw.delayed_pol});
        a.elements.push_back(Waveplate{WaveplateKind::half, basis_angle});
        a.elements.push_back(
            PolarizationTimeDelay{grid.coarse_delays_ps[i], hw.delayed_pol});
    }
    for (const auto& e : a.elements) validate_element(e, grid);
    return a;
}

inline PhotonicState propagate(const PhotonicState& s, const Apparatus& a) {
    if (s.grid() != a.grid)
        throw Error(ErrorCode::grid_mismatch, "state grid differs from apparatus grid");
    PhotonicState cur = s;
    for (const auto& e : a.elements) cur = apply_element(cur, e);
    return cur;
}

// Copy of the apparatus with perfect switching and no loss; the geometry
// (delays, pump positions, wave plates, extra phases) is unchanged. Detection
// windows are always derived from this twin so that degraded hardware keeps
// the designed bin assignment.
inline Apparatus idealized(const Apparatus& a) {
    Apparatus out = a;
    for (auto& e : out.elements) {
        if (auto* sw = std::get_if<UltrafastSwitch>(&e)) {
            sw->theta_rad = std::numbers::pi / 4.0;
            sw->delta_phi_rad = std::numbers::pi;
        } else if (auto* at = std::get_if<Attenuator>(&e)) {
            at->transmission = 1.0;
        }
    }
    return out;
}

// MUB element of Eq.-style complex phases: (1/sqrt d) sum_m e^{2 pi i n m / d}.
inline PhotonicState mub_state(const TimeGrid& grid, int n,
                               Polarization pol = Polarization::H) {
    int d = grid.dimension;
    if (n < 0 || n >= d)
        throw Error(ErrorCode::index_out_of_range,
                    "MUB index " + std::to_string(n) + " outside [0, d)");
    PhotonicState s(grid);
    double f = 1.0 / std::sqrt(static_cast<double>(d));
    for (int m = 0; m < d; ++m) {
        double phase = 2.0 * std::numbers::pi * n * m / d;
        s.set_amplitude({m, 0, pol}, f * std::exp(cplx{0.0, phase}));
    }
    return s;
}

// Real-signed superposition basis actually sorted by the chain; for d = 4 it
// is the quartet (+,+,+,+), (+,-,+,-), (+,+,-,-), (+,-,-,+). Sign of bin m in
// state n is (-1)^popcount(n & m).
inline PhotonicState superposition_state(const TimeGrid& grid, int n,
                                         Polarization pol = Polarization::H) {
    int d = grid.dimension;
    if (n < 0 || n >= d)
        throw Error(ErrorCode::index_out_of_range,
                    "superposition index " + std::to_string(n) + " outside [0, d)");
    PhotonicState s(grid);
    double f = 1.0 / std::sqrt(static_cast<double>(d));
    for (int m = 0; m < d; ++m) {
        int bits = std::popcount(static_cast<unsigned>(n & m));
        s.set_amplitude({m, 0, pol}, cplx{(bits % 2 == 0 ? f : -f), 0.0});
    }
    return s;
}

// Ideal state emitted by the (possibly compensated) preparation for outcome
// label `index` in basis `basis`.
inline PhotonicState reference_state(const TimeGrid& grid, int basis, int index,
                                     Polarization pol,
                                     const std::vector<double>& comp_phases = {}) {
    PhotonicState s = basis == 0
                          ? make_basis_state(grid, ModeLabel{index, 0, pol})
                          : superposition_state(grid, index, pol);
    if (comp_phases.empty()) return s;
    PhotonicState out(grid);
    for (const auto& [m, a] : s.amplitudes()) {
        cplx f{1.0, 0.0};
        if (m.fine_bin < static_cast<int>(comp_phases.size()))
            f = std::exp(cplx{0.0, comp_phases[static_cast<std::size_t>(m.fine_bin)]});
        out.set_amplitude(m, a * f);
    }
    return out;
}

// ---------------------------------------------------------------------------
// State preparation

struct PreparationSetting {
    int basis = 0;
    int index = 0;
    std::vector<double> hwp_angles_rad;
};

// Half-wave plate angles from the preparation table: in the computational
// basis bit b of the index selects +-22.5 deg at stage b+1; in the
// superposition basis it selects 0 / 45 deg. Angles mirror for a V input.
inline PreparationSetting canonical_preparation(int basis, int index, int d,
                                                Polarization input_pol) {
    int stages = stage_count_for_dimension(d);
    if (index < 0 || index >= d)
        throw Error(ErrorCode::index_out_of_range,
                    "preparation index " + std::to_string(index) + " outside [0, d)");
    if (basis != 0 && basis != 1)
        throw Error(ErrorCode::config_error, "basis must be 0 or 1");
    double mirror = input_pol == Polarization::H ? 1.0 : -1.0;
    PreparationSetting s{basis, index, {}};
    for (int k = 0; k < stages; ++k) {
        bool bit = ((index >> k) & 1) != 0;
        double angle = basis == 0 ? (bit ? -std::numbers::pi / 8.0
                                         : std::numbers::pi / 8.0)
                                  : (bit ? std::numbers::pi / 4.0 : 0.0);
        s.hwp_angles_rad.push_back(mirror * angle);
    }
    return s;
}

// HWP / 45-deg alpha-BBO / PBS ladder. A crystal with its axes at 45 deg from
// the PBS is the sandwich HWP(22.5) * delay * HWP(22.5).
inline std::vector<Element> preparation_elements(
    const PreparationSetting& setting, Polarization delayed_pol,
    const std::vector<double>& comp_phases = {}) {
    Polarization kept = opposite(delayed_pol);
    double mirror = kept == Polarization::H ? 1.0 : -1.0;
    double sandwich = mirror * std::numbers::pi / 8.0;
    std::vector<Element> seq;
    for (std::size_t k = 0; k < setting.hwp_angles_rad.size(); ++k) {
        seq.push_back(Waveplate{WaveplateKind::half, setting.hwp_angles_rad[k]});
        seq.push_back(Waveplate{WaveplateKind::half, sandwich});
        seq.push_back(BirefringentDelay{1 << k, delayed_pol});
        seq.push_back(Waveplate{WaveplateKind::half, sandwich});
        seq.push_back(PolarizingSplitter{kept});
    }
    if (!comp_phases.empty()) seq.push_back(PhaseCorrector{comp_phases});
    return seq;
}

// Simulated preparation. The result is subnormalized by the PBS
// post-selection (squared norm 2^-stages, 25 % for d = 4).
inline PhotonicState prepare_state(const PreparationSetting& setting,
                                   const TimeGrid& grid, Polarization delayed_pol,
                                   const std::vector<double>& comp_phases = {}) {
    if (static_cast<int>(setting.hwp_angles_rad.size()) !=
        stage_count_for_dimension(grid.dimension))
        throw Error(ErrorCode::shape_error,
                    "need one preparation HWP angle per stage");
    PhotonicState s =
        make_basis_state(grid, ModeLabel{0, 0, opposite(delayed_pol)});
    for (const auto& e : preparation_elements(setting, delayed_pol, comp_phases))
        s = apply_element(s, e);
    return s;
}

// ---------------------------------------------------------------------------
// Routing

// Probability mass inside each outcome window plus the out-of-window rest.
struct WindowedProbabilities {
    std::vector<double> outcome;
    double outside = 0.0;
};

inline WindowedProbabilities windowed_probabilities(const PhotonicState& s,
                                                    const DetectionWindows& w) {
    WindowedProbabilities p;
    p.outcome.assign(w.windows.size(), 0.0);
    for (const auto& [m, a] : s.amplitudes()) {
        double t = arrival_time_ns(m, s.grid());
        auto o = w.outcome_for(t);
        if (o)
            p.outcome[static_cast<std::size_t>(*o)] += std::norm(a);
        else
            p.outside += std::norm(a);
    }
    return p;
}

// Discovers the bijection outcome -> detection bin by sending every reference
// state of `basis` through the idealized twin of `a`.
inline DetectionWindows routing_table(const Apparatus& a, int basis,
                                      const std::vector<double>& comp_phases = {},
                                      double width_ns = kDetectionWindowNs) {
    Apparatus ideal = idealized(a);
    DetectionWindows table;
    for (int i = 0; i < a.grid.dimension; ++i) {
        PhotonicState out = propagate(
            reference_state(a.grid, basis, i, a.input_pol, comp_phases), ideal);
        out.prune();
        std::optional<double> center;
        double mass = 0.0;
        for (const auto& [m, amp] : out.amplitudes()) {
            double p = std::norm(amp);
            if (p < 1e-9) continue;
            double t = arrival_time_ns(m, a.grid);
            if (center && std::abs(*center - t) > 1e-9)
                throw Error(ErrorCode::degenerate_routing,
                            "reference state " + std::to_string(i) +
                                " spreads over several detection bins");
            center = t;
            mass += p;
        }
        if (!center || mass < 1.0 - 1e-9)
            throw Error(ErrorCode::invalid_routing,
                        "reference state " + std::to_string(i) +
                            " does not arrive intact through the ideal chain");
        table.windows.push_back({i, *center, width_ns});
    }
    table.validate_disjoint();
    return table;
}

}  // namespace tbq
