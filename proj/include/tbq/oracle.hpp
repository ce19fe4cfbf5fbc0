// Brute-force validator: compiles an apparatus into an explicit mode-space
// matrix by composing per-element matrices over staged mode bases. The
// per-mode scatter rules are written out independently of apply_element so
// the two routes can certify each other.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "tbq/chain.hpp"
#include "tbq/elements.hpp"
#include "tbq/hilbert.hpp"
#include "tbq/jones.hpp"

namespace tbq::oracle {

inline constexpr std::size_t kDefaultModeCap = 4096;

using ModeBasis = std::vector<ModeLabel>;

namespace detail {

using Column = std::vector<std::pair<ModeLabel, cplx>>;

inline void push_pol_pair(Column& col, const ModeLabel& m, cplx a,
                          const JonesMatrix& j) {
    ModeLabel h = m, v = m;
    h.pol = Polarization::H;
    v.pol = Polarization::V;
    if (m.pol == Polarization::H) {
        col.emplace_back(h, j.hh * a);
        col.emplace_back(v, j.vh * a);
    } else {
        col.emplace_back(h, j.hv * a);
        col.emplace_back(v, j.vv * a);
    }
}

// Action of one element on one mode, as an explicit column.
inline Column element_column(const Element& e, const ModeLabel& m,
                             const TimeGrid& grid) {
    Column col;
    if (const auto* wp = std::get_if<Waveplate>(&e)) {
        push_pol_pair(col, m, {1.0, 0.0}, waveplate_jones(wp->kind, wp->angle_rad));
    } else if (const auto* ps = std::get_if<PolarizingSplitter>(&e)) {
        if (m.pol == ps->kept_pol) col.emplace_back(m, cplx{1.0, 0.0});
    } else if (const auto* bd = std::get_if<BirefringentDelay>(&e)) {
        ModeLabel n = m;
        if (m.pol == bd->slow_pol) {
            n.fine_bin += bd->shift_bins;
            if (n.fine_bin >= grid.fine_capacity())
                throw Error(ErrorCode::invalid_routing,
                            "delay pushes mode " + to_string(m) +
                                " past the fine-bin capacity");
        }
        col.emplace_back(n, cplx{1.0, 0.0});
    } else if (const auto* sw = std::get_if<UltrafastSwitch>(&e)) {
        bool hit = false;
        for (const auto& t : sw->targets)
            if (t.fine_bin == m.fine_bin && t.coarse_ps == m.coarse_ps) {
                hit = true;
                break;
            }
        if (hit)
            push_pol_pair(col, m, {1.0, 0.0},
                          ups_jones(sw->theta_rad, sw->delta_phi_rad,
                                    sw->extra_phase_rad));
        else
            col.emplace_back(m, cplx{1.0, 0.0});
    } else if (const auto* td = std::get_if<PolarizationTimeDelay>(&e)) {
        ModeLabel n = m;
        if (m.pol == td->delayed_pol) n.coarse_ps += td->offset_ps;
        col.emplace_back(n, cplx{1.0, 0.0});
    } else if (const auto* at = std::get_if<Attenuator>(&e)) {
        col.emplace_back(m, cplx{std::sqrt(at->transmission), 0.0});
    } else if (const auto* pc = std::get_if<PhaseCorrector>(&e)) {
        cplx f{1.0, 0.0};
        if (m.fine_bin >= 0 && m.fine_bin < static_cast<int>(pc->phases_rad.size()))
            f = std::exp(cplx{0.0, pc->phases_rad[m.fine_bin]});
        col.emplace_back(m, f);
    }
    return col;
}

}  // namespace detail

// Mode-space matrix of a whole chain: maps amplitudes over `inputs` to
// amplitudes over `outputs`. Square only when no element grows the basis.
struct ChainMatrix {
    ModeBasis inputs;
    ModeBasis outputs;
    std::vector<cplx> mat;  // row-major, outputs.size() x inputs.size()

    std::size_t rows() const { return outputs.size(); }
    std::size_t cols() const { return inputs.size(); }
    cplx at(std::size_t r, std::size_t c) const { return mat[r * cols() + c]; }

    std::vector<cplx> apply(const std::vector<cplx>& in) const {
        std::vector<cplx> out(rows(), cplx{0.0, 0.0});
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c)
                out[r] += at(r, c) * in[c];
        return out;
    }

    PhotonicState apply_state(const PhotonicState& s) const {
        std::vector<cplx> in(cols(), cplx{0.0, 0.0});
        for (const auto& [m, a] : s.amplitudes()) {
            auto it = std::find(inputs.begin(), inputs.end(), m);
            if (it == inputs.end())
                throw Error(ErrorCode::invalid_mode,
                            "state occupies mode " + to_string(m) +
                                " outside the chain input basis");
            in[static_cast<std::size_t>(it - inputs.begin())] = a;
        }
        auto out = apply(in);
        PhotonicState res(s.grid());
        for (std::size_t r = 0; r < rows(); ++r)
            if (out[r] != cplx{0.0, 0.0}) res.set_amplitude(outputs[r], out[r]);
        res.prune();
        return res;
    }

    // max |(M^dagger M - I)_{ij}|; zero for a norm- and angle-preserving chain.
    double isometry_error() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < cols(); ++i)
            for (std::size_t j = 0; j < cols(); ++j) {
                cplx g{0.0, 0.0};
                for (std::size_t r = 0; r < rows(); ++r)
                    g += std::conj(at(r, i)) * at(r, j);
                if (i == j) g -= cplx{1.0, 0.0};
                worst = std::max(worst, std::abs(g));
            }
        return worst;
    }

    // Largest singular value, by power iteration on M^dagger M.
    double operator_norm(int iterations = 200) const {
        if (cols() == 0) return 0.0;
        std::vector<cplx> v(cols());
        for (std::size_t i = 0; i < cols(); ++i)
            v[i] = cplx{1.0 / std::sqrt(static_cast<double>(cols())),
                        1e-3 * static_cast<double>(i + 1)};
        double lambda = 0.0;
        for (int it = 0; it < iterations; ++it) {
            auto mv = apply(v);
            std::vector<cplx> w(cols(), cplx{0.0, 0.0});
            for (std::size_t c = 0; c < cols(); ++c)
                for (std::size_t r = 0; r < rows(); ++r)
                    w[c] += std::conj(at(r, c)) * mv[r];
            double n = 0.0;
            for (const auto& x : w) n += std::norm(x);
            n = std::sqrt(n);
            if (n == 0.0) return 0.0;
            lambda = n;
            for (auto& x : w) x /= n;
            v = std::move(w);
        }
        return std::sqrt(lambda);
    }
};

inline ChainMatrix full_matrix(const Apparatus& a,
                               std::size_t mode_cap = kDefaultModeCap) {
    ModeBasis basis;
    for (int m = 0; m < a.grid.dimension; ++m)
        basis.push_back({m, 0, a.input_pol});

    ChainMatrix cm;
    cm.inputs = basis;
    cm.outputs = basis;
    cm.mat.assign(basis.size() * basis.size(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < basis.size(); ++i)
        cm.mat[i * basis.size() + i] = cplx{1.0, 0.0};

    for (const auto& e : a.elements) {
        // Gather the next basis from the scatter of every current mode.
        std::map<ModeLabel, std::size_t> next_index;
        std::vector<detail::Column> columns;
        columns.reserve(cm.outputs.size());
        for (const auto& m : cm.outputs) {
            auto col = detail::element_column(e, m, a.grid);
            for (const auto& [n, c] : col)
                if (next_index.emplace(n, next_index.size()).second &&
                    next_index.size() > mode_cap)
                    throw Error(ErrorCode::complexity_error,
                                "mode closure exceeds the cap of " +
                                    std::to_string(mode_cap));
            columns.push_back(std::move(col));
        }
        ModeBasis next(next_index.size());
        for (const auto& [m, idx] : next_index) next[idx] = m;

        std::vector<cplx> step(next.size() * cm.outputs.size(), cplx{0.0, 0.0});
        for (std::size_t c = 0; c < columns.size(); ++c)
            for (const auto& [n, coeff] : columns[c])
                step[next_index.at(n) * cm.outputs.size() + c] += coeff;

        std::vector<cplx> prod(next.size() * cm.cols(), cplx{0.0, 0.0});
        for (std::size_t r = 0; r < next.size(); ++r)
            for (std::size_t k = 0; k < cm.outputs.size(); ++k) {
                cplx s = step[r * cm.outputs.size() + k];
                if (s == cplx{0.0, 0.0}) continue;
                for (std::size_t c = 0; c < cm.cols(); ++c)
                    prod[r * cm.cols() + c] += s * cm.mat[k * cm.cols() + c];
            }
        cm.outputs = std::move(next);
        cm.mat = std::move(prod);
    }
    return cm;
}

// Detection windows recovered from the matrix route alone.
inline DetectionWindows routing_windows(const Apparatus& a, int basis,
                                        const std::vector<double>& comp_phases = {},
                                        double width_ns = kDetectionWindowNs) {
    ChainMatrix m = full_matrix(idealized(a));
    DetectionWindows table;
    for (int i = 0; i < a.grid.dimension; ++i) {
        PhotonicState out = m.apply_state(
            reference_state(a.grid, basis, i, a.input_pol, comp_phases));
        std::optional<double> center;
        double mass = 0.0;
        for (const auto& [mode, amp] : out.amplitudes()) {
            double p = std::norm(amp);
            if (p < 1e-9) continue;
            double t = arrival_time_ns(mode, a.grid);
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

// Analytic detection-probability matrix P[i][j]: prepare reference i of basis
// `alpha`, push it through the basis-`beta` chain matrix, integrate the
// window of outcome j, then renormalize each row over the d outcomes.
inline std::vector<std::vector<double>> confusion_matrix(
    const Apparatus& measurement, int alpha,
    const std::vector<double>& comp_phases = {}) {
    int d = measurement.grid.dimension;
    ChainMatrix m = full_matrix(measurement);
    DetectionWindows windows =
        routing_windows(measurement, measurement.basis, comp_phases);
    std::vector<std::vector<double>> p;
    for (int i = 0; i < d; ++i) {
        PhotonicState in = reference_state(measurement.grid, alpha, i,
                                           measurement.input_pol, comp_phases);
        auto wp = windowed_probabilities(m.apply_state(in), windows);
        double mass = 0.0;
        for (double x : wp.outcome) mass += x;
        if (mass <= 0.0)
            throw Error(ErrorCode::degenerate_routing,
                        "no probability reaches any detection window");
        for (auto& x : wp.outcome) x /= mass;
        p.push_back(std::move(wp.outcome));
    }
    return p;
}

}  // namespace tbq::oracle
