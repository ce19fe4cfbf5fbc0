// Discrete mode space for ultrafast time-bin qudits: picosecond fine bins,
// nanosecond coarse offsets, and H/V polarization. States are sparse maps
// from mode labels to complex amplitudes; subnormalization tracks loss.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tbq/errors.hpp"

namespace tbq {

using cplx = std::complex<double>;

// Amplitudes below this magnitude are dropped from the sparse map.
inline constexpr double kPruneThreshold = 1e-15;

enum class Polarization : std::uint8_t { H, V };

inline Polarization opposite(Polarization p) {
    return p == Polarization::H ? Polarization::V : Polarization::H;
}

inline char pol_char(Polarization p) { return p == Polarization::H ? 'H' : 'V'; }

inline Polarization pol_from_char(char c) {
    if (c == 'H' || c == 'h') return Polarization::H;
    if (c == 'V' || c == 'v') return Polarization::V;
    throw Error(ErrorCode::config_error, std::string("not a polarization: ") + c);
}

// One occupied slot of the mode space. Coarse offsets are exact integer
// picoseconds so that bin identity is structural, never a float comparison.
struct ModeLabel {
    int fine_bin = 0;
    std::int64_t coarse_ps = 0;
    Polarization pol = Polarization::H;

    friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
    friend auto operator<=>(const ModeLabel& a, const ModeLabel& b) {
        if (auto c = a.coarse_ps <=> b.coarse_ps; c != 0) return c;
        if (auto c = a.fine_bin <=> b.fine_bin; c != 0) return c;
        return static_cast<int>(a.pol) <=> static_cast<int>(b.pol);
    }
};

inline std::string to_string(const ModeLabel& m) {
    return "(" + std::to_string(m.fine_bin) + "," + std::to_string(m.coarse_ps) +
           "ps," + pol_char(m.pol) + ")";
}

// Time structure of one experiment: d fine bins at `fine_pitch_ps` plus the
// nanosecond-scale polarization time delays that generate coarse offsets.
// Fine bins may drift up to 2d-1 during propagation (birefringent delays
// accumulate at most d-1 bins of shift), hence the capacity headroom.
struct TimeGrid {
    double fine_pitch_ps = 2.25;
    int dimension = 4;
    std::vector<std::int64_t> coarse_delays_ps;

    int fine_capacity() const { return 2 * dimension; }

    // Every coarse offset reachable by the polarization time delays.
    std::set<std::int64_t> coarse_offsets() const {
        std::set<std::int64_t> sums{0};
        for (auto d : coarse_delays_ps) {
            std::set<std::int64_t> next = sums;
            for (auto s : sums) next.insert(s + d);
            sums = std::move(next);
        }
        return sums;
    }

    void validate() const {
        if (fine_pitch_ps <= 0.0)
            throw Error(ErrorCode::config_error, "fine_pitch_ps must be positive");
        if (dimension < 2)
            throw Error(ErrorCode::config_error, "dimension must be at least 2");
        std::set<std::int64_t> seen;
        for (auto d : coarse_delays_ps) {
            if (d <= 0)
                throw Error(ErrorCode::config_error, "coarse delays must be positive");
            if (!seen.insert(d).second)
                throw Error(ErrorCode::config_error, "coarse delays must be distinct");
        }
        if (!coarse_delays_ps.empty()) {
            auto min_delay = *std::min_element(coarse_delays_ps.begin(),
                                               coarse_delays_ps.end());
            // Fine structure must never reach a neighboring coarse bin.
            if (fine_capacity() * fine_pitch_ps > 0.5 * static_cast<double>(min_delay))
                throw Error(ErrorCode::config_error,
                            "fine-bin span aliases into the coarse bin spacing");
        }
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

// Arrival time of a mode at the detector, in nanoseconds.
inline double arrival_time_ns(const ModeLabel& m, const TimeGrid& g) {
    return (static_cast<double>(m.coarse_ps) + m.fine_bin * g.fine_pitch_ps) * 1e-3;
}

// Sparse photonic state over a TimeGrid. Value type: all operations return
// new states. Squared norm <= 1; subnormalization encodes loss.
class PhotonicState {
public:
    explicit PhotonicState(TimeGrid grid) : grid_(std::move(grid)) {}

    const TimeGrid& grid() const { return grid_; }
    const std::map<ModeLabel, cplx>& amplitudes() const { return amps_; }
    bool empty() const { return amps_.empty(); }
    std::size_t mode_count() const { return amps_.size(); }

    cplx amplitude(const ModeLabel& m) const {
        auto it = amps_.find(m);
        return it == amps_.end() ? cplx{0.0, 0.0} : it->second;
    }

    void add_amplitude(const ModeLabel& m, cplx a) {
        auto [it, inserted] = amps_.try_emplace(m, a);
        if (!inserted) it->second += a;
    }

    void set_amplitude(const ModeLabel& m, cplx a) { amps_[m] = a; }

    double norm2() const {
        double s = 0.0;
        for (const auto& [m, a] : amps_) s += std::norm(a);
        return s;
    }

    double norm() const { return std::sqrt(norm2()); }

    PhotonicState scaled(cplx factor) const {
        PhotonicState out(grid_);
        for (const auto& [m, a] : amps_) out.amps_.emplace(m, a * factor);
        return out;
    }

    PhotonicState renormalized() const {
        double n = norm();
        if (n <= 0.0)
            throw Error(ErrorCode::domain_error, "cannot normalize a null state");
        return scaled(cplx{1.0 / n, 0.0});
    }

    // Drops negligible entries; no observable effect above kPruneThreshold.
    void prune() {
        for (auto it = amps_.begin(); it != amps_.end();) {
            if (std::abs(it->second) < kPruneThreshold)
                it = amps_.erase(it);
            else
                ++it;
        }
    }

    friend PhotonicState operator+(const PhotonicState& a, const PhotonicState& b) {
        if (a.grid_ != b.grid_)
            throw Error(ErrorCode::grid_mismatch, "states live on different grids");
        PhotonicState out = a;
        for (const auto& [m, amp] : b.amps_) out.add_amplitude(m, amp);
        return out;
    }

private:
    TimeGrid grid_;
    std::map<ModeLabel, cplx> amps_;
};

inline bool label_valid_on_grid(const ModeLabel& m, const TimeGrid& g) {
    if (m.fine_bin < 0 || m.fine_bin >= g.dimension) return false;
    if (m.coarse_ps < 0) return false;
    auto offsets = g.coarse_offsets();
    return offsets.count(m.coarse_ps) > 0;
}

inline PhotonicState make_basis_state(const TimeGrid& grid, const ModeLabel& label) {
    if (!label_valid_on_grid(label, grid))
        throw Error(ErrorCode::invalid_mode, "mode " + to_string(label) +
                                                 " is not a valid input mode");
    PhotonicState s(grid);
    s.set_amplitude(label, cplx{1.0, 0.0});
    return s;
}

// Conjugate-linear in the first argument: <a|b>.
inline cplx inner_product(const PhotonicState& a, const PhotonicState& b) {
    if (a.grid() != b.grid())
        throw Error(ErrorCode::grid_mismatch, "states live on different grids");
    const auto& small = a.mode_count() <= b.mode_count() ? a : b;
    const auto& other = a.mode_count() <= b.mode_count() ? b : a;
    cplx acc{0.0, 0.0};
    for (const auto& [m, amp] : small.amplitudes()) {
        cplx oa = other.amplitude(m);
        if (&small == &a)
            acc += std::conj(amp) * oa;
        else
            acc += std::conj(oa) * amp;
    }
    return acc;
}

inline double mode_probability(const PhotonicState& s,
                               const std::function<bool(const ModeLabel&)>& pred) {
    double p = 0.0;
    for (const auto& [m, a] : s.amplitudes())
        if (pred(m)) p += std::norm(a);
    return p;
}

}  // namespace tbq
