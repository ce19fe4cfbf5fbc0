#pragma once

#include <vector>

#include "tbq/chain.hpp"
#include "tbq/hilbert.hpp"
#include "tbq/rng.hpp"

namespace tbq::test {

inline TimeGrid grid_d(int d) {
    TimeGrid g;
    g.dimension = d;
    g.coarse_delays_ps.clear();
    std::int64_t delay = 2600;
    for (int k = 0; k < stage_count_for_dimension(d); ++k) {
        g.coarse_delays_ps.push_back(delay);
        delay = 2 * delay + 400;
    }
    g.validate();
    return g;
}

// Random normalized state over the d input modes.
inline PhotonicState random_input_state(Rng& rng, const TimeGrid& g,
                                        Polarization pol = Polarization::H) {
    PhotonicState s(g);
    for (int m = 0; m < g.dimension; ++m)
        s.set_amplitude({m, 0, pol},
                        cplx{rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0});
    return s.renormalized();
}

inline double state_distance(const PhotonicState& a, const PhotonicState& b) {
    double d2 = 0.0;
    for (const auto& [m, amp] : a.amplitudes())
        d2 += std::norm(amp - b.amplitude(m));
    for (const auto& [m, amp] : b.amplitudes())
        if (a.amplitude(m) == cplx{0.0, 0.0}) d2 += std::norm(amp);
    return std::sqrt(d2);
}

}  // namespace tbq::test
