#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "tbq/oracle.hpp"

using namespace tbq;
using std::numbers::pi;

namespace {

Apparatus reference_apparatus(int d, int beta) {
    TimeGrid g = test::grid_d(d);
    return build_measurement_chain(d, beta, ideal_hardware(stage_count_for_dimension(d)),
                                   g);
}

double identity_deviation(const std::vector<std::vector<double>>& p) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p[i].size(); ++j)
            worst = std::max(worst, std::abs(p[i][j] - (i == j ? 1.0 : 0.0)));
    return worst;
}

}  // namespace

TEST_CASE("an empty chain compiles to the identity matrix") {
    Apparatus a;
    a.grid = test::grid_d(4);
    a.input_pol = Polarization::H;
    auto m = oracle::full_matrix(a);
    CHECK(m.rows() == 4);
    CHECK(m.cols() == 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(std::abs(m.at(r, c) - (r == c ? cplx{1.0, 0.0} : cplx{0.0, 0.0})) <
                  1e-15);
}

TEST_CASE("matrix route equals modular propagation on random states") {
    Rng rng(1234);
    for (int d : {4, 8})
        for (int beta : {0, 1}) {
            Apparatus a = reference_apparatus(d, beta);
            auto m = oracle::full_matrix(a);
            for (int trial = 0; trial < 20; ++trial) {
                PhotonicState s = test::random_input_state(rng, a.grid);
                PhotonicState via_matrix = m.apply_state(s);
                PhotonicState via_chain = propagate(s, a);
                CHECK(test::state_distance(via_matrix, via_chain) < 1e-10);
            }
        }
}

TEST_CASE("matrix route agrees for degraded hardware too") {
    Rng rng(77);
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    hw.delta_phi_rad = {0.9 * pi, 0.8 * pi};
    hw.theta_rad = {0.7, pi / 4.0};
    hw.extra_phase_rad = {pi, 0.0};
    hw.couplings = {0.8, 0.76};
    for (int beta : {0, 1}) {
        Apparatus a = build_measurement_chain(4, beta, hw, g);
        auto m = oracle::full_matrix(a);
        for (int trial = 0; trial < 10; ++trial) {
            PhotonicState s = test::random_input_state(rng, g);
            CHECK(test::state_distance(m.apply_state(s), propagate(s, a)) < 1e-10);
        }
    }
}

TEST_CASE("lossless chains compile to isometries") {
    for (int d : {2, 4, 8})
        for (int beta : {0, 1}) {
            auto m = oracle::full_matrix(reference_apparatus(d, beta));
            CHECK(m.isometry_error() < 1e-10);
        }
}

TEST_CASE("attenuation bounds the operator norm") {
    Apparatus a;
    a.grid = test::grid_d(4);
    a.elements = {Attenuator{0.5}};
    auto m = oracle::full_matrix(a);
    CHECK(m.operator_norm() <= std::sqrt(0.5) + 1e-10);
    CHECK(m.operator_norm() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));

    // With the full chain behind it the bound still holds.
    Apparatus chain = reference_apparatus(4, 0);
    chain.elements.insert(chain.elements.begin(), Attenuator{0.5});
    auto m2 = oracle::full_matrix(chain);
    CHECK(m2.operator_norm() <= std::sqrt(0.5) + 1e-10);
}

TEST_CASE("ideal confusion matrices: identity matched, flat crossed") {
    for (int beta : {0, 1}) {
        Apparatus a = reference_apparatus(4, beta);
        auto matched = oracle::confusion_matrix(a, beta);
        CHECK(identity_deviation(matched) < 1e-9);
        auto crossed = oracle::confusion_matrix(a, 1 - beta);
        for (const auto& row : crossed)
            for (double x : row) CHECK(x == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("ideal confusion matrices are doubly stochastic") {
    for (int beta : {0, 1}) {
        auto p = oracle::confusion_matrix(reference_apparatus(4, beta), beta);
        for (int i = 0; i < 4; ++i) {
            double row = 0.0, col = 0.0;
            for (int j = 0; j < 4; ++j) {
                row += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                col += p[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("partial switching shows up exactly in the analytic diagonals") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    hw.delta_phi_rad = {0.9 * pi, 0.9 * pi};
    double eta = std::pow(std::sin(0.45 * pi), 2);  // single-pass switch prob

    // Superposition basis: every state interferes at both stages.
    Apparatus sup = build_measurement_chain(4, 1, hw, g);
    auto p1 = oracle::confusion_matrix(sup, 1);
    for (int i = 0; i < 4; ++i) {
        double diag = p1[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
        CHECK(diag < 1.0);
        CHECK(diag > 0.8);
        double row = 0.0;
        for (double x : p1[static_cast<std::size_t>(i)]) row += x;
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }

    // Computational basis: each time bin is pumped a definite number of
    // times, and the diagonals are the matching powers of the switch
    // probability. One state rides through unpumped.
    Apparatus comp = build_measurement_chain(4, 0, hw, g);
    auto p0 = oracle::confusion_matrix(comp, 0);
    std::vector<double> diags;
    for (int i = 0; i < 4; ++i)
        diags.push_back(p0[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
    std::sort(diags.begin(), diags.end());
    CHECK(diags[0] == doctest::Approx(eta * eta).epsilon(1e-12));
    CHECK(diags[1] == doctest::Approx(eta).epsilon(1e-12));
    CHECK(diags[2] == doctest::Approx(eta).epsilon(1e-12));
    CHECK(diags[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("oracle windows coincide with the modular routing table") {
    for (int d : {4, 8})
        for (int beta : {0, 1}) {
            Apparatus a = reference_apparatus(d, beta);
            DetectionWindows chain_w = routing_table(a, beta);
            DetectionWindows oracle_w = oracle::routing_windows(a, beta);
            REQUIRE(chain_w.windows.size() == oracle_w.windows.size());
            for (std::size_t i = 0; i < chain_w.windows.size(); ++i) {
                CHECK(chain_w.windows[i].outcome == oracle_w.windows[i].outcome);
                CHECK(chain_w.windows[i].center_ns ==
                      doctest::Approx(oracle_w.windows[i].center_ns).epsilon(1e-12));
            }
        }
}

TEST_CASE("windows also agree under the compensated pump phase") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    hw.extra_phase_rad[0] = pi;
    auto comp = preparation_compensation_phases(hw, 4);
    Apparatus a = build_measurement_chain(4, 1, hw, g);
    DetectionWindows chain_w = routing_table(a, 1, comp);
    DetectionWindows oracle_w = oracle::routing_windows(a, 1, comp);
    for (std::size_t i = 0; i < chain_w.windows.size(); ++i)
        CHECK(chain_w.windows[i].center_ns ==
              doctest::Approx(oracle_w.windows[i].center_ns).epsilon(1e-12));
}

TEST_CASE("mode closure beyond the cap raises a complexity error") {
    Apparatus a = reference_apparatus(8, 1);
    CHECK_THROWS_AS(oracle::full_matrix(a, 8), Error);
    try {
        oracle::full_matrix(a, 8);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::complexity_error);
    }
    // The d = 8 chain stays far below the default cap.
    CHECK_NOTHROW(oracle::full_matrix(a));
    CHECK(oracle::full_matrix(a).rows() < oracle::kDefaultModeCap);
}

TEST_CASE("states outside the input basis are rejected by the matrix") {
    Apparatus a = reference_apparatus(4, 0);
    auto m = oracle::full_matrix(a);
    PhotonicState bad(a.grid);
    bad.set_amplitude({0, 0, Polarization::V}, {1.0, 0.0});
    CHECK_THROWS_AS(m.apply_state(bad), Error);
}
