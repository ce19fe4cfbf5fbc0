#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tbq/analysis.hpp"
#include "tbq/montecarlo.hpp"
#include "tbq/oracle.hpp"
#include "tbq/serialize.hpp"

using namespace tbq;

namespace {

ExperimentPlan small_plan(std::uint64_t shots, std::uint64_t seed) {
    ExperimentPlan p;
    p.dimension = 4;
    p.shots = shots;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("poisson sampler matches the weak-pulse click probability") {
    Rng rng(42);
    const int n = 200000;
    int clicks = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        auto k = rng.poisson(0.14);
        sum += static_cast<double>(k);
        if (k >= 1) ++clicks;
    }
    double p_click = 1.0 - std::exp(-0.14);  // 0.13064
    double freq = static_cast<double>(clicks) / n;
    double se = std::sqrt(p_click * (1.0 - p_click) / n);
    CHECK(std::abs(freq - p_click) < 4.0 * se);
    CHECK(sum / n == doctest::Approx(0.14).epsilon(0.02));
}

TEST_CASE("normal sampler has the requested spread") {
    Rng rng(7);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(350.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double sigma = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 5.0);
    CHECK(sigma == doctest::Approx(350.0).epsilon(0.02));
}

TEST_CASE("no light and no dark counts means no clicks") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    noise.mean_photon_number = 0.0;
    noise.dark_count_rate_hz = 0.0;
    ExperimentPlan plan = small_plan(1000, 5);
    plan.bases = {{0, 0}};
    auto counts = run_experiment(plan, g, hw, noise);
    for (const auto& row : counts.at(BasisPair{0, 0}).counts)
        for (auto c : row) CHECK(c == 0);
}

TEST_CASE("jitter-free ideal optics click only in the prepared bin") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    noise.jitter_sigma_ps = 0.0;
    ExperimentPlan plan = small_plan(20000, 11);
    plan.bases = {{0, 0}};
    auto cm = run_experiment(plan, g, hw, noise).at(BasisPair{0, 0});
    for (int i = 0; i < 4; ++i) {
        std::uint64_t total = cm.row_total(i);
        CHECK(total > 0);
        CHECK(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] ==
              total);
        // Detection rate tracks 1 - e^-mu.
        double rate = static_cast<double>(total) / static_cast<double>(plan.shots);
        double expected = 1.0 - std::exp(-0.14);
        CHECK(std::abs(rate - expected) <
              4.0 * std::sqrt(expected * (1.0 - expected) /
                              static_cast<double>(plan.shots)));
    }
}

TEST_CASE("counts never exceed one per shot") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    noise.mean_photon_number = 5.0;  // heavy multi-photon regime
    noise.dark_count_rate_hz = 5e7;
    ExperimentPlan plan = small_plan(2000, 3);
    plan.bases = {{0, 0}, {1, 1}};
    auto counts = run_experiment(plan, g, hw, noise);
    for (const auto& [pair, cm] : counts)
        for (int i = 0; i < cm.dimension; ++i)
            CHECK(cm.row_total(i) <= plan.shots);
}

TEST_CASE("dark counts alone produce clicks across and outside windows") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    noise.mean_photon_number = 0.0;
    noise.dark_count_rate_hz = 2e8;
    ExperimentPlan plan = small_plan(5000, 9);
    plan.bases = {{0, 0}};
    auto cm = run_experiment(plan, g, hw, noise).at(BasisPair{0, 0});
    std::uint64_t in_window = 0, no_window = 0;
    for (int i = 0; i < 4; ++i) {
        in_window += cm.row_total(i, false);
        no_window += cm.counts[static_cast<std::size_t>(i)][4];
    }
    CHECK(in_window > 0);
    CHECK(no_window > 0);
}

TEST_CASE("identical seeds give byte-identical results") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    ExperimentPlan plan = small_plan(4000, 42);
    auto a = run_experiment(plan, g, hw, noise);
    auto b = run_experiment(plan, g, hw, noise);
    CHECK(a == b);
    Provenance prov{0x1234, plan.seed};
    CHECK(counts_to_csv(a, prov) == counts_to_csv(b, prov));

    plan.seed = 43;
    auto c = run_experiment(plan, g, hw, noise);
    CHECK(a != c);
}

TEST_CASE("sharded runs are deterministic and spend the full budget") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    NoiseModel noise;
    noise.jitter_sigma_ps = 0.0;
    ExperimentPlan plan = small_plan(4001, 17);
    plan.shards = 4;
    plan.bases = {{0, 0}};
    auto a = run_experiment(plan, g, hw, noise);
    auto b = run_experiment(plan, g, hw, noise);
    CHECK(a == b);
    // Every shot is a Bernoulli(1 - e^-mu) detection here, so totals stay
    // within binomial range of the full budget.
    double p = 1.0 - std::exp(-0.14);
    double expected = p * static_cast<double>(plan.shots);
    double slack = 4.0 * std::sqrt(static_cast<double>(plan.shots) * p * (1.0 - p));
    auto total = static_cast<double>(a.at(BasisPair{0, 0}).row_total(0));
    CHECK(std::abs(total - expected) < slack);
}

TEST_CASE("empirical frequencies track the oracle probabilities") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    hw.delta_phi_rad = {0.9 * std::numbers::pi, std::numbers::pi};
    NoiseModel noise;
    ExperimentPlan plan = small_plan(30000, 101);
    plan.bases = {{0, 0}, {0, 1}};
    auto counts = run_experiment(plan, g, hw, noise);
    auto comp = preparation_compensation_phases(hw, 4);
    for (const auto& [pair, cm] : counts) {
        Apparatus a = build_measurement_chain(4, pair.beta, hw, g);
        auto analytic = oracle::confusion_matrix(a, pair.alpha, comp);
        auto freq = probabilities(cm);
        for (int i = 0; i < 4; ++i) {
            auto n = static_cast<double>(cm.row_total(i, false));
            for (int j = 0; j < 4; ++j) {
                double p = analytic[static_cast<std::size_t>(i)]
                                   [static_cast<std::size_t>(j)];
                double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
                CHECK(std::abs(freq[static_cast<std::size_t>(i)]
                                   [static_cast<std::size_t>(j)] -
                               p) <= 4.0 * se + 1e-9);
            }
        }
    }
}

TEST_CASE("losses scale detection rates without skewing outcomes") {
    TimeGrid g = test::grid_d(4);
    HardwareParams hw = ideal_hardware(2);
    hw.couplings = {0.8, 0.76};
    NoiseModel noise;
    noise.detector_efficiency = 0.5;
    noise.jitter_sigma_ps = 0.0;
    ExperimentPlan plan = small_plan(40000, 23);
    plan.bases = {{0, 0}};
    auto cm = run_experiment(plan, g, hw, noise).at(BasisPair{0, 0});
    // Thinned Poisson source: survivors are Poisson with mean mu * T.
    double p_det = 1.0 - std::exp(-0.14 * 0.8 * 0.76 * 0.5);
    for (int i = 0; i < 4; ++i) {
        auto total = static_cast<double>(cm.row_total(i));
        double se = std::sqrt(static_cast<double>(plan.shots) * p_det * (1.0 - p_det));
        CHECK(std::abs(total - p_det * static_cast<double>(plan.shots)) <
              4.0 * se);
        CHECK(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] ==
              cm.row_total(i));
    }
}
