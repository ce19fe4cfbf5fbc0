// QKD figures of merit: detection probabilities, state fidelities, QBER,
// d-dimensional Shannon entropy, the high-dimensional BB84 secret key rate
// R(Q) = log2(d) - 2 h_d(Q), and the zero-rate threshold.

#pragma once

#include <cmath>
#include <vector>

#include "tbq/errors.hpp"
#include "tbq/montecarlo.hpp"

namespace tbq {

// Row-normalized detection probabilities over the d in-window outcomes; the
// no-window bucket is reported elsewhere and excluded here.
inline std::vector<std::vector<double>> probabilities(const CountMatrix& counts) {
    std::vector<std::vector<double>> p;
    for (int i = 0; i < counts.dimension; ++i) {
        std::uint64_t total = counts.row_total(i, /*include_no_window=*/false);
        if (total == 0)
            throw Error(ErrorCode::insufficient_data,
                        "no in-window counts for prepared state " +
                            std::to_string(i));
        std::vector<double> row;
        for (int j = 0; j < counts.dimension; ++j)
            row.push_back(
                static_cast<double>(
                    counts.counts[static_cast<std::size_t>(i)]
                                 [static_cast<std::size_t>(j)]) /
                static_cast<double>(total));
        p.push_back(std::move(row));
    }
    return p;
}

inline double qber(const std::vector<double>& fidelities, int d) {
    if (static_cast<int>(fidelities.size()) != 2 * d)
        throw Error(ErrorCode::shape_error,
                    "expected 2d fidelities, got " +
                        std::to_string(fidelities.size()));
    double sum = 0.0;
    for (double f : fidelities) {
        if (f < 0.0 || f > 1.0)
            throw Error(ErrorCode::domain_error, "fidelity outside [0, 1]");
        sum += f;
    }
    return 1.0 - sum / static_cast<double>(2 * d);
}

// h_d(x) = -x log2(x / (d-1)) - (1-x) log2(1-x), with 0 log 0 := 0 by an
// explicit branch.
inline double shannon_entropy_d(double x, int d) {
    if (d < 2)
        throw Error(ErrorCode::domain_error, "entropy needs d >= 2");
    if (x < 0.0 || x > 1.0)
        throw Error(ErrorCode::domain_error, "entropy argument outside [0, 1]");
    double h = 0.0;
    if (x > 0.0) h -= x * std::log2(x / static_cast<double>(d - 1));
    if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
    return h;
}

// May be negative; callers that want a payable rate clamp it themselves.
inline double secret_key_rate(int d, double q) {
    return std::log2(static_cast<double>(d)) - 2.0 * shannon_entropy_d(q, d);
}

// QBER where the key rate crosses zero, by bisection on (0, (d-1)/d).
inline double key_rate_threshold(int d, double tolerance = 1e-10) {
    if (d < 2)
        throw Error(ErrorCode::domain_error, "threshold needs d >= 2");
    double lo = 0.0;
    double hi = static_cast<double>(d - 1) / static_cast<double>(d);
    // The rate must fall monotonically up to the root for bisection to make
    // sense; spot-check on a coarse grid.
    double prev = secret_key_rate(d, 0.0);
    for (int i = 1; i <= 64; ++i) {
        double q = hi * static_cast<double>(i) / 64.0;
        double r = secret_key_rate(d, q);
        if (r > prev + 1e-12 && prev > 0.0)
            throw Error(ErrorCode::domain_error,
                        "key rate is not decreasing before its root");
        prev = r;
    }
    while (hi - lo > tolerance) {
        double mid = 0.5 * (lo + hi);
        if (secret_key_rate(d, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct KeyRateReport {
    int dimension = 0;
    std::vector<double> fidelities_computational;
    std::vector<double> fidelities_superposition;
    double qber = 0.0;
    double rate_bits = 0.0;
    double threshold_qber = 0.0;
};

inline KeyRateReport report_from_fidelities(
    const std::vector<double>& computational,
    const std::vector<double>& superposition, int d) {
    if (static_cast<int>(computational.size()) != d ||
        static_cast<int>(superposition.size()) != d)
        throw Error(ErrorCode::shape_error, "need d fidelities per basis");
    KeyRateReport r;
    r.dimension = d;
    r.fidelities_computational = computational;
    r.fidelities_superposition = superposition;
    std::vector<double> all = computational;
    all.insert(all.end(), superposition.begin(), superposition.end());
    r.qber = qber(all, d);
    r.rate_bits = secret_key_rate(d, r.qber);
    r.threshold_qber = key_rate_threshold(d);
    return r;
}

// Fidelities are the matched-basis diagonals F_i = P_ii.
inline KeyRateReport build_report(const ExperimentCounts& counts) {
    auto it00 = counts.find(BasisPair{0, 0});
    auto it11 = counts.find(BasisPair{1, 1});
    if (it00 == counts.end() || it11 == counts.end())
        throw Error(ErrorCode::insufficient_data,
                    "matched-basis counts (0,0) and (1,1) are required");
    int d = it00->second.dimension;
    auto p00 = probabilities(it00->second);
    auto p11 = probabilities(it11->second);
    std::vector<double> f0, f1;
    for (int i = 0; i < d; ++i) {
        f0.push_back(p00[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
        f1.push_back(p11[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
    }
    return report_from_fidelities(f0, f1, d);
}

}  // namespace tbq
