#pragma once

// Closed-form security quantities: Chernoff cheat bounds, minimum round counts
// from the Singleton and Hamming bounds, the intercept-resend QBER model and
// the I_A = I_E threshold.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cqds/optics.hpp"

namespace cqds::bounds {

/// h(x) in bits, with h(0) = h(1) = 0.
inline double binary_entropy(double x) {
    require_probability(x, "entropy argument");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

struct CheatBound {
    double tau = 0.0;
    double expectation = 0.0;
    double bound = 0.0;
    /// True when the bound exceeds 1 and therefore says nothing.
    [[nodiscard]] bool vacuous() const noexcept { return bound > 1.0; }
};

/// 2 exp(-tau^2 <X> / 3), reported as-is even when above 1.
inline CheatBound chernoff(double tau, double expectation) {
    require_probability(tau, "tau");
    if (!(expectation >= 0.0)) throw std::invalid_argument("expectation must be non-negative");
    return {tau, expectation, 2.0 * std::exp(-tau * tau * expectation / 3.0)};
}

/// Alice's repudiation, with <X>_A = N (r_b + r_c) / 8 injected D1 detections.
inline CheatBound chernoff_repudiation(double tau_a, double rounds, double r_b, double r_c) {
    require_probability(r_b, "r_b");
    require_probability(r_c, "r_c");
    if (!(rounds >= 0.0)) throw std::invalid_argument("round count must be non-negative");
    return chernoff(tau_a, rounds * (r_b + r_c) / 8.0);
}

/// Bob's forgery. The expectation <Y>_B is supplied by the caller.
inline CheatBound chernoff_forgery(double tau_b, double expectation_y) { return chernoff(tau_b, expectation_y); }

/// N_Sing = 4|M| / (1 - r).
inline double singleton_min_n(double message_bits, double r) {
    if (!(message_bits >= 1.0)) throw std::invalid_argument("message length must be >= 1");
    if (!(r >= 0.0 && r < 1.0)) throw std::domain_error("Singleton bound diverges for r >= 1");
    return 4.0 * message_bits / (1.0 - r);
}

/// N_Hamm = 4|M| / [(1 + r)(1 - h(r))], valid for r <= 1/2.
inline double hamming_min_n(double message_bits, double r) {
    if (!(message_bits >= 1.0)) throw std::invalid_argument("message length must be >= 1");
    if (!(r >= 0.0 && r <= 0.5)) throw std::domain_error("Hamming bound requires 0 <= r <= 1/2");
    const double h = binary_entropy(r);
    if (h >= 1.0) return INFINITY;
    return 4.0 * message_bits / ((1.0 + r) * (1.0 - h));
}

/// e = (p1 + p2 + r) / (1 + 4 p3 + r).
inline double qber(double p1, double p2, double p3, double r) {
    require_probability(p1, "p1");
    require_probability(p2, "p2");
    require_probability(p3, "p3");
    require_probability(r, "r");
    return (p1 + p2 + r) / (1.0 + 4.0 * p3 + r);
}

/// QBER under intercept-resend at rate w: (1/2) [w(1+r) + r] / [1 + 2w(1+r) + r].
inline double qber_eve(double w, double r) {
    require_probability(w, "w");
    require_probability(r, "r");
    return 0.5 * (w * (1.0 + r) + r) / (1.0 + 2.0 * w * (1.0 + r) + r);
}

struct EveModel {
    double w = 0.0;
    double r = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
    double e = 0.0;
    double info_alice = 0.0;  // I_A = 1 - h(e)
    double info_eve = 0.0;    // I_E = w / 2

    [[nodiscard]] double advantage() const noexcept { return info_alice - info_eve; }
};

inline EveModel eve_model(double w, double r) {
    EveModel m;
    m.w = w;
    m.r = r;
    m.p1 = m.p2 = w * (1.0 + r) / 4.0;
    m.p3 = w * (1.0 + r) / 2.0;
    m.e = qber_eve(w, r);
    m.info_alice = 1.0 - binary_entropy(m.e);
    m.info_eve = w / 2.0;
    return m;
}

struct Threshold {
    double w_star = 0.0;
    double e_max = 0.0;
    bool bracketed = false;  // false: I_A > I_E on all of (0, 1]
};

/// Solves 1 - h(e(w, r)) - w/2 = 0 on (0, 1] by bisection to |dw| <= tol.
inline Threshold secure_threshold(double r, double tol = 1e-9) {
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in [0, 1)");
    auto gap = [r](double w) { return eve_model(w, r).advantage(); };
    double lo = 0.0;
    double hi = 1.0;
    if (gap(hi) > 0.0) return {1.0, qber_eve(1.0, r), false};
    if (gap(lo) <= 0.0) return {0.0, qber_eve(0.0, r), true};
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    const double w = 0.5 * (lo + hi);
    return {w, qber_eve(w, r), true};
}

struct Fig2Row {
    double r;
    double n_singleton;
    double n_hamming;
};

inline std::vector<Fig2Row> fig2_table(double message_bits, double r_lo, double r_hi, int points) {
    if (points < 2) throw std::invalid_argument("need at least two grid points");
    std::vector<Fig2Row> rows;
    rows.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double r = r_lo + (r_hi - r_lo) * i / (points - 1);
        rows.push_back({r, singleton_min_n(message_bits, r), hamming_min_n(message_bits, r)});
    }
    return rows;
}

struct Fig3Row {
    double w;
    double e;
    double info_gap;  // I_A - I_E
};

inline std::vector<Fig3Row> fig3_curve(double r, int points) {
    if (points < 2) throw std::invalid_argument("need at least two grid points");
    std::vector<Fig3Row> rows;
    rows.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double w = static_cast<double>(i) / (points - 1);
        const EveModel m = eve_model(w, r);
        rows.push_back({w, m.e, m.advantage()});
    }
    return rows;
}

}  // namespace cqds::bounds
