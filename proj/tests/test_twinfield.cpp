#include <gtest/gtest.h>

#include <cmath>

#include "cqds/twinfield.hpp"

using namespace cqds::twinfield;

namespace {

KeyRateReport expected_at(ChannelParams p, double d) {
    p.distance_km = d;
    return analyze(simulate_counts(p, Intensities{}, 0, Mode::Expected));
}

}  // namespace

TEST(TwinField, TransmittanceAtZeroIsDetectorEfficiency) {
    ChannelParams p;
    EXPECT_DOUBLE_EQ(p.transmittance(), 0.5);
    p.distance_km = 100;
    EXPECT_NEAR(p.transmittance(), 0.5 * std::pow(10.0, -1.5), 1e-15);
}

TEST(TwinField, ClassesFormADistribution) {
    ChannelParams p;
    p.phase_zero_prob = 1.0;
    p.no_send_fraction = 0.1;
    double total = 0;
    for (const auto& c : enumerate_classes(p, {})) total += c.prob;
    EXPECT_NEAR(total, 1.0, 1e-12);
    p.phase_zero_prob = 0.9;
    p.no_send_fraction = 0.0;
    total = 0;
    for (const auto& c : enumerate_classes(p, {})) total += c.prob;
    // Signal rounds with any pi phase are discarded.
    EXPECT_NEAR(total, 0.2 + 0.8 * 0.81, 1e-12);
}

TEST(TwinField, InterferenceFractions) {
    PulseClass same;
    same.bob = same.charlie = 0.1;
    same.passing = 0.2;
    EXPECT_NEAR(same.d1_fraction(0.0), 0.0, 1e-15);
    EXPECT_NEAR(same.d1_fraction(0.03), 0.03, 1e-15);
    same.cos_phase = -1.0;
    EXPECT_NEAR(same.d1_fraction(0.0), 1.0, 1e-15);
    PulseClass one;
    one.bob = one.passing = 0.15;
    EXPECT_NEAR(one.d1_fraction(0.2), 0.5, 1e-15);
}

TEST(TwinField, D1OnlyProbability) {
    EXPECT_DOUBLE_EQ(d1_only_prob(0, 0.5, 0.5, 0.0), 0.0);
    EXPECT_NEAR(d1_only_prob(0, 0.5, 0.5, 1e-3), 1e-3 * (1 - 1e-3), 1e-15);
    EXPECT_NEAR(d1_only_prob(1, 0.4, 0.5, 0.0), 0.2, 1e-15);
    // Two photons, no dark counts: D1 clicks and D2 stays silent.
    const double eta = 0.6, q = 0.3;
    const double direct = std::pow(1 - eta * (1 - q), 2) - std::pow(1 - eta, 2);
    EXPECT_NEAR(d1_only_prob(2, eta, q, 0.0), direct, 1e-15);
}

TEST(TwinField, NoLightNoClicks) {
    ChannelParams p;
    p.pulses = 1e6;
    p.dark_count = 0.0;
    p.distance_km = 1e5;
    const auto sim = simulate_counts(p, {}, 1);
    for (const auto& t : sim.classes) EXPECT_EQ(t.total_d1(), 0.0);
}

TEST(TwinField, VacuumClicksComeFromDarkCounts) {
    ChannelParams p;
    p.pulses = 1e7;
    p.dark_count = 1e-4;
    p.no_send_fraction = 1.0;
    p.decoy_fraction = 0.0;
    const auto s = signal_tallies(simulate_counts(p, {}, 2));
    const double expected = p.pulses * p.dark_count * (1 - p.dark_count);
    EXPECT_LT(std::abs(s.n_tot - expected), 5 * std::sqrt(expected));
}

TEST(TwinField, Hoeffding) {
    EXPECT_DOUBLE_EQ(hoeffding_adjust(1234, 1.0, Direction::Up), 1234);
    EXPECT_NEAR(hoeffding_adjust(1e6, 1e-12, Direction::Up) - 1e6, 3716.922, 1e-3);
    EXPECT_DOUBLE_EQ(hoeffding_adjust(3, 1e-12, Direction::Down), 0.0);
    EXPECT_NEAR(hoeffding_adjust(0, 1e-12, Direction::Up), 12 * std::log(10.0), 1e-9);
    EXPECT_THROW(hoeffding_adjust(-1, 0.1, Direction::Up), std::invalid_argument);
}

TEST(TwinField, Serfling) {
    EXPECT_DOUBLE_EQ(serfling_gamma(100, 10, 1.0), 0.0);
    EXPECT_NEAR(serfling_gamma(1e6, 1e5, 1e-12), 1115.077, 1e-3);
    const auto pure = serfling_transfer(1000, 0.05, 4e5, 1e5, 1.0);
    EXPECT_NEAR(pure.n1, 4000, 1e-9);
    EXPECT_NEAR(pure.e1, 0.05 + 0.0, 1e-12);
    const auto real = serfling_transfer(1000, 0.05, 4e5, 1e5, 1e-12);
    EXPECT_LE(real.n1, 4000);
    EXPECT_GE(real.e1, 0.05);
}

TEST(TwinField, TotalQber) {
    SignalTallies s;
    EXPECT_EQ(total_qber(s), 0.0);
    s.n_tot = 1000;
    s.n_ss = 30;
    s.n_00 = 10;
    EXPECT_DOUBLE_EQ(total_qber(s), 0.04);
}

TEST(TwinField, SignatureLength) {
    EXPECT_DOUBLE_EQ(signature_length(1e6, 0.5, 0, 0, 1.1), 0.0);
    EXPECT_DOUBLE_EQ(signature_length(1e6, 0.0, 1e6, 0.0, 1.1), 1e6);
    EXPECT_DOUBLE_EQ(signature_length(1e3, 0.1, 1e6, 0.1, 1.1), 0.0);
}

TEST(TwinField, DecoyBoundsEdgeCases) {
    ChannelParams p;
    p.pulses = 1e6;
    p.dark_count = 0.0;
    p.distance_km = 1e5;
    const auto c = decoy_counts(simulate_counts(p, {}, 3));
    const auto n1 = decoy_n1_lower(c, {});
    EXPECT_EQ(n1.value, 0.0);
    EXPECT_EQ(decoy_e1_upper(c, {}, 100.0), 0.0);
    DecoyCounts bad = c;
    bad.vacuum_prob = 0.0;
    EXPECT_THROW(decoy_n1_lower(bad, {}), std::invalid_argument);
    EXPECT_THROW(decoy_n1_lower(c, {0.1, 0.15}), std::invalid_argument);
}

TEST(TwinField, ExpectedBoundsBracketTruth) {
    ChannelParams p;
    p.pulses = 1e10;
    for (double d : {0.0, 50.0, 120.0}) {
        p.distance_km = d;
        const auto sim = simulate_counts(p, {}, 0, Mode::Expected);
        const auto truth = tagged_truth(sim);
        const auto c = decoy_counts(sim);
        const auto n1 = decoy_n1_lower(c, {}, p.failure_prob);
        EXPECT_LE(n1.value, truth.n1);
        EXPECT_GT(n1.value, 0.5 * truth.n1);
        EXPECT_GE(decoy_e1_upper(c, {}, n1.value, p.failure_prob), truth.e1);
    }
}

TEST(TwinField, BoundTightensWithPulseCount) {
    double prev = 0.0;
    for (double n : {1e6, 1e7, 1e8}) {
        ChannelParams p;
        p.pulses = n;
        const auto sim = simulate_counts(p, {}, 0, Mode::Expected);
        const double ratio = decoy_n1_lower(decoy_counts(sim), {}, p.failure_prob).value / tagged_truth(sim).n1;
        EXPECT_GT(ratio, prev);
        prev = ratio;
    }
}

TEST(TwinField, ErrorBoundGrowsWithMisalignment) {
    double prev = 0.0;
    for (double em : {0.0, 0.01, 0.03, 0.06}) {
        ChannelParams p;
        p.misalignment = em;
        const auto r = expected_at(p, 20);
        EXPECT_GT(r.e1_upper, prev);
        prev = r.e1_upper;
    }
}

TEST(TwinField, RateMonotoneInDistanceAndNoise) {
    ChannelParams p;
    double prev = INFINITY;
    for (double d = 0; d <= 250; d += 10) {
        const double r = expected_at(p, d).rate;
        EXPECT_LE(r, prev);
        prev = r;
    }
    EXPECT_EQ(prev, 0.0);
    auto rate_with = [](auto mutate) {
        ChannelParams q;
        mutate(q);
        return expected_at(q, 50).rate;
    };
    EXPECT_GE(rate_with([](ChannelParams&) {}), rate_with([](ChannelParams& q) { q.misalignment = 0.05; }));
    EXPECT_GE(rate_with([](ChannelParams&) {}), rate_with([](ChannelParams& q) { q.dark_count = 1e-5; }));
    EXPECT_GE(rate_with([](ChannelParams&) {}), rate_with([](ChannelParams& q) { q.ec_efficiency = 1.3; }));
}

TEST(TwinField, SiftedLength) {
    ChannelParams p;
    p.phase_zero_prob = 1.0;
    const auto l = sifted_length(p, {});
    EXPECT_NEAR(l.formula, 1e10 * 0.15 * std::exp(-0.15), 1.0);
    EXPECT_NEAR(l.formula / 1e9, 1.29, 0.005);
    EXPECT_GT(l.expected, 0.0);
    p.pulses = 0;
    EXPECT_EQ(sifted_length(p, {}).expected, 0.0);
    EXPECT_EQ(sifted_length(p, {}).formula, 0.0);
    double prev = INFINITY;
    ChannelParams q;
    for (double d = 0; d <= 200; d += 20) {
        q.distance_km = d;
        const double l2 = sifted_length(q, {}).expected;
        EXPECT_LE(l2, prev);
        prev = l2;
    }
}

TEST(TwinField, AppendixIdentitiesAndYieldInvariance) {
    ChannelParams p;
    p.pulses = 1e7;
    const auto sim = simulate_counts(p, {}, 11);
    const auto a = appendix_a(sim);
    EXPECT_LT(a.gain.z(), 5.0);
    EXPECT_LT(a.error.z(), 5.0);
    for (int k : {0, 1, 2}) EXPECT_LT(yield_invariance(sim, k).z(), 5.0) << k;
}

TEST(TwinField, ParameterValidation) {
    ChannelParams p;
    p.misalignment = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.ec_efficiency = 0.9;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.phase_zero_prob = 0.4;
    EXPECT_FALSE(p.warnings().empty());
    EXPECT_TRUE(ChannelParams{}.warnings().empty());
}
