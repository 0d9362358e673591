#include <gtest/gtest.h>

#include <cmath>

#include "cqds/adversary.hpp"

using namespace cqds;
using namespace cqds::adversary;

namespace {

DistributionConfig config(std::uint64_t rounds, double r) {
    DistributionConfig cfg;
    cfg.rounds = rounds;
    cfg.bob.inject_rate = cfg.charlie.inject_rate = r;
    return cfg;
}

}  // namespace

TEST(Repudiation, NoCheatNeverSucceeds) {
    RepudiationExperiment ex{config(2000, 0.05), {0.0, RepudiationTarget::AllOfSigma}};
    EXPECT_EQ(repudiation_rate(ex, 200, 1).successes, 0u);
}

TEST(Repudiation, LargeCheatIsCaughtByBob) {
    RepudiationExperiment ex{config(4000, 0.1), {0.5, RepudiationTarget::InjectedOnly}};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto o = repudiation_trial(ex, s);
        EXPECT_FALSE(o.bob_accepts);
        EXPECT_FALSE(o.charlie_accepts);
    }
}

TEST(Repudiation, StrategiesKeepPackagesWellFormed) {
    const Transcript t = run_distribution(config(4000, 0.05), 3);
    const auto pkg = sign_plain({0}, sift(t));
    Stream rng(1, 2);
    for (auto target : {RepudiationTarget::AllOfSigma, RepudiationTarget::InjectedOnly, RepudiationTarget::D2toD1,
                        RepudiationTarget::D1toD2}) {
        const auto out = apply_repudiation(pkg, {0.2, target}, t, rng);
        EXPECT_NO_THROW(out.validate());
        if (target == RepudiationTarget::D1toD2) EXPECT_LT(out.key.size(), pkg.key.size());
        if (target == RepudiationTarget::D2toD1) EXPECT_GT(out.fabricated, 0u);
    }
}

TEST(Repudiation, EmpiricalRateBelowChernoffBound) {
    RepudiationExperiment ex{config(4000, 0.1), {0.5, RepudiationTarget::AllOfSigma}};
    const auto est = repudiation_rate(ex, 500, 9);
    EXPECT_LE(est.rate(), chernoff_bound_for(ex));
}

TEST(Forgery, PlainPackageForgedWithUnitProbability) {
    ForgeryExperiment ex{config(4000, 0.05), {1.0, ForgeryTarget::OwnInjectedBits}};
    for (std::uint64_t s = 0; s < 20; ++s) EXPECT_TRUE(forgery_trial(ex, s).success()) << s;
}

TEST(Forgery, RepetitionCodeDefeatsOwnBitFlips) {
    ForgeryExperiment ex{config(4000, 0.05), {1.0, ForgeryTarget::OwnInjectedBits}};
    ex.use_code = true;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto o = forgery_trial(ex, s);
        EXPECT_FALSE(o.message_changed);
        EXPECT_FALSE(o.success());
        EXPECT_GT(o.block_length, 1u);
    }
}

TEST(Forgery, FlippingEverythingIsDetected) {
    ForgeryExperiment ex{config(4000, 0.05), {1.0, ForgeryTarget::AllOfSigma}};
    for (std::uint64_t s = 0; s < 10; ++s) EXPECT_FALSE(forgery_trial(ex, s).charlie_accepts);
}

TEST(Eve, ErrorRateChannelReproducesClosedForm) {
    for (double w : {0.25, 0.5, 1.0}) {
        const auto run = eve_intercept_resend(config(200000, 0.0), {w, EveChannel::ErrorRates}, 4);
        const auto est = estimate_channel_error(run.transcript, announce_flips(run.transcript));
        EXPECT_NEAR(est.e, bounds::qber_eve(w, 0.0), 0.01) << w;
        EXPECT_NEAR(run.ledger.information(), w / 2.0, 0.01);
    }
}

TEST(Eve, PhotonicChannelBreaksCoherence) {
    // Eve's resent photon loses the two-arm interference: a quarter of the
    // matched-gate rounds end outside D2 at w = 1.
    const auto run = eve_intercept_resend(config(200000, 0.0), {1.0, EveChannel::Photonic}, 6);
    const auto rep = coherence_check(run.transcript);
    EXPECT_NEAR(rep.rate(), 0.25, 0.01);
    const auto honest = coherence_check(run_distribution(config(50000, 0.0), 6));
    EXPECT_EQ(honest.violations, 0u);
    EXPECT_GT(honest.eligible, 0u);
}

TEST(Eve, PhotonicQberMatchesItsOwnModel) {
    for (double w : {0.5, 1.0}) {
        const auto run = eve_intercept_resend(config(200000, 0.0), {w, EveChannel::Photonic}, 8);
        const auto est = estimate_channel_error(run.transcript, announce_flips(run.transcript));
        EXPECT_NEAR(est.e, w / (4.0 - 2.0 * w), 0.02) << w;
    }
}
