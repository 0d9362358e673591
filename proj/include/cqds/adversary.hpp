#pragma once

// Cheating and eavesdropping models, written as transformations of
// transcripts and signature packages so their success rates can be measured
// against the closed-form bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cqds/bounds.hpp"
#include "cqds/optics.hpp"
#include "cqds/parallel.hpp"
#include "cqds/protocol.hpp"
#include "cqds/rng.hpp"

namespace cqds::adversary {

enum class RepudiationTarget : std::uint8_t { AllOfSigma, InjectedOnly, D2toD1, D1toD2 };

struct RepudiationStrategy {
    double tau = 0.0;
    RepudiationTarget target = RepudiationTarget::AllOfSigma;
};

enum class ForgeryTarget : std::uint8_t { AllOfSigma, OwnInjectedBits };

struct ForgeryStrategy {
    double tau = 0.0;
    ForgeryTarget target = ForgeryTarget::OwnInjectedBits;
};

namespace detail {

// round(tau * |candidates|) distinct entries, uniformly at random.
inline std::vector<std::size_t> pick(std::vector<std::size_t> candidates, double tau, Stream& rng) {
    const auto k = static_cast<std::size_t>(std::llround(tau * double(candidates.size())));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t span = candidates.size() - i;
        const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(rng.uniform() * double(span)));
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(k);
    return candidates;
}

}  // namespace detail

/// Alice's cheat applied to her own package. The transcript is the
/// simulator's ground truth, used to locate injected and D2 rounds.
inline SignaturePackage apply_repudiation(const SignaturePackage& pkg, const RepudiationStrategy& s,
                                          const Transcript& t, Stream& rng) {
    require_probability(s.tau, "tau_A");
    pkg.validate();
    SignaturePackage out = pkg;
    if (s.tau == 0.0) return out;
    switch (s.target) {
        case RepudiationTarget::AllOfSigma:
        case RepudiationTarget::InjectedOnly: {
            std::vector<std::size_t> cand;
            for (std::size_t i = 0; i < pkg.coordinates.size(); ++i) {
                const Origin o = t.records.at(pkg.coordinates[i]).origin;
                if (s.target == RepudiationTarget::AllOfSigma || o == Origin::InjectedByBob ||
                    o == Origin::InjectedByCharlie) {
                    cand.push_back(i);
                }
            }
            for (std::size_t i : detail::pick(std::move(cand), s.tau, rng)) out.key[i] ^= 1;
            break;
        }
        case RepudiationTarget::D1toD2: {
            std::vector<std::size_t> all(pkg.coordinates.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            std::vector<std::uint8_t> drop(all.size(), 0);
            for (std::size_t i : detail::pick(std::move(all), s.tau, rng)) drop[i] = 1;
            out.key.clear();
            out.coordinates.clear();
            for (std::size_t i = 0; i < pkg.coordinates.size(); ++i) {
                if (drop[i]) continue;
                out.key.push_back(pkg.key[i]);
                out.coordinates.push_back(pkg.coordinates[i]);
            }
            break;
        }
        case RepudiationTarget::D2toD1: {
            // Announce a fraction tau (relative to the package size) of D2 rounds as D1
            // with random bits; the result stays sorted by round.
            std::vector<std::size_t> d2;
            for (const auto& r : t.records) {
                if (r.outcome.is_d2()) d2.push_back(r.index);
            }
            const double frac = d2.empty() ? 0.0 : std::min(1.0, s.tau * double(pkg.coordinates.size()) / double(d2.size()));
            auto fake = detail::pick(std::move(d2), frac, rng);
            std::sort(fake.begin(), fake.end());
            std::vector<std::uint64_t> coords;
            std::vector<int> key;
            std::size_t a = 0;
            std::size_t b = 0;
            while (a < pkg.coordinates.size() || b < fake.size()) {
                if (b == fake.size() || (a < pkg.coordinates.size() && pkg.coordinates[a] < fake[b])) {
                    coords.push_back(pkg.coordinates[a]);
                    key.push_back(pkg.key[a]);
                    ++a;
                } else {
                    coords.push_back(fake[b]);
                    key.push_back(rng.bernoulli(0.5) ? 1 : 0);
                    ++b;
                }
            }
            out.coordinates = std::move(coords);
            out.key = std::move(key);
            out.fabricated = pkg.fabricated + fake.size();
            break;
        }
    }
    return out;
}

/// Bob's tampering before forwarding: flips a fraction tau of the targeted
/// key bits and, for a plain package, replaces the message by its complement.
inline SignaturePackage apply_forgery(const SignaturePackage& pkg, const ForgeryStrategy& s,
                                      const VerifierView& bob, Stream& rng) {
    require_probability(s.tau, "tau_B");
    pkg.validate();
    SignaturePackage out = pkg;
    if (s.tau == 0.0) return out;
    // Flipping to j' on an unflipped round where both gates reflect j' claims
    // an impossible D1; Bob sees the announced gates and avoids those.
    auto exposes = [&](std::size_t i) {
        const std::uint8_t g = bob.gates[pkg.coordinates[i]];
        const unsigned flipped = unsigned(pkg.key[i] & 1) ^ 1U;
        return (g & 4U) == 0 && (g & 1U) == flipped && ((g >> 1) & 1U) == flipped;
    };
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < pkg.coordinates.size(); ++i) {
        const std::uint64_t c = pkg.coordinates[i];
        if (s.target == ForgeryTarget::AllOfSigma) {
            cand.push_back(i);
        } else if (c < bob.rounds() && bob.known_bit[c] >= 0 && !exposes(i)) {
            cand.push_back(i);
        }
    }
    for (std::size_t i : detail::pick(std::move(cand), s.tau, rng)) out.key[i] ^= 1;
    if (out.block_length <= 1) {
        for (int& m : out.message) m ^= 1;
    }
    return out;
}

/// What Eve gained during an intercept-resend run.
struct EveLedger {
    std::uint64_t rounds = 0;
    std::uint64_t attacked = 0;
    std::uint64_t learned = 0;       // rounds where her detector revealed the polarization
    std::uint64_t learned_key = 0;   // ...that also ended in a D1 detection

    /// Learned bits per round, the operational I_E.
    [[nodiscard]] double information() const noexcept { return rounds ? double(learned) / double(rounds) : 0.0; }
};

struct EveRun {
    Transcript transcript;
    EveLedger ledger;
};

/// Distribution stage with Eve intercepting a fraction w of rounds.
inline EveRun eve_intercept_resend(DistributionConfig cfg, const EveAttack& attack, std::uint64_t seed,
                                   unsigned threads = 1) {
    attack.validate();
    cfg.eve = attack;
    EveRun run;
    run.transcript = run_distribution(cfg, seed, threads);
    run.ledger.rounds = run.transcript.size();
    for (const auto& r : run.transcript.records) {
        run.ledger.attacked += r.eve_attacked;
        run.ledger.learned += r.eve_learned;
        run.ledger.learned_key += r.eve_learned && r.is_d1();
    }
    return run;
}

struct CoherenceReport {
    std::uint64_t eligible = 0;
    std::uint64_t violations = 0;
    std::vector<std::uint64_t> coordinates;

    [[nodiscard]] double rate() const noexcept { return eligible ? double(violations) / double(eligible) : 0.0; }
};

/// Rounds where both gates reflect Alice's polarization and nobody flipped
/// must end in D2; anything else witnesses a disturbance.
inline CoherenceReport coherence_check(const Transcript& t) {
    CoherenceReport rep;
    for (const auto& r : t.records) {
        const auto& in = r.input;
        if (in.bob_flip || in.charlie_flip) continue;
        if (!passes(in.bob_gate, in.alice_pol) || !passes(in.charlie_gate, in.alice_pol)) continue;
        ++rep.eligible;
        if (!r.outcome.is_d2()) {
            ++rep.violations;
            rep.coordinates.push_back(r.index);
        }
    }
    return rep;
}

struct RepudiationExperiment {
    DistributionConfig distribution;
    RepudiationStrategy strategy;
    double threshold = kDefaultVerifyThreshold;
};

struct TrialOutcome {
    bool bob_accepts = false;
    bool charlie_accepts = false;
};

/// One independent protocol run followed by Alice's cheat. Repudiation
/// succeeds when Bob accepts and Charlie rejects.
inline TrialOutcome repudiation_trial(const RepudiationExperiment& ex, std::uint64_t seed) {
    const Transcript t = run_distribution(ex.distribution, seed);
    const SiftedKey sigma = sift(t);
    const SignaturePackage honest = sign_plain({0}, sigma);
    Stream rng(seed, 0x72657075ULL);
    const SignaturePackage pkg = apply_repudiation(honest, ex.strategy, t, rng);
    return {verify(pkg, view_of(t, Party::Bob), ex.threshold).accepted,
            verify(pkg, view_of(t, Party::Charlie), ex.threshold).accepted};
}

/// Chernoff bound for the experiment's tau and injection rates.
inline double chernoff_bound_for(const RepudiationExperiment& ex) {
    return bounds::chernoff_repudiation(ex.strategy.tau, double(ex.distribution.rounds),
                                        ex.distribution.bob.inject_rate, ex.distribution.charlie.inject_rate)
        .bound;
}

struct RateEstimate {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    [[nodiscard]] double rate() const noexcept { return trials ? double(successes) / double(trials) : 0.0; }
};

inline RateEstimate repudiation_rate(const RepudiationExperiment& ex, std::uint64_t trials, std::uint64_t seed,
                                     unsigned threads = 1) {
    std::vector<std::uint8_t> hit(trials, 0);
    parallel_for(trials, threads, [&](std::uint64_t i) {
        const TrialOutcome o = repudiation_trial(ex, mix64(seed + i));
        hit[i] = o.bob_accepts && !o.charlie_accepts;
    });
    RateEstimate est{trials, 0};
    for (auto h : hit) est.successes += h;
    return est;
}

struct ForgeryExperiment {
    DistributionConfig distribution;
    ForgeryStrategy strategy;
    std::vector<int> message{0};
    bool use_code = false;
    std::size_t block_length = 0;  // 0: longest odd block the key allows
    double threshold = kDefaultVerifyThreshold;
};

struct ForgeryOutcome {
    bool charlie_accepts = false;
    bool message_changed = false;
    std::size_t block_length = 1;

    [[nodiscard]] bool success() const noexcept { return charlie_accepts && message_changed; }
};

/// One run: Alice signs honestly, Bob tampers and forwards, Charlie verifies
/// and reads the message.
inline ForgeryOutcome forgery_trial(const ForgeryExperiment& ex, std::uint64_t seed) {
    const Transcript t = run_distribution(ex.distribution, seed);
    const SiftedKey sigma = sift(t);
    const SignaturePackage honest =
        ex.use_code ? sign_repetition(ex.message, sigma, ex.block_length) : sign_plain(ex.message, sigma);
    Stream rng(seed, 0x666f7267ULL);
    const SignaturePackage tampered = forward(apply_forgery(honest, ex.strategy, view_of(t, Party::Bob), rng));
    const VerificationResult v = verify(tampered, view_of(t, Party::Charlie), ex.threshold);
    return {v.accepted, received_message(tampered) != ex.message, honest.block_length};
}

}  // namespace cqds::adversary
