#pragma once

// Three-party signature protocol over N interferometer rounds: distribution,
// sifting into the key string, signing, verification and forwarding.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cqds/optics.hpp"
#include "cqds/parallel.hpp"
#include "cqds/rng.hpp"

namespace cqds {

/// Where a D1 click came from. Exactly one tag per D1 record; None otherwise.
enum class Origin : std::uint8_t {
    None,
    Counterfactual,     // one party absorbed, the other arm's amplitude reached D1
    NonInterference,    // both reflected, exactly one flipped
    InjectedByBob,
    InjectedByCharlie,
    Eavesdropper,       // photon resent by Eve
};

constexpr std::string_view to_string(Origin o) noexcept {
    switch (o) {
        case Origin::None: return "none";
        case Origin::Counterfactual: return "counterfactual";
        case Origin::NonInterference: return "non_interference";
        case Origin::InjectedByBob: return "injected_bob";
        case Origin::InjectedByCharlie: return "injected_charlie";
        case Origin::Eavesdropper: return "eavesdropper";
    }
    return "none";
}

/// Who knows the two secret bits created by a D1 detection: the polarization
/// bit j and the gate-pair bit bit_bc.
struct Knowledge {
    bool alice_j = false;
    bool bob_j = false;
    bool charlie_j = false;
    bool alice_bc = false;
    bool bob_bc = false;
    bool charlie_bc = false;

    friend constexpr bool operator==(const Knowledge&, const Knowledge&) = default;
};

constexpr Knowledge knowledge_for(Origin o) noexcept {
    if (o == Origin::None) return {};
    Knowledge k;
    k.alice_j = true;
    k.bob_j = o == Origin::InjectedByBob;
    k.charlie_j = o == Origin::InjectedByCharlie;
    k.bob_bc = k.charlie_bc = true;
    return k;
}

struct RoundRecord {
    std::uint64_t index = 0;
    RoundInput input;
    DetectionOutcome outcome;
    Origin origin = Origin::None;
    Knowledge knowledge;
    bool eve_attacked = false;
    bool eve_learned = false;
    Gate eve_gate = Gate::ReflectH;

    [[nodiscard]] bool is_d1() const noexcept { return outcome.is_d1(); }
};

inline Origin classify(const RoundSample& s) noexcept {
    if (!s.outcome.is_d1()) return Origin::None;
    if (s.outcome.kind == OutcomeKind::InjectedD1) {
        return s.outcome.injector == Party::Bob ? Origin::InjectedByBob : Origin::InjectedByCharlie;
    }
    if (s.eve_attacked) return Origin::Eavesdropper;
    const Polarization p = s.input.alice_pol;
    if (passes(s.input.bob_gate, p) && passes(s.input.charlie_gate, p)) return Origin::NonInterference;
    return Origin::Counterfactual;
}

struct Transcript {
    std::vector<RoundRecord> records;
    BeamSplitter bs;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
};

struct DistributionConfig {
    std::uint64_t rounds = 0;
    SourceConfig alice;
    PartyConfig bob;
    PartyConfig charlie;
    BeamSplitter bs = BeamSplitter::balanced();
    EveAttack eve;
};

inline Transcript run_distribution(const DistributionConfig& cfg, std::uint64_t seed, unsigned threads = 1) {
    if (cfg.rounds == 0) throw std::invalid_argument("protocol needs at least one round");
    const RoundSampler sampler(cfg.bs, cfg.alice, cfg.bob, cfg.charlie, cfg.eve);
    Transcript t;
    t.bs = cfg.bs;
    t.seed = seed;
    t.records.resize(cfg.rounds);
    parallel_for(cfg.rounds, threads, [&](std::uint64_t i) {
        const RoundSample s = sampler.sample(seed, i);
        RoundRecord& rec = t.records[i];
        rec.index = i;
        rec.input = s.input;
        rec.outcome = s.outcome;
        rec.origin = classify(s);
        rec.knowledge = knowledge_for(rec.origin);
        rec.eve_attacked = s.eve_attacked;
        rec.eve_learned = s.eve_learned;
        rec.eve_gate = s.eve_gate;
    });
    return t;
}

/// Rounds on which Bob or Charlie applied sigma_x, as announced publicly.
struct FlipAnnouncement {
    std::vector<std::uint64_t> bob;
    std::vector<std::uint64_t> charlie;
};

inline FlipAnnouncement announce_flips(const Transcript& t) {
    FlipAnnouncement a;
    for (const auto& r : t.records) {
        if (r.input.bob_flip) a.bob.push_back(r.index);
        if (r.input.charlie_flip) a.charlie.push_back(r.index);
    }
    return a;
}

struct ChannelErrorEstimate {
    double e = 0.0;
    bool abort = false;
    double limit = 0.0;
    // P(D1 | gate pair) over unflipped rounds, indexed bob_gate * 2 + charlie_gate.
    std::array<double, 4> d1_rate{};
    std::array<std::uint64_t, 4> rounds{};
};

inline constexpr double kDefaultErrorLimit = 0.153;

/// QBER from D1 clicks on matched gate pairs, normalized by the mismatched
/// pairs: e = [P(D1|RH,RH) + P(D1|RV,RV)] / [4 * mean P(D1|mismatched)].
/// Announced flip rounds are excluded.
inline ChannelErrorEstimate estimate_channel_error(const Transcript& t, const FlipAnnouncement& flips,
                                                   double limit = kDefaultErrorLimit) {
    std::vector<std::uint8_t> flipped(t.size(), 0);
    for (auto i : flips.bob) {
        if (i < flipped.size()) flipped[i] = 1;
    }
    for (auto i : flips.charlie) {
        if (i < flipped.size()) flipped[i] = 1;
    }
    std::array<std::uint64_t, 4> n{};
    std::array<std::uint64_t, 4> d1{};
    for (const auto& r : t.records) {
        if (flipped[r.index]) continue;
        const unsigned g = static_cast<unsigned>(r.input.bob_gate) * 2 + static_cast<unsigned>(r.input.charlie_gate);
        ++n[g];
        if (r.is_d1()) ++d1[g];
    }
    ChannelErrorEstimate est;
    est.limit = limit;
    est.rounds = n;
    for (unsigned g = 0; g < 4; ++g) est.d1_rate[g] = n[g] ? double(d1[g]) / double(n[g]) : 0.0;
    const double matched = est.d1_rate[0] + est.d1_rate[3];
    const double mismatched = 0.5 * (est.d1_rate[1] + est.d1_rate[2]);
    est.e = mismatched > 0.0 ? matched / (4.0 * mismatched) : (matched > 0.0 ? 1.0 : 0.0);
    est.abort = est.e > limit;
    return est;
}

struct SiftedEntry {
    std::uint64_t round = 0;
    int bit = 0;  // Alice's prepared polarization: H = 0, V = 1
};

struct SiftedKey {
    std::vector<SiftedEntry> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
};

struct SiftStats {
    std::uint64_t counterfactual = 0;
    std::uint64_t non_interference = 0;
    std::uint64_t injected_bob = 0;
    std::uint64_t injected_charlie = 0;
    std::uint64_t eavesdropper = 0;

    /// Non-counterfactual contributions to the key length.
    [[nodiscard]] std::uint64_t delta() const noexcept { return non_interference + injected_bob + injected_charlie; }
    [[nodiscard]] std::uint64_t total() const noexcept {
        return counterfactual + non_interference + injected_bob + injected_charlie + eavesdropper;
    }
};

inline SiftStats sift_stats(const Transcript& t) {
    SiftStats s;
    for (const auto& r : t.records) {
        switch (r.origin) {
            case Origin::Counterfactual: ++s.counterfactual; break;
            case Origin::NonInterference: ++s.non_interference; break;
            case Origin::InjectedByBob: ++s.injected_bob; break;
            case Origin::InjectedByCharlie: ++s.injected_charlie; break;
            case Origin::Eavesdropper: ++s.eavesdropper; break;
            case Origin::None: break;
        }
    }
    return s;
}

/// All D1 detections, in round order, carrying Alice's prepared bit.
inline SiftedKey sift(const Transcript& t) {
    SiftedKey k;
    for (const auto& r : t.records) {
        if (r.is_d1()) k.entries.push_back({r.index, bit(r.input.alice_pol)});
    }
    return k;
}

struct CheckSplit {
    SiftedKey key;
    SiftedKey check;
};

/// Sacrifices a random fraction of the sifted string as check bits.
inline CheckSplit split_check_bits(const SiftedKey& sigma, double fraction, std::uint64_t seed) {
    require_probability(fraction, "check-bit fraction");
    const std::size_t n = sigma.size();
    const auto n_check = static_cast<std::size_t>(std::llround(fraction * double(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Stream rng(seed, 0x636865636bULL);
    for (std::size_t i = 0; i < n_check; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * double(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    std::vector<std::uint8_t> is_check(n, 0);
    for (std::size_t i = 0; i < n_check; ++i) is_check[idx[i]] = 1;
    CheckSplit out;
    for (std::size_t i = 0; i < n; ++i) (is_check[i] ? out.check : out.key).entries.push_back(sigma.entries[i]);
    return out;
}

/// Message plus the signing part of Alice's private key. With block_length 1
/// the message travels in `message` and the key is the whole sifted string;
/// with block_length > 1 every message bit is carried as a repetition
/// codeword: block_length coordinates whose key bit equals that message bit.
struct SignaturePackage {
    std::vector<int> message;
    std::vector<int> key;
    std::vector<std::uint64_t> coordinates;
    std::size_t block_length = 1;
    std::size_t fabricated = 0;  // coordinates announced as D1 that were not

    void validate() const {
        if (key.size() != coordinates.size()) throw std::invalid_argument("key and coordinates differ in length");
        for (std::size_t i = 1; i < coordinates.size(); ++i) {
            if (coordinates[i] <= coordinates[i - 1]) throw std::invalid_argument("coordinates must increase");
        }
    }
};

inline std::vector<int> repetition_encode(const std::vector<int>& bits, std::size_t length) {
    if (length == 0 || length % 2 == 0) throw std::invalid_argument("repetition length must be odd");
    std::vector<int> out;
    out.reserve(bits.size() * length);
    for (int b : bits) out.insert(out.end(), length, b & 1);
    return out;
}

/// Majority decoding; corrects up to floor(length/2) flips per block.
inline std::vector<int> repetition_decode(const std::vector<int>& code, std::size_t length) {
    if (length == 0 || length % 2 == 0) throw std::invalid_argument("repetition length must be odd");
    if (code.size() % length != 0) throw std::invalid_argument("codeword length is not a multiple of block length");
    std::vector<int> out;
    for (std::size_t i = 0; i < code.size(); i += length) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < length; ++j) ones += static_cast<std::size_t>(code[i + j] & 1);
        out.push_back(ones * 2 > length ? 1 : 0);
    }
    return out;
}

/// Signs `message` with the whole key and no code.
inline SignaturePackage sign_plain(const std::vector<int>& message, const SiftedKey& key) {
    SignaturePackage pkg;
    pkg.message = message;
    for (const auto& e : key.entries) {
        pkg.coordinates.push_back(e.round);
        pkg.key.push_back(e.bit);
    }
    return pkg;
}

/// Signs with a repetition code: the key is split into one segment per
/// message bit, and each bit is announced as `length` coordinates of its
/// segment whose key bit equals it. length 0 takes every matching coordinate
/// (dropping one if needed to keep the length odd), the same for all blocks.
inline SignaturePackage sign_repetition(const std::vector<int>& message, const SiftedKey& key, std::size_t length) {
    if (message.empty()) throw std::invalid_argument("empty message");
    if (length != 0 && length % 2 == 0) throw std::invalid_argument("repetition length must be odd");
    const std::size_t segments = message.size();
    const std::size_t seg_len = key.size() / segments;
    std::vector<std::vector<std::size_t>> picks(segments);
    std::size_t usable = SIZE_MAX;
    for (std::size_t s = 0; s < segments; ++s) {
        for (std::size_t i = s * seg_len; i < (s + 1) * seg_len; ++i) {
            if (key.entries[i].bit == (message[s] & 1)) picks[s].push_back(i);
        }
        usable = std::min(usable, picks[s].size());
    }
    if (length == 0) length = usable % 2 == 1 ? usable : usable - 1;
    if (length == 0 || usable == 0 || usable < length) {
        throw std::invalid_argument("sifted key too short for the requested repetition length");
    }
    std::vector<std::pair<std::uint64_t, int>> chosen;
    for (std::size_t s = 0; s < segments; ++s) {
        for (std::size_t j = 0; j < length; ++j) {
            const auto& e = key.entries[picks[s][j]];
            chosen.emplace_back(e.round, e.bit);
        }
    }
    // Segments are contiguous in round order, so `chosen` is already sorted.
    SignaturePackage pkg;
    pkg.message = message;
    pkg.block_length = length;
    for (auto& [round, b] : chosen) {
        pkg.coordinates.push_back(round);
        pkg.key.push_back(b);
    }
    return pkg;
}

/// The message a receiver takes from a package: the plain field, or the
/// majority decode of each repetition block.
inline std::vector<int> received_message(const SignaturePackage& pkg) {
    if (pkg.block_length <= 1) return pkg.message;
    return repetition_decode(pkg.key, pkg.block_length);
}

/// What one verifier knows per round: injected bits it can check, plus the
/// jointly announced gate pairs and flips.
struct VerifierView {
    Party party = Party::Bob;
    std::vector<std::int8_t> known_bit;  // -1 when unknown
    std::vector<std::uint8_t> gates;     // bob_gate | charlie_gate << 1 | any_flip << 2

    [[nodiscard]] std::size_t rounds() const noexcept { return known_bit.size(); }
};

inline VerifierView view_of(const Transcript& t, Party party) {
    VerifierView v;
    v.party = party;
    v.known_bit.assign(t.size(), -1);
    v.gates.resize(t.size());
    for (const auto& r : t.records) {
        const bool knows = party == Party::Bob ? r.knowledge.bob_j : r.knowledge.charlie_j;
        // The injected photon has the absorbed photon's polarization.
        if (knows) v.known_bit[r.index] = static_cast<std::int8_t>(bit(r.outcome.pol));
        v.gates[r.index] = static_cast<std::uint8_t>(static_cast<unsigned>(r.input.bob_gate) |
                                                     (static_cast<unsigned>(r.input.charlie_gate) << 1) |
                                                     (unsigned(r.input.bob_flip || r.input.charlie_flip) << 2));
    }
    return v;
}

struct VerificationResult {
    std::size_t checked = 0;
    std::size_t mismatches = 0;
    std::size_t impossible = 0;  // claimed D1 on an unflipped (R_j, R_j) round, counted in mismatches
    std::size_t unknown = 0;     // coordinates outside the transcript
    bool accepted = false;
    double threshold = 0.0;

    [[nodiscard]] double mismatch_rate() const noexcept {
        return checked ? double(mismatches) / double(checked) : 0.0;
    }
};

inline constexpr double kDefaultVerifyThreshold = 0.01;

/// Counts mismatches on coordinates where the verifier knows the bit, and
/// flags D1 claims on unflipped rounds where both gates reflected the claimed
/// polarization (such a round always ends in D2). Accepts iff at least one
/// coordinate was checked and mismatches / checked <= threshold.
inline VerificationResult verify(const SignaturePackage& pkg, const VerifierView& view,
                                 double threshold = kDefaultVerifyThreshold) {
    if (pkg.key.size() != pkg.coordinates.size()) throw std::invalid_argument("malformed package");
    VerificationResult res;
    res.threshold = threshold;
    for (std::size_t i = 0; i < pkg.coordinates.size(); ++i) {
        const std::uint64_t c = pkg.coordinates[i];
        if (c >= view.rounds()) {
            ++res.unknown;
            continue;
        }
        const int claimed = pkg.key[i] & 1;
        const std::uint8_t g = view.gates[c];
        const bool matched_claim = ((g >> 2) & 1U) == 0 && (g & 1U) == unsigned(claimed) && ((g >> 1) & 1U) == unsigned(claimed);
        if (matched_claim) {
            ++res.checked;
            ++res.mismatches;
            ++res.impossible;
            continue;
        }
        if (view.known_bit[c] < 0) continue;
        ++res.checked;
        if (view.known_bit[c] != claimed) ++res.mismatches;
    }
    res.accepted = res.checked > 0 && double(res.mismatches) <= threshold * double(res.checked);
    return res;
}

/// Bob's honest forwarding step: the package reaches Charlie unchanged.
inline SignaturePackage forward(const SignaturePackage& pkg) { return pkg; }

/// Writes the transcript as CSV (one row per round).
inline void write_transcript_csv(std::ostream& os, const Transcript& t) {
    os << "round,alice_pol,bob_gate,charlie_gate,bob_flip,charlie_flip,bob_inject,charlie_inject,"
          "eve_attacked,eve_learned,outcome,origin,alice_j,bob_j,charlie_j,alice_bc,bob_bc,charlie_bc\n";
    for (const auto& r : t.records) {
        const auto& in = r.input;
        const auto& k = r.knowledge;
        os << r.index << ',' << to_char(in.alice_pol) << ',' << to_string(in.bob_gate) << ','
           << to_string(in.charlie_gate) << ',' << in.bob_flip << ',' << in.charlie_flip << ',' << in.bob_inject
           << ',' << in.charlie_inject << ',' << r.eve_attacked << ',' << r.eve_learned << ','
           << to_string(r.outcome) << ',' << to_string(r.origin) << ',' << k.alice_j << ',' << k.bob_j << ','
           << k.charlie_j << ',' << k.alice_bc << ',' << k.bob_bc << ',' << k.charlie_bc << '\n';
    }
}

}  // namespace cqds
