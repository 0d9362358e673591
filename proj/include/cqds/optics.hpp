#pragma once

// Single-photon Michelson round: Alice's photon meets an R:T beam splitter,
// arm b ends at Bob's gate and arm c at Charlie's. Each gate reflects one
// polarization and absorbs the other; a reflected amplitude may be flipped
// (sigma_x) before it recombines at the splitter.
//
// Phase convention: reflection at the splitter multiplies by i, and the
// round trip through arm c carries an extra phase of pi. With that choice the
// D1 port is dark when both arms reflect the same polarization, and D2 is
// the port the photon returns to.

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cqds/rng.hpp"

namespace cqds {

enum class Polarization : std::uint8_t { H = 0, V = 1 };

constexpr Polarization flip(Polarization p) noexcept {
    return p == Polarization::H ? Polarization::V : Polarization::H;
}
constexpr int bit(Polarization p) noexcept { return static_cast<int>(p); }
constexpr Polarization polarization_from_bit(int b) noexcept {
    return b ? Polarization::V : Polarization::H;
}
constexpr char to_char(Polarization p) noexcept { return p == Polarization::H ? 'H' : 'V'; }

enum class Gate : std::uint8_t { ReflectH = 0, ReflectV = 1 };

constexpr bool passes(Gate g, Polarization p) noexcept {
    return static_cast<int>(g) == static_cast<int>(p);
}
constexpr Gate reflecting(Polarization p) noexcept { return static_cast<Gate>(bit(p)); }
constexpr std::string_view to_string(Gate g) noexcept { return g == Gate::ReflectH ? "RH" : "RV"; }

enum class Party : std::uint8_t { Bob = 0, Charlie = 1 };

constexpr std::string_view to_string(Party p) noexcept { return p == Party::Bob ? "Bob" : "Charlie"; }

inline void require_probability(double p, std::string_view what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(what) + " must be a probability in [0,1], got " +
                                    std::to_string(p));
    }
}

struct BeamSplitter {
    double reflectivity = 0.5;
    double transmissivity = 0.5;

    static BeamSplitter with_reflectivity(double r) {
        BeamSplitter bs{r, 1.0 - r};
        bs.validate();
        return bs;
    }
    static BeamSplitter balanced() { return {0.5, 0.5}; }

    void validate() const {
        require_probability(reflectivity, "reflectivity");
        require_probability(transmissivity, "transmissivity");
        if (std::abs(reflectivity + transmissivity - 1.0) > 1e-12) {
            throw std::invalid_argument("beam splitter requires R + T = 1");
        }
    }
};

struct RoundInput {
    Polarization alice_pol = Polarization::H;
    Gate bob_gate = Gate::ReflectH;
    Gate charlie_gate = Gate::ReflectH;
    bool bob_flip = false;
    bool charlie_flip = false;
    // A party injects only if its gate absorbed the photon.
    bool bob_inject = false;
    bool charlie_inject = false;

    /// Dense 7-bit code, used to index precomputed tables.
    [[nodiscard]] constexpr unsigned code() const noexcept {
        return static_cast<unsigned>(bit(alice_pol)) | (static_cast<unsigned>(bob_gate) << 1) |
               (static_cast<unsigned>(charlie_gate) << 2) | (unsigned(bob_flip) << 3) |
               (unsigned(charlie_flip) << 4) | (unsigned(bob_inject) << 5) |
               (unsigned(charlie_inject) << 6);
    }
    static constexpr RoundInput from_code(unsigned c) noexcept {
        RoundInput in;
        in.alice_pol = polarization_from_bit(c & 1U);
        in.bob_gate = static_cast<Gate>((c >> 1) & 1U);
        in.charlie_gate = static_cast<Gate>((c >> 2) & 1U);
        in.bob_flip = (c >> 3) & 1U;
        in.charlie_flip = (c >> 4) & 1U;
        in.bob_inject = (c >> 5) & 1U;
        in.charlie_inject = (c >> 6) & 1U;
        return in;
    }
    static constexpr unsigned kCodes = 128;

    friend constexpr bool operator==(const RoundInput&, const RoundInput&) = default;
};

enum class OutcomeKind : std::uint8_t { D1, D2, DB, DC, InjectedD1, InjectedD2 };

/// One detector click. `pol` is the polarization registered at the detector;
/// `injector` is meaningful only for the injected kinds.
struct DetectionOutcome {
    OutcomeKind kind = OutcomeKind::D2;
    Polarization pol = Polarization::H;
    Party injector = Party::Bob;

    [[nodiscard]] constexpr bool is_d1() const noexcept {
        return kind == OutcomeKind::D1 || kind == OutcomeKind::InjectedD1;
    }
    [[nodiscard]] constexpr bool is_d2() const noexcept {
        return kind == OutcomeKind::D2 || kind == OutcomeKind::InjectedD2;
    }

    // Index layout: D1(H,V) D2(H,V) DB(H,V) DC(H,V) InjD1(Bob H,V, Charlie H,V) InjD2(...)
    [[nodiscard]] constexpr unsigned index() const noexcept {
        const unsigned p = static_cast<unsigned>(bit(pol));
        switch (kind) {
            case OutcomeKind::D1: return p;
            case OutcomeKind::D2: return 2 + p;
            case OutcomeKind::DB: return 4 + p;
            case OutcomeKind::DC: return 6 + p;
            case OutcomeKind::InjectedD1: return 8 + 2 * static_cast<unsigned>(injector) + p;
            case OutcomeKind::InjectedD2: return 12 + 2 * static_cast<unsigned>(injector) + p;
        }
        return 0;
    }
    static constexpr DetectionOutcome from_index(unsigned i) noexcept {
        DetectionOutcome o;
        o.pol = polarization_from_bit(i & 1U);
        if (i < 8) {
            o.kind = static_cast<OutcomeKind>(i / 2);
        } else {
            o.kind = i < 12 ? OutcomeKind::InjectedD1 : OutcomeKind::InjectedD2;
            o.injector = static_cast<Party>((i >> 1) & 1U);
        }
        return o;
    }
    static constexpr unsigned kCount = 16;

    friend constexpr bool operator==(const DetectionOutcome& a, const DetectionOutcome& b) noexcept {
        return a.index() == b.index();
    }
};

inline std::string to_string(const DetectionOutcome& o) {
    std::string s;
    switch (o.kind) {
        case OutcomeKind::D1: s = "D1"; break;
        case OutcomeKind::D2: s = "D2"; break;
        case OutcomeKind::DB: s = "DB"; break;
        case OutcomeKind::DC: s = "DC"; break;
        case OutcomeKind::InjectedD1: s = std::string("InjD1") + (o.injector == Party::Bob ? "B" : "C"); break;
        case OutcomeKind::InjectedD2: s = std::string("InjD2") + (o.injector == Party::Bob ? "B" : "C"); break;
    }
    s += '(';
    s += to_char(o.pol);
    s += ')';
    return s;
}

/// Exact outcome distribution of one round.
class RoundDistribution {
public:
    [[nodiscard]] double operator[](const DetectionOutcome& o) const noexcept { return p_[o.index()]; }
    [[nodiscard]] double at_index(unsigned i) const noexcept { return p_[i]; }
    void add(const DetectionOutcome& o, double p) noexcept { p_[o.index()] += p; }

    [[nodiscard]] double total() const noexcept {
        double s = 0.0;
        for (double v : p_) s += v;
        return s;
    }
    [[nodiscard]] double d1() const noexcept { return p_[0] + p_[1] + p_[8] + p_[9] + p_[10] + p_[11]; }
    [[nodiscard]] double d2() const noexcept { return p_[2] + p_[3] + p_[12] + p_[13] + p_[14] + p_[15]; }
    [[nodiscard]] double db() const noexcept { return p_[4] + p_[5]; }
    [[nodiscard]] double dc() const noexcept { return p_[6] + p_[7]; }

    /// Draws an outcome given u uniform in [0,1).
    [[nodiscard]] DetectionOutcome draw(double u) const noexcept {
        double acc = 0.0;
        unsigned last = 0;
        for (unsigned i = 0; i < DetectionOutcome::kCount; ++i) {
            if (p_[i] <= 0.0) continue;
            acc += p_[i];
            last = i;
            if (u < acc) return DetectionOutcome::from_index(i);
        }
        return DetectionOutcome::from_index(last);
    }

private:
    std::array<double, DetectionOutcome::kCount> p_{};
};

namespace detail {

using cplx = std::complex<double>;

// Amplitudes returning to the splitter, indexed [detector D1=0/D2=1][polarization].
struct ReturnField {
    std::array<std::array<cplx, 2>, 2> amp{};

    // Photon leaving arm b with amplitude a and polarization p.
    void from_arm_b(cplx a, Polarization p, const BeamSplitter& bs) {
        amp[0][bit(p)] += a * std::sqrt(bs.transmissivity);
        amp[1][bit(p)] += a * cplx(0.0, std::sqrt(bs.reflectivity));
    }
    // Arm c carries the extra pi phase of the convention above.
    void from_arm_c(cplx a, Polarization p, const BeamSplitter& bs) {
        amp[0][bit(p)] += -a * cplx(0.0, std::sqrt(bs.reflectivity));
        amp[1][bit(p)] += -a * std::sqrt(bs.transmissivity);
    }
    void deposit(RoundDistribution& out, double weight) const {
        for (int det = 0; det < 2; ++det) {
            for (int p = 0; p < 2; ++p) {
                const double prob = weight * std::norm(amp[det][p]);
                if (prob == 0.0) continue;
                out.add({det == 0 ? OutcomeKind::D1 : OutcomeKind::D2, polarization_from_bit(p)}, prob);
            }
        }
    }
};

// Absorption at `party` with probability `weight`, followed by an optional
// injection of an identically polarized photon that traverses the splitter once.
inline void absorb(RoundDistribution& out, Party party, Polarization p, double weight, double inject_prob,
                   const BeamSplitter& bs) {
    const double kept = weight * (1.0 - inject_prob);
    if (kept > 0.0) out.add({party == Party::Bob ? OutcomeKind::DB : OutcomeKind::DC, p}, kept);
    const double injected = weight * inject_prob;
    if (injected <= 0.0) return;
    // From arm b: D1 with T, D2 with R. Mirror for arm c.
    const double to_d1 = party == Party::Bob ? bs.transmissivity : bs.reflectivity;
    out.add({OutcomeKind::InjectedD1, p, party}, injected * to_d1);
    out.add({OutcomeKind::InjectedD2, p, party}, injected * (1.0 - to_d1));
}

}  // namespace detail

/// Exact outcome distribution by amplitude calculus. `inject_rate` is the
/// probability that a party whose inject flag is set actually re-emits after
/// absorbing the photon.
inline RoundDistribution evaluate_round(const RoundInput& in, const BeamSplitter& bs, double inject_rate) {
    bs.validate();
    require_probability(inject_rate, "inject rate");
    using detail::cplx;
    RoundDistribution out;
    const Polarization p = in.alice_pol;
    const cplx arm_b = cplx(0.0, std::sqrt(bs.reflectivity));
    const cplx arm_c = std::sqrt(bs.transmissivity);

    detail::ReturnField field;
    if (passes(in.bob_gate, p)) {
        field.from_arm_b(arm_b, in.bob_flip ? flip(p) : p, bs);
    } else {
        detail::absorb(out, Party::Bob, p, std::norm(arm_b), in.bob_inject ? inject_rate : 0.0, bs);
    }
    if (passes(in.charlie_gate, p)) {
        field.from_arm_c(arm_c, in.charlie_flip ? flip(p) : p, bs);
    } else {
        detail::absorb(out, Party::Charlie, p, std::norm(arm_c), in.charlie_inject ? inject_rate : 0.0, bs);
    }
    field.deposit(out, 1.0);
    return out;
}

/// Probabilities of the four gate pairs, indexed by bob_gate * 2 + charlie_gate.
using GatePairDistribution = std::array<double, 4>;

constexpr GatePairDistribution uniform_gates() noexcept { return {0.25, 0.25, 0.25, 0.25}; }

inline void validate(const GatePairDistribution& g) {
    double s = 0.0;
    for (double v : g) {
        require_probability(v, "gate pair probability");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("gate pair probabilities must sum to 1");
}

struct MarginalStatistics {
    double d1 = 0.0;  // includes injected photons reaching D1
    double d2 = 0.0;
    double db = 0.0;  // absorptions not followed by an injection
    double dc = 0.0;
};

/// Averages evaluate_round over a uniform Alice polarization, the given gate
/// distribution, independent flips with probability f per party, and
/// injection with probability r.
inline MarginalStatistics marginal_statistics(const BeamSplitter& bs, const GatePairDistribution& gates,
                                              double r, double f) {
    bs.validate();
    validate(gates);
    require_probability(r, "inject rate");
    require_probability(f, "flip fraction");
    MarginalStatistics m;
    for (unsigned code = 0; code < 32; ++code) {
        RoundInput in = RoundInput::from_code(code);
        in.bob_inject = in.charlie_inject = true;
        const double w = 0.5 * gates[static_cast<unsigned>(in.bob_gate) * 2 + static_cast<unsigned>(in.charlie_gate)] *
                         (in.bob_flip ? f : 1.0 - f) * (in.charlie_flip ? f : 1.0 - f);
        if (w == 0.0) continue;
        const RoundDistribution d = evaluate_round(in, bs, r);
        m.d1 += w * d.d1();
        m.d2 += w * d.d2();
        m.db += w * d.db();
        m.dc += w * d.dc();
    }
    return m;
}

/// Per-party randomization of one round.
struct PartyConfig {
    double reflect_h = 0.5;    // probability of choosing ReflectH
    double inject_rate = 0.0;  // r_b or r_c
    double flip_rate = 0.0;    // f

    void validate() const {
        require_probability(reflect_h, "gate probability");
        require_probability(inject_rate, "inject rate");
        require_probability(flip_rate, "flip fraction");
    }
    /// The (r, f) << 1 regime; callers may warn when this is false.
    [[nodiscard]] bool in_small_fraction_regime() const noexcept { return inject_rate <= 0.1 && flip_rate <= 0.1; }
};

struct SourceConfig {
    double prob_h = 0.5;
};

/// How Eve's intercept-resend is realized on attacked rounds.
enum class EveChannel : std::uint8_t {
    // Photon-level: Eve applies one gate on both arms; on a click she resends an
    // identical photon toward the party whose arm she intercepted.
    Photonic,
    // Error-parameter model: attacked rounds raise the D1 rate of matched gate
    // pairs by (1+r)/4 each and of mismatched pairs by (1+r)/2 each, which is
    // the p1 = p2 = w(1+r)/4, p3 = w(1+r)/2 parametrization.
    ErrorRates,
};

struct EveAttack {
    double rate = 0.0;  // w
    EveChannel channel = EveChannel::ErrorRates;

    void validate() const { require_probability(rate, "Eve attack rate"); }
};

struct RoundSample {
    RoundInput input;
    DetectionOutcome outcome;
    bool eve_attacked = false;
    bool eve_learned = false;     // Eve's detector clicked, revealing the polarization
    bool eve_resent_d1 = false;   // D1 click produced by Eve's resent photon
    Gate eve_gate = Gate::ReflectH;
};

/// Draws rounds from precomputed outcome tables. Each round uses its own
/// stream derived from (seed, round index), so results do not depend on
/// evaluation order.
class RoundSampler {
public:
    RoundSampler(const BeamSplitter& bs, const SourceConfig& src, const PartyConfig& bob,
                 const PartyConfig& charlie, const EveAttack& eve = {})
        : bs_(bs), src_(src), bob_(bob), charlie_(charlie), eve_(eve) {
        bs_.validate();
        require_probability(src_.prob_h, "source H probability");
        bob_.validate();
        charlie_.validate();
        eve_.validate();
        for (unsigned c = 0; c < RoundInput::kCodes; ++c) {
            table_[c] = evaluate_round(RoundInput::from_code(c), bs_, 1.0);
        }
        const double r = 0.5 * (bob_.inject_rate + charlie_.inject_rate);
        boost_matched_ = (1.0 + r) / 4.0;
        boost_mismatched_ = (1.0 + r) / 2.0;
    }

    [[nodiscard]] const BeamSplitter& beam_splitter() const noexcept { return bs_; }
    [[nodiscard]] const EveAttack& eve() const noexcept { return eve_; }

    [[nodiscard]] RoundInput draw_input(Stream& rng) const noexcept {
        RoundInput in;
        in.alice_pol = rng.bernoulli(src_.prob_h) ? Polarization::H : Polarization::V;
        in.bob_gate = rng.bernoulli(bob_.reflect_h) ? Gate::ReflectH : Gate::ReflectV;
        in.charlie_gate = rng.bernoulli(charlie_.reflect_h) ? Gate::ReflectH : Gate::ReflectV;
        in.bob_flip = rng.bernoulli(bob_.flip_rate);
        in.charlie_flip = rng.bernoulli(charlie_.flip_rate);
        in.bob_inject = rng.bernoulli(bob_.inject_rate);
        in.charlie_inject = rng.bernoulli(charlie_.inject_rate);
        return in;
    }

    [[nodiscard]] RoundSample sample(std::uint64_t seed, std::uint64_t round) const noexcept {
        Stream rng(seed, round);
        RoundSample s;
        s.input = draw_input(rng);
        if (eve_.rate > 0.0 && rng.bernoulli(eve_.rate)) {
            s.eve_attacked = true;
            s.eve_gate = rng.bernoulli(0.5) ? Gate::ReflectH : Gate::ReflectV;
            s.eve_learned = !passes(s.eve_gate, s.input.alice_pol);
            if (eve_.channel == EveChannel::Photonic) {
                s.outcome = sample_photonic(s, rng);
            } else {
                s.outcome = sample_error_rates(s, rng);
            }
            return s;
        }
        s.outcome = table_[s.input.code()].draw(rng.uniform());
        return s;
    }

    [[nodiscard]] const RoundDistribution& honest_distribution(const RoundInput& in) const noexcept {
        return table_[in.code()];
    }

private:
    DetectionOutcome sample_photonic(RoundSample& s, Stream& rng) const noexcept {
        const RoundInput& in = s.input;
        const Polarization p = in.alice_pol;
        if (!s.eve_learned) {
            // Eve reflects both arms coherently; the photon never reaches Bob or Charlie.
            RoundInput mirror = in;
            mirror.bob_gate = mirror.charlie_gate = s.eve_gate;
            mirror.bob_flip = mirror.charlie_flip = false;
            return table_[mirror.code()].draw(rng.uniform());
        }
        const Party arm = rng.bernoulli(bs_.reflectivity) ? Party::Bob : Party::Charlie;
        const bool bob = arm == Party::Bob;
        const Gate gate = bob ? in.bob_gate : in.charlie_gate;
        const bool flipped = bob ? in.bob_flip : in.charlie_flip;
        const bool will_inject = bob ? in.bob_inject : in.charlie_inject;
        const double to_d1 = bob ? bs_.transmissivity : bs_.reflectivity;
        if (passes(gate, p)) {
            const Polarization out = flipped ? flip(p) : p;
            return {rng.bernoulli(to_d1) ? OutcomeKind::D1 : OutcomeKind::D2, out};
        }
        if (will_inject) {
            return {rng.bernoulli(to_d1) ? OutcomeKind::InjectedD1 : OutcomeKind::InjectedD2, p, arm};
        }
        return {bob ? OutcomeKind::DB : OutcomeKind::DC, p};
    }

    DetectionOutcome sample_error_rates(RoundSample& s, Stream& rng) const noexcept {
        const RoundInput& in = s.input;
        const RoundDistribution& honest = table_[in.code()];
        const double boost = in.bob_gate == in.charlie_gate ? boost_matched_ : boost_mismatched_;
        const double headroom = 1.0 - honest.d1();
        const double convert = headroom > 0.0 ? std::min(1.0, boost / headroom) : 0.0;
        if (rng.bernoulli(convert)) {
            s.eve_resent_d1 = true;
            return {OutcomeKind::D1, in.alice_pol};
        }
        return honest.draw(rng.uniform());
    }

    BeamSplitter bs_;
    SourceConfig src_;
    PartyConfig bob_;
    PartyConfig charlie_;
    EveAttack eve_;
    std::array<RoundDistribution, RoundInput::kCodes> table_{};
    double boost_matched_ = 0.0;
    double boost_mismatched_ = 0.0;
};

}  // namespace cqds
