#pragma once

// One-way twin-field variant. Bob and Charlie send phase-modulated weak
// coherent pulses through Alice's polarization filters to her splitter.
//
// The channel is enumerated as a finite set of pulse classes (window, which
// pulses pass the filters, intensities, relative phase). Each class is
// tallied per photon number so estimators can be checked against the true
// single-photon quantities. Counts are doubles so the same containers hold
// expectations (Mode::Expected) and sampled integers (Mode::Tagged).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqds/bounds.hpp"
#include "cqds/parallel.hpp"
#include "cqds/rng.hpp"

namespace cqds::twinfield {

struct ChannelParams {
    double pulses = 1e10;
    double distance_km = 0.0;
    double attenuation_db_per_km = 0.3;
    double detector_efficiency = 0.5;
    double dark_count = 1e-7;
    double misalignment = 0.03;
    double failure_prob = 1e-12;
    double ec_efficiency = 1.1;
    double phase_zero_prob = 0.9;
    double decoy_fraction = 0.2;
    double no_send_fraction = 0.0;

    void validate() const {
        if (!(pulses >= 0.0)) throw std::invalid_argument("pulse count must be non-negative");
        if (!(distance_km >= 0.0)) throw std::invalid_argument("distance must be non-negative");
        if (!(attenuation_db_per_km >= 0.0)) throw std::invalid_argument("attenuation must be non-negative");
        require_probability(detector_efficiency, "detector efficiency");
        require_probability(dark_count, "dark count");
        require_probability(misalignment, "misalignment");
        require_probability(failure_prob, "failure probability");
        if (!(failure_prob > 0.0)) throw std::invalid_argument("failure probability must be positive");
        if (!(ec_efficiency >= 1.0)) throw std::invalid_argument("error-correction efficiency must be >= 1");
        require_probability(phase_zero_prob, "p0");
        require_probability(decoy_fraction, "decoy fraction");
        require_probability(no_send_fraction, "no-send fraction");
    }

    /// Non-fatal notes about the parameter choice.
    [[nodiscard]] std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (phase_zero_prob <= 0.5 + 1e-12) w.emplace_back("p0 should dominate 1 - p0");
        return w;
    }

    /// Per-arm transmittance including detector efficiency; each arm spans half the distance.
    [[nodiscard]] double transmittance() const {
        return detector_efficiency * std::pow(10.0, -attenuation_db_per_km * distance_km / 20.0);
    }
};

struct Intensities {
    double signal = 0.15;
    double decoy = 0.1;

    void validate() const {
        if (!(decoy > 0.0 && signal > decoy)) throw std::invalid_argument("intensities must satisfy signal > decoy > 0");
    }
    [[nodiscard]] double operator[](int i) const { return i == 0 ? signal : decoy; }
};

inline constexpr int kPhotonBins = 16;  // last bin collects k >= 15
using PhotonArray = std::array<double, kPhotonBins>;

enum class Window : std::uint8_t { Signal, Decoy };

struct PulseClass {
    Window window = Window::Signal;
    double prob = 0.0;            // per-pulse probability
    double passing = 0.0;         // total intensity reaching the splitter
    double cos_phase = 1.0;       // cosine of the relative phase of two passing pulses
    double bob = 0.0;             // passing intensity per arm (0: blocked or not sent)
    double charlie = 0.0;
    double blocked = 0.0;         // total intensity absorbed by the filters
    int one_sided = -1;           // intensity index when exactly one pulse passes
    int matched = -1;             // intensity index when both pass equal and in phase
    bool both_pass = false;
    bool none_pass = false;

    /// Probability a photon leaving the splitter heads to D1, misalignment included.
    [[nodiscard]] double d1_fraction(double misalignment) const {
        double q = 0.5;
        if (passing > 0.0) q = (passing - 2.0 * std::sqrt(bob * charlie) * cos_phase) / (2.0 * passing);
        q = std::clamp(q, 0.0, 1.0);
        return q * (1.0 - misalignment) + (1.0 - q) * misalignment;
    }
};

namespace detail {

struct PartyState {
    double prob;
    double passing;
    double blocked;
    int intensity;  // -1: nothing sent
    int phase;
};

inline std::vector<PartyState> party_states(Window w, const ChannelParams& p, const Intensities& mu) {
    std::vector<PartyState> out;
    if (w == Window::Signal) {
        // pi-phase pulses are announced and their rounds discarded, so only phase 0 survives.
        const double sent = (1.0 - p.no_send_fraction) * 0.5 * p.phase_zero_prob;
        if (p.no_send_fraction > 0.0) out.push_back({p.no_send_fraction, 0.0, 0.0, -1, 0});
        out.push_back({sent, mu.signal, 0.0, 0, 0});
        out.push_back({sent, 0.0, mu.signal, 0, 0});
        return out;
    }
    for (int i = 0; i < 2; ++i) {
        for (int phase = 0; phase < 2; ++phase) {
            out.push_back({0.125, mu[i], 0.0, i, phase});
            out.push_back({0.125, 0.0, mu[i], i, phase});
        }
    }
    return out;
}

inline double poisson(double x, int k) {
    if (x == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-x + k * std::log(x) - std::lgamma(k + 1.0));
}

inline PhotonArray photon_distribution(double x) {
    PhotonArray p{};
    double sum = 0.0;
    for (int k = 0; k + 1 < kPhotonBins; ++k) sum += (p[k] = poisson(x, k));
    p[kPhotonBins - 1] = std::max(0.0, 1.0 - sum);
    return p;
}

template <class Urbg>
double binomial(Urbg& g, double n, double p) {
    if (n <= 0.0 || p <= 0.0) return 0.0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::int64_t> d(static_cast<std::int64_t>(std::llround(n)), p);
    return static_cast<double>(d(g));
}

/// Splits n items over `probs` (which may sum to less than one; the rest is dropped).
template <class Urbg>
std::vector<double> multinomial(Urbg& g, double n, const std::vector<double>& probs) {
    std::vector<double> out(probs.size(), 0.0);
    double left = n;
    double mass = 1.0;
    for (std::size_t i = 0; i < probs.size() && left > 0.0; ++i) {
        const double p = mass > 0.0 ? std::min(1.0, probs[i] / mass) : 0.0;
        out[i] = binomial(g, left, p);
        left -= out[i];
        mass -= probs[i];
    }
    return out;
}

}  // namespace detail

/// Every pulse class with non-zero probability, signal window first.
inline std::vector<PulseClass> enumerate_classes(const ChannelParams& p, const Intensities& mu) {
    p.validate();
    mu.validate();
    std::vector<PulseClass> out;
    for (Window w : {Window::Signal, Window::Decoy}) {
        const double wp = w == Window::Signal ? 1.0 - p.decoy_fraction : p.decoy_fraction;
        if (wp <= 0.0) continue;
        const auto states = detail::party_states(w, p, mu);
        for (const auto& b : states) {
            for (const auto& c : states) {
                PulseClass k;
                k.window = w;
                k.prob = wp * b.prob * c.prob;
                k.bob = b.passing;
                k.charlie = c.passing;
                k.passing = b.passing + c.passing;
                k.blocked = b.blocked + c.blocked;
                k.cos_phase = b.phase == c.phase ? 1.0 : -1.0;
                k.both_pass = b.passing > 0.0 && c.passing > 0.0;
                k.none_pass = b.passing == 0.0 && c.passing == 0.0;
                if ((b.passing > 0.0) != (c.passing > 0.0)) k.one_sided = b.passing > 0.0 ? b.intensity : c.intensity;
                if (k.both_pass && b.intensity == c.intensity && b.phase == c.phase) k.matched = b.intensity;
                out.push_back(k);
            }
        }
    }
    return out;
}

/// Alice reports a D1 event when D1 clicks and D2 stays silent.
inline double d1_only_prob(int photons, double eta, double d1_fraction, double dark) {
    const double silent_d2 = std::pow(1.0 - eta * (1.0 - d1_fraction), photons);
    const double silent_both = std::pow(1.0 - eta, photons);
    return std::max(0.0, (1.0 - dark) * (silent_d2 - (1.0 - dark) * silent_both));
}

struct ClassTally {
    PulseClass cls;
    PhotonArray pulses{};
    PhotonArray d1{};
    PhotonArray filter_d1{};  // D1 event with a simultaneous filter click

    [[nodiscard]] double total_pulses() const { return sum(pulses); }
    [[nodiscard]] double total_d1() const { return sum(d1); }
    [[nodiscard]] double total_filter() const { return sum(filter_d1); }
    static double sum(const PhotonArray& a) {
        double s = 0.0;
        for (double x : a) s += x;
        return s;
    }
};

enum class Mode : std::uint8_t { Expected, Tagged };

struct Simulation {
    ChannelParams params;
    Intensities intensities;
    Mode mode = Mode::Expected;
    std::vector<ClassTally> classes;
};

/// Expected or sampled tallies for every class at the params' distance.
inline Simulation simulate_counts(const ChannelParams& p, const Intensities& mu, std::uint64_t seed,
                                  Mode mode = Mode::Tagged) {
    Simulation sim{p, mu, mode, {}};
    const auto classes = enumerate_classes(p, mu);
    const double eta = p.transmittance();
    Stream rng(seed, 0x7477696eULL);

    std::vector<double> class_pulses(classes.size());
    if (mode == Mode::Expected) {
        for (std::size_t i = 0; i < classes.size(); ++i) class_pulses[i] = p.pulses * classes[i].prob;
    } else {
        std::vector<double> probs;
        for (const auto& c : classes) probs.push_back(c.prob);
        class_pulses = detail::multinomial(rng, p.pulses, probs);
    }

    for (std::size_t i = 0; i < classes.size(); ++i) {
        ClassTally t;
        t.cls = classes[i];
        const double qd1 = t.cls.d1_fraction(p.misalignment);
        const double filter_click = 1.0 - (1.0 - p.dark_count) * std::exp(-eta * t.cls.blocked);
        const PhotonArray dist = detail::photon_distribution(t.cls.passing);
        if (mode == Mode::Expected) {
            for (int k = 0; k < kPhotonBins; ++k) t.pulses[k] = class_pulses[i] * dist[k];
        } else {
            const auto split = detail::multinomial(rng, class_pulses[i], std::vector<double>(dist.begin(), dist.end()));
            std::copy(split.begin(), split.end(), t.pulses.begin());
        }
        for (int k = 0; k < kPhotonBins; ++k) {
            const double y = d1_only_prob(k, eta, qd1, p.dark_count);
            if (mode == Mode::Expected) {
                t.d1[k] = t.pulses[k] * y;
                t.filter_d1[k] = t.d1[k] * filter_click;
            } else {
                t.d1[k] = detail::binomial(rng, t.pulses[k], y);
                t.filter_d1[k] = detail::binomial(rng, t.d1[k], filter_click);
            }
        }
        sim.classes.push_back(t);
    }
    return sim;
}

/// Observed decoy-window counts with their per-pulse sending probabilities.
/// Index 0 is the higher intensity, 1 the lower.
struct DecoyCounts {
    double pulses = 0.0;
    std::array<double, 2> one_sided{};       // n_0y + n_y0
    std::array<double, 2> one_sided_prob{};  // P_0y, one orientation
    double vacuum = 0.0;                     // n_00
    double vacuum_prob = 0.0;
    std::array<double, 2> matched{};         // equal pulses, equal phase (both phase values)
    std::array<double, 2> matched_prob{};
    std::array<double, 2> filter{};          // n_fy + n_yf

    void validate() const {
        for (int i = 0; i < 2; ++i) {
            if (one_sided[i] < 0 || matched[i] < 0 || filter[i] < 0) throw std::invalid_argument("negative count");
            if (!(one_sided_prob[i] > 0.0 && one_sided_prob[i] <= 1.0)) throw std::invalid_argument("P_0y outside (0,1]");
            if (!(matched_prob[i] > 0.0 && matched_prob[i] <= 1.0)) throw std::invalid_argument("P_y(xx) outside (0,1]");
        }
        if (vacuum < 0) throw std::invalid_argument("negative count");
        if (!(vacuum_prob > 0.0 && vacuum_prob <= 1.0)) throw std::invalid_argument("P_00 outside (0,1]");
    }
};

struct SignalTallies {
    double kept_pulses = 0.0;
    double one_sided_pulses = 0.0;
    double n_tot = 0.0;  // D1 events
    double n_ss = 0.0;   // ...with both pulses reaching the splitter
    double n_00 = 0.0;   // ...with neither
};

inline DecoyCounts decoy_counts(const Simulation& sim) {
    DecoyCounts c;
    c.pulses = sim.params.pulses;
    for (const auto& t : sim.classes) {
        if (t.cls.window != Window::Decoy) continue;
        if (t.cls.one_sided >= 0) {
            c.one_sided[t.cls.one_sided] += t.total_d1();
            c.one_sided_prob[t.cls.one_sided] += 0.5 * t.cls.prob;
            c.filter[t.cls.one_sided] += t.total_filter();
        }
        if (t.cls.none_pass) {
            c.vacuum += t.total_d1();
            c.vacuum_prob += t.cls.prob;
        }
        if (t.cls.matched >= 0) {
            c.matched[t.cls.matched] += t.total_d1();
            c.matched_prob[t.cls.matched] += t.cls.prob;
        }
    }
    return c;
}

inline SignalTallies signal_tallies(const Simulation& sim) {
    SignalTallies s;
    for (const auto& t : sim.classes) {
        if (t.cls.window != Window::Signal) continue;
        const double d1 = t.total_d1();
        s.kept_pulses += t.total_pulses();
        s.n_tot += d1;
        if (t.cls.one_sided >= 0) s.one_sided_pulses += t.total_pulses();
        if (t.cls.both_pass) s.n_ss += d1;
        if (t.cls.none_pass) s.n_00 += d1;
    }
    return s;
}

/// Ground truth read from the photon-number tags.
struct TaggedTruth {
    double n1 = 0.0;         // single-photon D1 events in one-sided decoy classes
    double n1_signal = 0.0;  // same, signal window
    double e1 = 0.0;         // single-photon error rate
};

inline TaggedTruth tagged_truth(const Simulation& sim) {
    TaggedTruth tt;
    double err_events = 0.0;
    double err_pulses = 0.0;
    double key_pulses = 0.0;
    for (const auto& t : sim.classes) {
        if (t.cls.one_sided >= 0) {
            (t.cls.window == Window::Decoy ? tt.n1 : tt.n1_signal) += t.d1[1];
            if (t.cls.window == Window::Decoy) key_pulses += t.pulses[1];
        }
        if (t.cls.window == Window::Decoy && t.cls.matched >= 0) {
            err_events += t.d1[1];
            err_pulses += t.pulses[1];
        }
    }
    if (err_pulses > 0.0 && key_pulses > 0.0 && tt.n1 > 0.0) {
        tt.e1 = (err_events / err_pulses) / (2.0 * tt.n1 / key_pulses);
    }
    return tt;
}

enum class Direction : std::uint8_t { Up, Down };

/// n +/- sqrt(n ln(1/eps) / 2); the lower value is clamped at 0. The upper
/// value never drops below ln(1/eps), the Poisson limit for an empty count,
/// since the square-root slack alone vanishes when nothing was observed.
inline double hoeffding_adjust(double n, double eps, Direction dir) {
    if (!(n >= 0.0)) throw std::invalid_argument("count must be non-negative");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in (0, 1]");
    const double log_inv = std::log(1.0 / eps);
    const double delta = std::sqrt(n * log_inv / 2.0);
    return dir == Direction::Up ? std::max(n + delta, log_inv) : std::max(0.0, n - delta);
}

/// sqrt((a - b + 1) b ln(1/c) / (2a)): count deviation of a size-b sample
/// drawn without replacement from a population of a.
inline double serfling_gamma(double a, double b, double c) {
    if (!(a > 0.0) || !(b >= 0.0) || b > a + 1.0) throw std::invalid_argument("Serfling needs 0 <= b <= a + 1");
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("eps must lie in (0, 1]");
    return std::sqrt((a - b + 1.0) * b * std::log(1.0 / c) / (2.0 * a));
}

struct DecoyBound {
    double value = 0.0;
    double chi1 = 0.0;
    bool clamped = false;
};

/// chi_1 = sum over intensities of y P_0y e^-y, both orientations.
inline double single_photon_prob(const DecoyCounts& c, const Intensities& mu) {
    double chi = 0.0;
    for (int i = 0; i < 2; ++i) chi += mu[i] * 2.0 * c.one_sided_prob[i] * std::exp(-mu[i]);
    return chi;
}

/// Lower bound on single-photon D1 events in the one-sided decoy classes.
inline DecoyBound decoy_n1_lower(const DecoyCounts& c, const Intensities& mu, double eps = 1.0) {
    c.validate();
    mu.validate();
    const double hi = mu.signal;
    const double lo = mu.decoy;
    DecoyBound b;
    b.chi1 = single_photon_prob(c, mu);
    const double n_lo = hoeffding_adjust(c.one_sided[1], eps, Direction::Down);
    const double n_hi = hoeffding_adjust(c.one_sided[0], eps, Direction::Up);
    const double n_vac = hoeffding_adjust(c.vacuum, eps, Direction::Up);
    const double bracket = hi * hi * std::exp(lo) * n_lo / c.one_sided_prob[1] -
                           lo * lo * std::exp(hi) * n_hi / c.one_sided_prob[0] -
                           2.0 * (hi * hi - lo * lo) * n_vac / c.vacuum_prob;
    b.value = b.chi1 / (2.0 * hi * lo * (hi - lo)) * bracket;
    if (b.value <= 0.0) {
        b.value = 0.0;
        b.clamped = true;
    }
    return b;
}

/// Upper bound on the single-photon error rate, capped at 1/2. Returns 1/2
/// when n1 is not positive.
inline double decoy_e1_upper(const DecoyCounts& c, const Intensities& mu, double n1_lower, double eps = 1.0) {
    c.validate();
    mu.validate();
    if (!(n1_lower > 0.0) || !(c.pulses > 0.0)) return 0.5;
    const double lo = mu.decoy;
    const double chi1 = single_photon_prob(c, mu);
    const double yield1 = n1_lower / (c.pulses * chi1);
    const double matched_rate = hoeffding_adjust(c.matched[1], eps, Direction::Up) / (c.pulses * c.matched_prob[1]);
    const double vacuum_rate = hoeffding_adjust(c.vacuum, eps, Direction::Down) / (c.pulses * c.vacuum_prob);
    const double err_yield = std::max(0.0, (std::exp(2.0 * lo) * matched_rate - vacuum_rate) / (2.0 * lo));
    double filter_term = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double rate = hoeffding_adjust(c.filter[i], eps, Direction::Up) / (c.pulses * 2.0 * c.one_sided_prob[i]);
        filter_term += mu[i] * mu[i] * std::exp(-mu[i]) * rate;
    }
    if (c.matched[1] == 0.0 && c.filter[0] == 0.0 && c.filter[1] == 0.0 && eps == 1.0) return 0.0;
    return std::min(0.5, (err_yield + filter_term) / (2.0 * yield1));
}

/// Decoy one-sided pulses rescaled to the signal intensity's single-photon weight.
inline double signal_equivalent_pulses(const DecoyCounts& c, const Intensities& mu) {
    return c.pulses * single_photon_prob(c, mu) / (mu.signal * std::exp(-mu.signal));
}

struct SignalBounds {
    double n1 = 0.0;
    double e1 = 0.5;
};

/// Moves decoy-window single-photon bounds onto the signal window.
/// `signal_pulses` is the number of one-sided kept signal pulses and
/// `decoy_pulses` the signal-equivalent decoy count; together they form the
/// population from which the signal part is a sample.
inline SignalBounds serfling_transfer(double n1, double e1, double signal_pulses, double decoy_pulses, double eps) {
    if (!(n1 >= 0.0) || !(signal_pulses >= 0.0) || !(decoy_pulses >= 0.0)) throw std::invalid_argument("negative count");
    SignalBounds out;
    if (decoy_pulses <= 0.0 || n1 <= 0.0) return out;
    out.n1 = std::max(0.0, n1 * signal_pulses / decoy_pulses -
                                serfling_gamma(decoy_pulses + signal_pulses, signal_pulses, eps));
    if (out.n1 > 0.0) out.e1 = std::min(0.5, e1 + serfling_gamma(out.n1 + n1, out.n1, eps) / out.n1);
    return out;
}

inline double total_qber(const SignalTallies& s) {
    if (s.n_tot <= 0.0) return 0.0;
    return std::clamp((s.n_ss + s.n_00) / s.n_tot, 0.0, 1.0);
}

/// n1 [1 - h(e1)] - n_tot f h(E_tot), clamped at 0.
inline double signature_length(double n1, double e1, double n_tot, double e_tot, double f) {
    const double r = n1 * (1.0 - bounds::binary_entropy(std::min(e1, 0.5))) -
                     n_tot * f * bounds::binary_entropy(std::min(e_tot, 0.5));
    return std::max(0.0, r);
}

struct SiftedLength {
    double expected = 0.0;  // mean number of kept signal D1 events
    double formula = 0.0;   // N mu e^-mu
};

inline SiftedLength sifted_length(const ChannelParams& p, const Intensities& mu) {
    const auto s = signal_tallies(simulate_counts(p, mu, 0, Mode::Expected));
    return {s.n_tot, p.pulses * mu.signal * std::exp(-mu.signal)};
}

struct KeyRateReport {
    double distance_km = 0.0;
    double transmittance = 0.0;
    double chi1 = 0.0;
    double n1_lower = 0.0;         // decoy window
    double e1_upper = 0.5;
    double n1_signal_lower = 0.0;  // after transfer to the signal window
    double e1_signal_upper = 0.5;
    double e_tot = 0.0;
    double n_tot = 0.0;
    double sifted = 0.0;
    double sifted_formula = 0.0;
    double rate = 0.0;
    bool n1_clamped = false;
};

inline KeyRateReport analyze(const Simulation& sim) {
    const auto& p = sim.params;
    const auto& mu = sim.intensities;
    const DecoyCounts c = decoy_counts(sim);
    const SignalTallies s = signal_tallies(sim);
    KeyRateReport r;
    r.distance_km = p.distance_km;
    r.transmittance = p.transmittance();
    const DecoyBound n1 = decoy_n1_lower(c, mu, p.failure_prob);
    r.chi1 = n1.chi1;
    r.n1_lower = n1.value;
    r.n1_clamped = n1.clamped;
    r.e1_upper = decoy_e1_upper(c, mu, n1.value, p.failure_prob);
    const SignalBounds sb =
        serfling_transfer(n1.value, r.e1_upper, s.one_sided_pulses, signal_equivalent_pulses(c, mu), p.failure_prob);
    r.n1_signal_lower = sb.n1;
    r.e1_signal_upper = sb.e1;
    r.e_tot = total_qber(s);
    r.n_tot = s.n_tot;
    r.sifted = s.n_tot;
    r.sifted_formula = p.pulses * mu.signal * std::exp(-mu.signal);
    r.rate = signature_length(sb.n1, sb.e1, s.n_tot, r.e_tot, p.ec_efficiency);
    return r;
}

inline std::vector<KeyRateReport> sweep_distance(const ChannelParams& base, const Intensities& mu,
                                                 const std::vector<double>& distances, Mode mode = Mode::Expected,
                                                 std::uint64_t seed = 0, unsigned threads = 1) {
    std::vector<KeyRateReport> out(distances.size());
    parallel_for(distances.size(), threads, [&](std::uint64_t i) {
        ChannelParams p = base;
        p.distance_km = distances[i];
        out[i] = analyze(simulate_counts(p, mu, mix64(seed + i), mode));
    });
    return out;
}

/// Compares a measured aggregate with its photon-number decomposition.
struct IdentityCheck {
    double measured = 0.0;
    double decomposed = 0.0;
    double sigma = 0.0;

    [[nodiscard]] double z() const { return sigma > 0.0 ? std::abs(measured - decomposed) / sigma : 0.0; }
};

struct AppendixA {
    IdentityCheck gain;  // Q against sum_i Y_i P_i
    IdentityCheck error; // E_tot Q against sum_i e_i Y_i P_i
};

/// Decomposition of the kept signal window with tagged yields Y_i and error
/// rates e_i, weighted by the analytic photon-number mixture P_i.
inline AppendixA appendix_a(const Simulation& sim) {
    double kept_prob = 0.0;
    PhotonArray mix{};
    PhotonArray pulses{};
    PhotonArray d1{};
    PhotonArray err{};
    for (const auto& t : sim.classes) {
        if (t.cls.window != Window::Signal) continue;
        kept_prob += t.cls.prob;
        const auto dist = detail::photon_distribution(t.cls.passing);
        const bool is_err = t.cls.both_pass || t.cls.none_pass;
        for (int k = 0; k < kPhotonBins; ++k) {
            mix[k] += t.cls.prob * dist[k];
            pulses[k] += t.pulses[k];
            d1[k] += t.d1[k];
            if (is_err) err[k] += t.d1[k];
        }
    }
    AppendixA out;
    const double total = ClassTally::sum(pulses);
    if (total <= 0.0 || kept_prob <= 0.0) return out;
    const double q = ClassTally::sum(d1) / total;
    const double eq = ClassTally::sum(err) / total;
    out.gain.measured = q;
    out.error.measured = eq;
    for (int k = 0; k < kPhotonBins; ++k) {
        if (pulses[k] <= 0.0) continue;
        const double pk = mix[k] / kept_prob;
        const double yk = d1[k] / pulses[k];
        const double ek = d1[k] > 0.0 ? err[k] / d1[k] : 0.0;
        out.gain.decomposed += yk * pk;
        out.error.decomposed += ek * yk * pk;
    }
    // Both sides fluctuate through the photon-number split; bound each by a binomial spread.
    out.gain.sigma = std::sqrt(2.0 * std::max(q * (1.0 - q), 1.0 / total) / total);
    out.error.sigma = std::sqrt(2.0 * std::max(eq * (1.0 - eq), 1.0 / total) / total);
    return out;
}

/// Single-photon yield of the one-sided decoy classes, per intensity.
struct YieldComparison {
    double high = 0.0;
    double low = 0.0;
    double sigma = 0.0;

    [[nodiscard]] double z() const { return sigma > 0.0 ? std::abs(high - low) / sigma : 0.0; }
};

inline YieldComparison yield_invariance(const Simulation& sim, int photons = 1) {
    if (photons < 0 || photons >= kPhotonBins - 1) throw std::out_of_range("photon number");
    std::array<double, 2> events{};
    std::array<double, 2> pulses{};
    for (const auto& t : sim.classes) {
        if (t.cls.window != Window::Decoy || t.cls.one_sided < 0) continue;
        events[t.cls.one_sided] += t.d1[photons];
        pulses[t.cls.one_sided] += t.pulses[photons];
    }
    YieldComparison y;
    if (pulses[0] <= 0.0 || pulses[1] <= 0.0) return y;
    y.high = events[0] / pulses[0];
    y.low = events[1] / pulses[1];
    const double pooled = (events[0] + events[1]) / (pulses[0] + pulses[1]);
    y.sigma = std::sqrt(std::max(pooled * (1.0 - pooled), 1e-300) * (1.0 / pulses[0] + 1.0 / pulses[1]));
    return y;
}

}  // namespace cqds::twinfield
