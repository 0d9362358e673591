// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cqds/adversary.hpp"
#include "cqds/bounds.hpp"
#include "cqds/csv.hpp"
#include "cqds/hilbert.hpp"
#include "cqds/parallel.hpp"
#include "cqds/protocol.hpp"
#include "cqds/twinfield.hpp"

using namespace cqds;

namespace {

// Pinned tolerances.
constexpr double kSigmas = 5.0;
constexpr double kThresholdTol = 0.002;
constexpr double kHilbertTol = 1e-9;
constexpr double kSoundnessTail = 0.01;

struct Verdict {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double measured, double expected, double sigma) { return std::abs(measured - expected) <= kSigmas * sigma; }

double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

unsigned threads() { return default_threads(); }

DistributionConfig honest(std::uint64_t rounds, double r = 0.0) {
    DistributionConfig cfg;
    cfg.rounds = rounds;
    cfg.bob.inject_rate = cfg.charlie.inject_rate = r;
    return cfg;
}

Verdict detector_statistics() {
    const double n = 1e6;
    const Transcript t = run_distribution(honest(std::uint64_t(n)), 101, threads());
    std::array<double, 4> hits{};
    for (const auto& r : t.records) {
        switch (r.outcome.kind) {
            case OutcomeKind::D1: case OutcomeKind::InjectedD1: ++hits[0]; break;
            case OutcomeKind::D2: case OutcomeKind::InjectedD2: ++hits[1]; break;
            case OutcomeKind::DB: ++hits[2]; break;
            case OutcomeKind::DC: ++hits[3]; break;
        }
    }
    const std::array<double, 4> want{0.125, 0.375, 0.25, 0.25};
    Verdict v;
    for (int i = 0; i < 4; ++i) {
        const double p = hits[i] / n;
        v.pass = v.pass && within(p, want[i], binomial_sigma(want[i], n));
        v.detail += fmt("%s%.5f", i ? " " : "P=", p);
    }
    return v;
}

Verdict sifted_length() {
    const double n = 80000;
    const auto plain = sift_stats(run_distribution(honest(std::uint64_t(n)), 202, threads()));
    const double sigma_total = std::sqrt(n * 0.125 * 0.875);
    const auto injected = sift_stats(run_distribution(honest(std::uint64_t(n), 0.04), 203, threads()));
    const double inj = double(injected.injected_bob + injected.injected_charlie);
    const double p_inj = 0.08 / 8.0;
    Verdict v;
    v.pass = within(double(plain.total()), 10000, sigma_total) && within(inj, n * p_inj, std::sqrt(n * p_inj * (1 - p_inj)));
    v.detail = fmt("|Sigma|=%llu injected=%.0f", (unsigned long long)plain.total(), inj);
    return v;
}

Verdict repudiation_grid() {
    const std::uint64_t trials = 10000;
    Verdict v;
    double worst = -1.0;
    int informative = 0;
    std::uint64_t point = 0;
    for (double tau : {0.05, 0.1, 0.2, 0.5}) {
        for (double r : {0.02, 0.05, 0.1}) {
            adversary::RepudiationExperiment ex;
            ex.distribution = honest(4000, r);
            ex.strategy.tau = tau;
            const double bound = adversary::chernoff_bound_for(ex);
            const auto est = adversary::repudiation_rate(ex, trials, mix64(0x5e5e + ++point), threads());
            v.pass = v.pass && est.rate() <= bound;
            informative += bound < 1.0;
            worst = std::max(worst, est.rate() - std::min(bound, 1.0));
        }
    }
    v.detail = fmt("12 points x %llu trials, %d with bound < 1, max(rate - min(bound,1))=%.4f",
                   (unsigned long long)trials, informative, worst);
    return v;
}

Verdict forgery() {
    const std::uint64_t seeds = 40;
    std::array<std::uint64_t, 2> wins{};
    for (int code = 0; code < 2; ++code) {
        adversary::ForgeryExperiment ex;
        ex.distribution = honest(4000, 0.04);
        ex.strategy.tau = 1.0;
        ex.use_code = code == 1;
        std::vector<std::uint8_t> ok(seeds, 0);
        parallel_for(seeds, threads(), [&](std::uint64_t i) { ok[i] = adversary::forgery_trial(ex, mix64(900 + i)).success(); });
        for (auto o : ok) wins[code] += o;
    }
    Verdict v;
    v.pass = wins[0] == seeds && wins[1] == 0;
    v.detail = fmt("plain %llu/%llu, repetition %llu/%llu", (unsigned long long)wins[0], (unsigned long long)seeds,
                   (unsigned long long)wins[1], (unsigned long long)seeds);
    return v;
}

Verdict ecc_bounds() {
    Verdict v;
    double min_gap = INFINITY;
    for (int i = 1; i <= 1000; ++i) {
        const double r = 0.5 * i / 1001.0;
        const double gap = bounds::hamming_min_n(1, r) - bounds::singleton_min_n(1, r);
        min_gap = std::min(min_gap, gap);
    }
    const double h0 = bounds::hamming_min_n(1, 0);
    const double s0 = bounds::singleton_min_n(1, 0);
    v.pass = min_gap >= 0.0 && h0 == 4.0 && s0 == 4.0;
    v.detail = fmt("min(N_Hamm - N_Sing)=%.3g, N(r=0)=%g/%g", min_gap, h0, s0);
    return v;
}

Verdict eve_threshold() {
    const auto th = bounds::secure_threshold(0.01);
    const auto run = adversary::eve_intercept_resend(honest(400000), {1.0, EveChannel::ErrorRates}, 606, threads());
    const auto est = estimate_channel_error(run.transcript, announce_flips(run.transcript));
    // Delta-method spread of e = (a + b) / (2 (c + d)) over the four gate-pair rates.
    const auto& p = est.d1_rate;
    const auto& n = est.rounds;
    const double num = p[0] + p[3];
    const double den = p[1] + p[2];
    double var = 0.0;
    for (int g : {0, 3}) var += std::pow(1.0 / (2 * den), 2) * p[g] * (1 - p[g]) / double(n[g]);
    for (int g : {1, 2}) var += std::pow(num / (2 * den * den), 2) * p[g] * (1 - p[g]) / double(n[g]);
    Verdict v;
    v.pass = std::abs(th.e_max - 0.153) <= kThresholdTol && within(est.e, 1.0 / 6.0, std::sqrt(var));
    v.detail = fmt("e_max=%.6f w*=%.6f, MC e=%.5f (sigma %.5f)", th.e_max, th.w_star, est.e, std::sqrt(var));
    return v;
}

Verdict hilbert_checks() {
    using namespace hilbert;
    const auto d2 = evolve_and_condition(Detector::D2);
    bool matched_d2 = true;
    for (int p = 0; p < 2; ++p) {
        const Eigen::Vector2cd e = p ? Eigen::Vector2cd(0, 1) : Eigen::Vector2cd(1, 0);
        const Vec out = evolve(initial_state(e, e, e));
        matched_d2 = matched_d2 && !condition(out, Detector::D1).possible &&
                     std::abs(condition(out, Detector::D2).probability - 1.0) < kHilbertTol;
    }
    const auto ab = alice_bob_restriction(d2.state);
    const double pure = purity(reduce(ab, {0, 1}));
    double eve_max = 0.0;
    for (double theta : {0.1, 0.5, 1.0, 1.5}) eve_max = std::max(eve_max, purity(reduce(attach_copy(ab, 0, theta), {0, 1})));
    Verdict v;
    v.pass = std::abs(d2.state.norm() - 1.0) < kHilbertTol && matched_d2 && std::abs(pure - 1.0) < kHilbertTol &&
             eve_max < 1.0 - kHilbertTol;
    v.detail = fmt("norm=%.12f AB purity=%.12f max Eve-extended purity=%.6f", d2.state.norm(), pure, eve_max);
    return v;
}

Verdict twinfield_soundness() {
    using namespace twinfield;
    const std::uint64_t channels = 1000;
    std::vector<std::array<std::uint8_t, 4>> flags(channels);
    parallel_for(channels, threads(), [&](std::uint64_t i) {
        Stream rng(4242, i);
        ChannelParams p;
        p.pulses = 1e7 * std::pow(10.0, rng.uniform());
        p.distance_km = 120.0 * rng.uniform();
        p.misalignment = 0.06 * rng.uniform();
        p.dark_count = std::pow(10.0, -8.0 + 2.0 * rng.uniform());
        const auto sim = simulate_counts(p, {}, mix64(i + 17), Mode::Tagged);
        const auto truth = tagged_truth(sim);
        const auto c = decoy_counts(sim);
        const double n1 = decoy_n1_lower(c, {}, p.failure_prob).value;
        const double e1 = decoy_e1_upper(c, {}, n1, p.failure_prob);
        const auto a = appendix_a(sim);
        flags[i] = {std::uint8_t(n1 > truth.n1), std::uint8_t(n1 > 0 && e1 < truth.e1), std::uint8_t(a.gain.z() > kSigmas),
                    std::uint8_t(a.error.z() > kSigmas)};
    });
    std::array<std::uint64_t, 4> bad{};
    for (const auto& f : flags) {
        for (int k = 0; k < 4; ++k) bad[k] += f[k];
    }
    const auto tail = static_cast<std::uint64_t>(kSoundnessTail * double(channels));
    Verdict v;
    v.pass = bad[0] <= tail && bad[1] <= tail && bad[2] == 0 && bad[3] == 0;
    v.detail = fmt("%llu channels: n1 violations %llu, e1 violations %llu, identity outliers %llu/%llu",
                   (unsigned long long)channels, (unsigned long long)bad[0], (unsigned long long)bad[1],
                   (unsigned long long)bad[2], (unsigned long long)bad[3]);
    return v;
}

std::string fig4_table(const std::vector<twinfield::KeyRateReport>& rows) {
    std::ostringstream os;
    os << "d_km,n1_lower,e1_upper,E_tot,L,R\n";
    for (const auto& r : rows) {
        os << format_number(r.distance_km) << ',' << format_number(r.n1_signal_lower) << ','
           << format_number(r.e1_signal_upper) << ',' << format_number(r.e_tot) << ',' << format_number(r.sifted) << ','
           << format_number(r.rate) << '\n';
    }
    return os.str();
}

Verdict fig4() {
    using namespace twinfield;
    std::vector<double> d;
    for (int km = 0; km <= 250; km += 5) d.push_back(km);
    const auto rows = sweep_distance(ChannelParams{}, Intensities{}, d, Mode::Expected, 0, threads());
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].rate <= rows[i - 1].rate;
    double cutoff = NAN;
    for (const auto& r : rows) {
        if (r.rate == 0.0) {
            cutoff = r.distance_km;
            break;
        }
    }
    Verdict v;
    v.pass = rows.front().rate > 0.0 && monotone && !std::isnan(cutoff);
    const std::string table = fig4_table(rows);
    const std::filesystem::path golden = std::filesystem::path(CQDS_GOLDEN_DIR) / "fig4_golden.csv";
    std::string golden_state;
    if (!std::filesystem::exists(golden)) {
        if (v.pass) {
            std::ofstream(golden) << table;
            golden_state = "golden written";
        } else {
            golden_state = "golden not written";
        }
    } else {
        std::ifstream in(golden);
        std::ostringstream old;
        old << in.rdbuf();
        const bool same = old.str() == table;
        v.pass = v.pass && same;
        golden_state = same ? "golden matches" : "golden differs";
    }
    v.detail = fmt("R(0)=%.6g, cutoff d*=%g km, %s", rows.front().rate, cutoff, golden_state.c_str());
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"detector statistics", detector_statistics},
        {"sifted-key length", sifted_length},
        {"repudiation bound", repudiation_grid},
        {"forgery demonstration", forgery},
        {"ECC bounds", ecc_bounds},
        {"Eve threshold", eve_threshold},
        {"Hilbert checks", hilbert_checks},
        {"twin-field soundness", twinfield_soundness},
        {"twin-field rate curve", fig4},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !v.pass;
        std::printf("%s [%d] %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", ++index, name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
