// Command-line front end: one subcommand per experiment family, each
// writing CSV tables into --out.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cqds/adversary.hpp"
#include "cqds/bounds.hpp"
#include "cqds/csv.hpp"
#include "cqds/hilbert.hpp"
#include "cqds/protocol.hpp"
#include "cqds/scenario.hpp"
#include "cqds/twinfield.hpp"

namespace fs = std::filesystem;
using namespace cqds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitSchema = 2;
constexpr int kExitAbort = 3;

struct Context {
    Scenario scenario;
    std::uint64_t seed = 1;
    std::uint64_t trials = 1000;
    unsigned threads = 1;
    fs::path out = ".";

    [[nodiscard]] std::vector<std::pair<std::string, std::string>> meta() const {
        return {{"tool", std::string("cqds ") + CQDS_VERSION},
                {"scenario_hash", hex64(scenario.hash())},
                {"seed", std::to_string(seed)}};
    }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(out / name);
        if (!f) throw std::runtime_error("cannot write " + (out / name).string());
        return f;
    }

    CsvWriter table(std::ofstream& f, const std::vector<std::string>& columns) const {
        return CsvWriter(f, meta(), scenario.resolved(), columns);
    }
};

DistributionConfig protocol_config(const Scenario& s) {
    DistributionConfig cfg;
    cfg.rounds = s.integer("protocol", "rounds");
    cfg.bs = BeamSplitter::with_reflectivity(s.real("protocol", "reflectivity"));
    cfg.alice.prob_h = s.real("protocol", "alice_prob_h");
    cfg.bob = {s.real("protocol", "bob_reflect_h"), s.real("protocol", "bob_inject"), s.real("protocol", "bob_flip")};
    cfg.charlie = {s.real("protocol", "charlie_reflect_h"), s.real("protocol", "charlie_inject"),
                   s.real("protocol", "charlie_flip")};
    cfg.bob.validate();
    cfg.charlie.validate();
    return cfg;
}

EveAttack eve_config(const Scenario& s) {
    EveAttack a;
    a.rate = s.real("attack", "eve_rate");
    a.channel = s.text("attack", "eve_channel") == "photonic" ? EveChannel::Photonic : EveChannel::ErrorRates;
    a.validate();
    return a;
}

int run_simulate(const Context& ctx) {
    const Scenario& s = ctx.scenario;
    DistributionConfig cfg = protocol_config(s);
    cfg.eve = eve_config(s);
    const Transcript t = run_distribution(cfg, ctx.seed, ctx.threads);
    if (s.text("protocol", "transcript") == "yes") {
        auto f = ctx.open("transcript.csv");
        for (const auto& [k, v] : ctx.meta()) f << "# " << k << ": " << v << '\n';
        write_transcript_csv(f, t);
    }
    double d1 = 0;
    double d2 = 0;
    double db = 0;
    double dc = 0;
    for (const auto& r : t.records) {
        if (r.outcome.is_d1()) ++d1;
        else if (r.outcome.is_d2()) ++d2;
        else if (r.outcome.kind == OutcomeKind::DB) ++db;
        else ++dc;
    }
    const SiftStats st = sift_stats(t);
    const ChannelErrorEstimate err = estimate_channel_error(t, announce_flips(t), s.real("protocol", "error_limit"));
    const SignaturePackage pkg = sign_plain({0}, sift(t));
    const double thr = s.real("protocol", "verify_threshold");
    const auto bob = verify(pkg, view_of(t, Party::Bob), thr);
    const auto charlie = verify(pkg, view_of(t, Party::Charlie), thr);

    auto f = ctx.open("summary.csv");
    auto w = ctx.table(f, {"quantity", "value"});
    const double n = double(t.size());
    w.row({std::string("rounds"), n});
    w.row({std::string("p_d1"), d1 / n});
    w.row({std::string("p_d2"), d2 / n});
    w.row({std::string("p_db"), db / n});
    w.row({std::string("p_dc"), dc / n});
    w.row({std::string("sifted"), double(st.total())});
    w.row({std::string("counterfactual"), double(st.counterfactual)});
    w.row({std::string("non_interference"), double(st.non_interference)});
    w.row({std::string("injected_bob"), double(st.injected_bob)});
    w.row({std::string("injected_charlie"), double(st.injected_charlie)});
    w.row({std::string("eavesdropper"), double(st.eavesdropper)});
    w.row({std::string("qber"), err.e});
    w.row({std::string("abort"), double(err.abort)});
    w.row({std::string("bob_accepts"), double(bob.accepted)});
    w.row({std::string("charlie_accepts"), double(charlie.accepted)});
    if (err.abort) {
        std::cerr << "abort: estimated error " << format_number(err.e) << " exceeds limit " << format_number(err.limit)
                  << '\n';
        return kExitAbort;
    }
    return kExitOk;
}

int run_attack(const Context& ctx) {
    const Scenario& s = ctx.scenario;
    const double r = s.real("attack", "inject");
    const auto points = static_cast<int>(s.integer("attack", "w_points"));
    const EveAttack base = eve_config(s);
    {
        DistributionConfig cfg;
        cfg.rounds = s.integer("attack", "rounds");
        cfg.bob.inject_rate = cfg.charlie.inject_rate = r;
        auto f = ctx.open("fig3.csv");
        auto w = ctx.table(f, {"w", "e", "info_gap", "e_measured", "info_eve_measured"});
        for (const auto& row : bounds::fig3_curve(r, points)) {
            const auto i = static_cast<std::uint64_t>(std::llround(row.w * (points - 1)));
            const auto run = adversary::eve_intercept_resend(cfg, {row.w, base.channel}, mix64(ctx.seed + i), ctx.threads);
            const auto est = estimate_channel_error(run.transcript, announce_flips(run.transcript));
            w.row({row.w, row.e, row.info_gap, est.e, run.ledger.information()});
        }
    }
    {
        auto f = ctx.open("repudiation.csv");
        auto w = ctx.table(f, {"tau", "r", "rounds", "trials", "successes", "rate", "bound"});
        const auto rounds = s.integer("attack", "repudiation_rounds");
        std::uint64_t point = 0;
        for (double tau : s.reals("attack", "repudiation_taus")) {
            for (double rr : s.reals("attack", "repudiation_rates")) {
                adversary::RepudiationExperiment ex;
                ex.distribution.rounds = rounds;
                ex.distribution.bob.inject_rate = ex.distribution.charlie.inject_rate = rr;
                ex.strategy.tau = tau;
                ex.threshold = s.real("protocol", "verify_threshold");
                const auto est = adversary::repudiation_rate(ex, ctx.trials, mix64(ctx.seed ^ (++point << 32)), ctx.threads);
                const auto b = bounds::chernoff_repudiation(tau, double(rounds), rr, rr);
                w.row({tau, rr, std::int64_t(rounds), std::int64_t(ctx.trials), std::int64_t(est.successes), est.rate(),
                       b.bound});
            }
        }
    }
    {
        auto f = ctx.open("forgery.csv");
        auto w = ctx.table(f, {"scheme", "trials", "charlie_accepts", "message_changed", "success_rate", "block_length"});
        for (bool code : {false, true}) {
            adversary::ForgeryExperiment ex;
            ex.distribution.rounds = s.integer("attack", "forgery_rounds");
            ex.distribution.bob.inject_rate = ex.distribution.charlie.inject_rate = r;
            ex.strategy.tau = s.real("attack", "forgery_tau");
            ex.use_code = code;
            ex.threshold = s.real("protocol", "verify_threshold");
            std::vector<adversary::ForgeryOutcome> out(ctx.trials);
            parallel_for(ctx.trials, ctx.threads,
                         [&](std::uint64_t i) { out[i] = adversary::forgery_trial(ex, mix64(ctx.seed + 7919 * i)); });
            std::int64_t acc = 0;
            std::int64_t changed = 0;
            std::int64_t ok = 0;
            std::size_t block = 0;
            for (const auto& o : out) {
                acc += o.charlie_accepts;
                changed += o.message_changed;
                ok += o.success();
                block = std::max(block, o.block_length);
            }
            w.row({std::string(code ? "repetition" : "plain"), std::int64_t(ctx.trials), acc, changed,
                   ctx.trials ? double(ok) / double(ctx.trials) : 0.0, std::int64_t(block)});
        }
    }
    return kExitOk;
}

int run_bounds(const Context& ctx) {
    const Scenario& s = ctx.scenario;
    {
        auto f = ctx.open("fig2.csv");
        auto w = ctx.table(f, {"r", "n_singleton", "n_hamming"});
        for (const auto& row : bounds::fig2_table(s.real("bounds", "message_bits"), s.real("bounds", "r_min"),
                                                  s.real("bounds", "r_max"), static_cast<int>(s.integer("bounds", "points")))) {
            w.row({row.r, row.n_singleton, row.n_hamming});
        }
    }
    auto f = ctx.open("threshold.csv");
    auto w = ctx.table(f, {"r", "w_star", "e_max", "bracketed"});
    const auto th = bounds::secure_threshold(s.real("bounds", "threshold_r"));
    w.row({s.real("bounds", "threshold_r"), th.w_star, th.e_max, std::int64_t(th.bracketed)});
    return kExitOk;
}

int run_hilbert(const Context& ctx) {
    namespace h = cqds::hilbert;
    const auto d2 = h::evolve_and_condition(h::Detector::D2);
    const auto d1 = h::evolve_and_condition(h::Detector::D1);
    const auto matched = h::condition(
        h::evolve(h::initial_state(Eigen::Vector2cd(1, 0), Eigen::Vector2cd(1, 0), Eigen::Vector2cd(1, 0))),
        h::Detector::D1);
    const auto ab = h::alice_bob_restriction(d2.state);
    const auto eve = h::attach_copy(ab, 0, ctx.scenario.real("hilbert", "eve_overlap_angle"));
    const auto schmidt = h::schmidt_spectrum(ab, {0});
    {
        auto f = ctx.open("amplitudes.csv");
        for (const auto& [k, v] : ctx.meta()) f << "# " << k << ": " << v << '\n';
        h::write_amplitudes_csv(f, d2.state);
    }
    auto f = ctx.open("hilbert.csv");
    auto w = ctx.table(f, {"quantity", "value"});
    w.row({std::string("p_d2"), d2.probability});
    w.row({std::string("p_d1"), d1.probability});
    w.row({std::string("d2_norm"), d2.state.norm()});
    w.row({std::string("matched_d1_possible"), std::int64_t(matched.possible)});
    w.row({std::string("fidelity_printed_d2"), h::fidelity(d2.state, h::printed_d2_state())});
    w.row({std::string("alice_bob_purity"), h::purity(h::reduce(ab, {0, 1}))});
    w.row({std::string("fidelity_printed_alice_bob"), h::fidelity(ab, h::printed_alice_bob_state())});
    w.row({std::string("traced_charlie_purity"), h::purity(h::reduce(d2.state, {0, 1}))});
    w.row({std::string("eve_extension_purity"), h::purity(h::reduce(eve, {0, 1}))});
    for (std::size_t i = 0; i < schmidt.size(); ++i) w.row({"schmidt_" + std::to_string(i), schmidt[i]});
    return kExitOk;
}

int run_twinfield(const Context& ctx) {
    const Scenario& s = ctx.scenario;
    twinfield::ChannelParams p;
    p.pulses = s.real("twinfield", "pulses");
    p.attenuation_db_per_km = s.real("twinfield", "attenuation_db_per_km");
    p.detector_efficiency = s.real("twinfield", "detector_efficiency");
    p.dark_count = s.real("twinfield", "dark_count");
    p.misalignment = s.real("twinfield", "misalignment");
    p.failure_prob = s.real("twinfield", "failure_prob");
    p.ec_efficiency = s.real("twinfield", "ec_efficiency");
    p.phase_zero_prob = s.real("twinfield", "phase_zero_prob");
    p.decoy_fraction = s.real("twinfield", "decoy_fraction");
    p.no_send_fraction = s.real("twinfield", "no_send_fraction");
    p.validate();
    for (const auto& note : p.warnings()) std::cerr << "warning: " << note << '\n';
    const twinfield::Intensities mu{s.real("twinfield", "signal_intensity"), s.real("twinfield", "decoy_intensity")};
    mu.validate();
    const double lo = s.real("twinfield", "d_min");
    const double hi = s.real("twinfield", "d_max");
    const double step = s.real("twinfield", "d_step");
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("distance grid needs d_step > 0 and d_max >= d_min");
    std::vector<double> grid;
    for (int i = 0; lo + i * step <= hi + 1e-9; ++i) grid.push_back(lo + i * step);
    const auto mode = s.text("twinfield", "mode") == "tagged" ? twinfield::Mode::Tagged : twinfield::Mode::Expected;
    const auto reports = twinfield::sweep_distance(p, mu, grid, mode, ctx.seed, ctx.threads);
    auto f = ctx.open("fig4.csv");
    auto w = ctx.table(f, {"d_km", "n1_lower", "e1_upper", "E_tot", "L", "R", "eta", "n1_decoy_lower", "e1_decoy_upper",
                           "L_formula"});
    for (const auto& r : reports) {
        w.row({r.distance_km, r.n1_signal_lower, r.e1_signal_upper, r.e_tot, r.sifted, r.rate, r.transmittance,
               r.n1_lower, r.e1_upper, r.sifted_formula});
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual quantum digital signature simulator"};
    app.set_version_flag("--version", std::string("cqds ") + CQDS_VERSION);
    std::string config;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    unsigned threads = default_threads();
    std::string out = ".";
    std::vector<std::string> overrides;
    app.add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides run.seed)");
    auto* trials_opt = app.add_option("--trials", trials, "Trials per experiment point (overrides run.trials)");
    app.add_option("--threads", threads, "Worker threads (default: CQDS_THREADS or hardware)")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");
    app.add_option("--set", overrides, "Override one key: section.key=value");
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_subcommand("simulate", "Distribute, sift and sign one protocol run");
    app.add_subcommand("attack", "Eavesdropping, repudiation and forgery experiments");
    app.add_subcommand("bounds", "Code-length bounds and the secure-QBER threshold");
    app.add_subcommand("hilbert", "Amplitude-level state checks");
    app.add_subcommand("twinfield", "Decoy-state signature length versus distance");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSchema;
    }

    Context ctx;
    try {
        if (!config.empty()) {
            std::ifstream in(config);
            ctx.scenario = Scenario::parse(in, config);
        }
        for (const auto& o : overrides) {
            const auto dot = o.find('.');
            const auto eq = o.find('=');
            if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
                throw SchemaError("--set", 0, "expected section.key=value, got '" + o + "'");
            }
            try {
                ctx.scenario.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
            } catch (const std::invalid_argument& e) {
                throw SchemaError("--set", 0, e.what());
            }
        }
        const std::string mode = app.get_subcommands().front()->get_name();
        ctx.scenario.set("run", "mode", mode);
        if (*seed_opt) ctx.scenario.set("run", "seed", std::to_string(seed));
        if (*trials_opt) ctx.scenario.set("run", "trials", std::to_string(trials));
        ctx.seed = ctx.scenario.integer("run", "seed");
        ctx.trials = ctx.scenario.integer("run", "trials");
        ctx.threads = threads;
        ctx.out = out;
        fs::create_directories(ctx.out);
        {
            std::ofstream echo(ctx.out / "scenario.ini");
            echo << ctx.scenario.resolved();
        }
        if (mode == "simulate") return run_simulate(ctx);
        if (mode == "attack") return run_attack(ctx);
        if (mode == "bounds") return run_bounds(ctx);
        if (mode == "hilbert") return run_hilbert(ctx);
        return run_twinfield(ctx);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
