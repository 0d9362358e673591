#pragma once

// Flat INI-style scenario files:
//
//   # comment
//   [section]
//   key = value
//
// Every section and key must appear in the schema; anything else is a
// SchemaError carrying the offending line number.

#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cqds {

class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& source, int line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

enum class ValueKind : std::uint8_t { Real, Integer, Text };

struct SchemaEntry {
    std::string section;
    std::string key;
    std::string fallback;
    ValueKind kind;
    std::vector<std::string> choices{};  // Text only; empty means free-form
};

/// Keys understood by the CLI, with defaults. The twin-field block mirrors
/// the Fig. 4 parameter set.
inline const std::vector<SchemaEntry>& scenario_schema() {
    using K = ValueKind;
    static const std::vector<SchemaEntry> schema = {
        {"run", "mode", "simulate", K::Text, {"simulate", "attack", "bounds", "hilbert", "twinfield"}},
        {"run", "seed", "1", K::Integer},
        {"run", "trials", "1000", K::Integer},

        {"protocol", "rounds", "80000", K::Integer},
        {"protocol", "reflectivity", "0.5", K::Real},
        {"protocol", "alice_prob_h", "0.5", K::Real},
        {"protocol", "bob_reflect_h", "0.5", K::Real},
        {"protocol", "charlie_reflect_h", "0.5", K::Real},
        {"protocol", "bob_inject", "0.04", K::Real},
        {"protocol", "charlie_inject", "0.04", K::Real},
        {"protocol", "bob_flip", "0.0", K::Real},
        {"protocol", "charlie_flip", "0.0", K::Real},
        {"protocol", "error_limit", "0.153", K::Real},
        {"protocol", "verify_threshold", "0.01", K::Real},
        {"protocol", "transcript", "yes", K::Text, {"yes", "no"}},

        {"attack", "eve_rate", "0.0", K::Real},
        {"attack", "eve_channel", "error_rates", K::Text, {"error_rates", "photonic"}},
        {"attack", "w_points", "11", K::Integer},
        {"attack", "rounds", "20000", K::Integer},
        {"attack", "inject", "0.01", K::Real},
        {"attack", "repudiation_taus", "0.05 0.1 0.2 0.5", K::Text},
        {"attack", "repudiation_rates", "0.02 0.05 0.1", K::Text},
        {"attack", "repudiation_rounds", "4000", K::Integer},
        {"attack", "forgery_rounds", "4000", K::Integer},
        {"attack", "forgery_tau", "1.0", K::Real},

        {"bounds", "message_bits", "1", K::Real},
        {"bounds", "r_min", "0.0", K::Real},
        {"bounds", "r_max", "0.5", K::Real},
        {"bounds", "points", "51", K::Integer},
        {"bounds", "threshold_r", "0.01", K::Real},

        {"hilbert", "eve_overlap_angle", "0.5", K::Real},

        {"twinfield", "pulses", "1e10", K::Real},
        {"twinfield", "attenuation_db_per_km", "0.3", K::Real},
        {"twinfield", "detector_efficiency", "0.5", K::Real},
        {"twinfield", "dark_count", "1e-7", K::Real},
        {"twinfield", "misalignment", "0.03", K::Real},
        {"twinfield", "failure_prob", "1e-12", K::Real},
        {"twinfield", "ec_efficiency", "1.1", K::Real},
        {"twinfield", "phase_zero_prob", "0.9", K::Real},
        {"twinfield", "decoy_fraction", "0.2", K::Real},
        {"twinfield", "no_send_fraction", "0.0", K::Real},
        {"twinfield", "signal_intensity", "0.15", K::Real},
        {"twinfield", "decoy_intensity", "0.1", K::Real},
        {"twinfield", "d_min", "0", K::Real},
        {"twinfield", "d_max", "250", K::Real},
        {"twinfield", "d_step", "5", K::Real},
        {"twinfield", "mode", "expected", K::Text, {"expected", "tagged"}},
    };
    return schema;
}

class Scenario {
public:
    /// All schema defaults.
    Scenario() {
        for (const auto& e : scenario_schema()) values_[{e.section, e.key}] = e.fallback;
    }

    static Scenario parse(std::istream& in, const std::string& source = "<config>") {
        Scenario s;
        std::string line;
        std::string section;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            const std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw SchemaError(source, number, "unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (!known_section(section)) throw SchemaError(source, number, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw SchemaError(source, number, "expected key = value");
            if (section.empty()) throw SchemaError(source, number, "key outside any section");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            try {
                s.set(section, key, value);
            } catch (const std::invalid_argument& e) {
                throw SchemaError(source, number, e.what());
            }
        }
        return s;
    }

    /// Assigns a value after checking the key and its type.
    void set(const std::string& section, const std::string& key, const std::string& value) {
        const SchemaEntry* e = find(section, key);
        if (!e) throw std::invalid_argument("unknown key " + section + "." + key);
        check(*e, value);
        values_[{section, key}] = value;
    }

    [[nodiscard]] const std::string& text(const std::string& section, const std::string& key) const {
        const auto it = values_.find({section, key});
        if (it == values_.end()) throw std::out_of_range("no key " + section + "." + key);
        return it->second;
    }
    [[nodiscard]] double real(const std::string& section, const std::string& key) const {
        return std::stod(text(section, key));
    }
    [[nodiscard]] std::uint64_t integer(const std::string& section, const std::string& key) const {
        return std::stoull(text(section, key));
    }
    [[nodiscard]] std::vector<double> reals(const std::string& section, const std::string& key) const {
        std::istringstream is(text(section, key));
        std::vector<double> out;
        std::string tok;
        while (is >> tok) out.push_back(std::stod(tok));
        return out;
    }

    /// Canonical text: schema order, every key present.
    [[nodiscard]] std::string resolved() const {
        std::ostringstream os;
        std::string section;
        for (const auto& e : scenario_schema()) {
            if (e.section != section) {
                if (!section.empty()) os << '\n';
                section = e.section;
                os << '[' << section << "]\n";
            }
            os << e.key << " = " << text(e.section, e.key) << '\n';
        }
        return os.str();
    }

    /// FNV-1a over the resolved text.
    [[nodiscard]] std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : resolved()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    std::map<std::pair<std::string, std::string>, std::string> values_;

    static const SchemaEntry* find(const std::string& section, const std::string& key) {
        for (const auto& e : scenario_schema()) {
            if (e.section == section && e.key == key) return &e;
        }
        return nullptr;
    }
    static bool known_section(const std::string& section) {
        for (const auto& e : scenario_schema()) {
            if (e.section == section) return true;
        }
        return false;
    }
    static void check(const SchemaEntry& e, const std::string& v) {
        const std::string where = e.section + "." + e.key;
        std::size_t used = 0;
        switch (e.kind) {
            case ValueKind::Real:
                try {
                    (void)std::stod(v, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used == 0 || used != v.size()) throw std::invalid_argument(where + " expects a number, got '" + v + "'");
                break;
            case ValueKind::Integer:
                if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
                    throw std::invalid_argument(where + " expects a non-negative integer, got '" + v + "'");
                }
                try {
                    (void)std::stoull(v);
                } catch (const std::exception&) {
                    throw std::invalid_argument(where + " is out of range");
                }
                break;
            case ValueKind::Text:
                if (!e.choices.empty()) {
                    bool ok = false;
                    for (const auto& c : e.choices) ok = ok || c == v;
                    if (!ok) throw std::invalid_argument(where + " has no option '" + v + "'");
                }
                break;
        }
    }
    static std::string strip_comment(const std::string& s) {
        const auto p = s.find_first_of("#;");
        return p == std::string::npos ? s : s.substr(0, p);
    }
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return {};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
};

}  // namespace cqds
