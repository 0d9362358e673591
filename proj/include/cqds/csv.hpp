#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace cqds {

/// 12 significant digits, the precision regression data is compared at.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

using CsvCell = std::variant<double, std::int64_t, std::string>;

class CsvWriter {
public:
    /// Writes `# key: value` comment lines, the embedded scenario (each line
    /// prefixed by "# "), then the column header.
    CsvWriter(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& meta,
              const std::string& scenario, const std::vector<std::string>& columns)
        : os_(os), width_(columns.size()) {
        for (const auto& [k, v] : meta) os_ << "# " << k << ": " << v << '\n';
        std::istringstream in(scenario);
        std::string line;
        while (std::getline(in, line)) os_ << "# " << line << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
        os_ << '\n';
    }

    void row(const std::vector<CsvCell>& cells) {
        if (cells.size() != width_) throw std::invalid_argument("row width does not match header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            std::visit(
                [this](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) os_ << format_number(v);
                    else os_ << v;
                },
                cells[i]);
        }
        os_ << '\n';
    }

private:
    std::ostream& os_;
    std::size_t width_;
};

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace cqds
