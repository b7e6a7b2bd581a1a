#pragma once

// CSV and JSON sinks. Numbers are written in shortest round-trip form so
// identical results give byte-identical files.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include <json.hpp>

namespace ivsim::cli {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string format_number(std::uint64_t v) {
    char buf[24];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
        : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
        cells(header);
    }

    /// Row of preformatted cells.
    void cells(const std::vector<std::string>& values) {
        bool first = true;
        for (const auto& v : values) write_cell(v, first);
        out_ << '\n';
    }

    template <class... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((write_cell(cells, first)), ...);
        out_ << '\n';
    }

private:
    template <class T>
    void write_cell(const T& v, bool& first) {
        if (!first) out_ << ',';
        first = false;
        if constexpr (std::is_same_v<T, bool>) {
            out_ << (v ? "true" : "false");
        } else if constexpr (std::is_floating_point_v<T>) {
            out_ << format_number(static_cast<double>(v));
        } else if constexpr (std::is_integral_v<T>) {
            out_ << format_number(static_cast<std::uint64_t>(v));
        } else {
            out_ << std::string_view(v);
        }
    }

    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace ivsim::cli
