#pragma once

// Measurement-matrix CSV exchange format:
//
//   p,k,re,im
//   1,1,<re>,<im>
//   1,2,<re>,<im>
//   ...
//
// 1-based indices, one entry per line, row-major (p outer, k inner). Values
// are written in shortest round-trip form.

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "pdoa/error.hpp"
#include "pdoa/protocol.hpp"

namespace pdoa {

class CsvFormatError : public InvalidArgument {
public:
    CsvFormatError(int line, const std::string& what)
        : InvalidArgument("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_field(std::string_view s, int line, const char* name) {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw CsvFormatError(line, std::string("cannot parse field '") + name + "' from \"" + std::string(s) + "\"");
    }
    return value;
}

}  // namespace detail

inline void write_matrix_csv(std::ostream& os, const ComplexMatrix& m) {
    os << "p,k,re,im\n";
    for (Eigen::Index p = 0; p < m.rows(); ++p) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            os << (p + 1) << ',' << (k + 1) << ',' << detail::format_double(m(p, k).real()) << ','
               << detail::format_double(m(p, k).imag()) << '\n';
        }
    }
}

/// Parses the CSV format above. Entries may appear in any order but every
/// (p, k) in the inferred P x N grid must appear exactly once.
inline ComplexMatrix read_matrix_csv(std::istream& is) {
    std::string line;
    int line_no = 0;

    if (!std::getline(is, line)) throw CsvFormatError(1, "empty input, expected header 'p,k,re,im'");
    ++line_no;
    if (detail::trim(line) != "p,k,re,im") {
        throw CsvFormatError(line_no, "expected header 'p,k,re,im'");
    }

    std::map<std::pair<int, int>, Complex> cells;
    int max_p = 0;
    int max_k = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_commas(line);
        if (fields.size() != 4) {
            throw CsvFormatError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        const int p = detail::parse_field<int>(fields[0], line_no, "p");
        const int k = detail::parse_field<int>(fields[1], line_no, "k");
        const double re = detail::parse_field<double>(fields[2], line_no, "re");
        const double im = detail::parse_field<double>(fields[3], line_no, "im");
        if (p < 1 || k < 1) throw CsvFormatError(line_no, "indices are 1-based");
        if (!cells.emplace(std::make_pair(p, k), Complex(re, im)).second) {
            throw CsvFormatError(line_no, "duplicate entry for (p,k)=(" + std::to_string(p) + "," +
                                              std::to_string(k) + ")");
        }
        max_p = std::max(max_p, p);
        max_k = std::max(max_k, k);
    }
    if (cells.empty()) throw CsvFormatError(line_no, "no matrix entries");
    if (cells.size() != static_cast<std::size_t>(max_p) * static_cast<std::size_t>(max_k)) {
        throw InvalidArgument("cannot infer matrix dimensions: " + std::to_string(cells.size()) +
                              " entries do not fill a " + std::to_string(max_p) + "x" + std::to_string(max_k) +
                              " grid");
    }
    ComplexMatrix m(max_p, max_k);
    for (const auto& [idx, v] : cells) m(idx.first - 1, idx.second - 1) = v;
    return m;
}

inline std::string matrix_to_csv(const ComplexMatrix& m) {
    std::ostringstream os;
    write_matrix_csv(os, m);
    return os.str();
}

inline ComplexMatrix matrix_from_csv(const std::string& text) {
    std::istringstream is(text);
    return read_matrix_csv(is);
}

}  // namespace pdoa
