#include "rdhybrid/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#ifndef RDHYBRID_VERSION
#define RDHYBRID_VERSION "unknown"
#endif

namespace rdhybrid {

const char* code_version() { return RDHYBRID_VERSION; }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& columns, std::uint64_t seed,
                     const std::string& solver)
    : out_(out), columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << csv_escape(columns[i]);
    out_ << "\r\n# seed=" << seed << ", solver=" << solver << ", version=" << code_version() << "\r\n";
}

void CsvWriter::field(const std::string& text) {
    if (filled_ == columns_) throw std::logic_error("csv row has too many fields");
    out_ << (filled_ ? "," : "") << text;
    ++filled_;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    field(csv_escape(s));
    return *this;
}

CsvWriter& CsvWriter::operator<<(double x) {
    field(format_double(x));
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t x) {
    field(std::to_string(x));
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::uint64_t x) {
    field(std::to_string(x));
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_) throw std::logic_error("csv row has too few fields");
    out_ << "\r\n";
    filled_ = 0;
}

}  // namespace rdhybrid
