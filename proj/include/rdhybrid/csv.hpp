#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace rdhybrid {

const char* code_version();

// RFC-4180 writer. The header row comes first, followed by a comment line
// "# seed=..., solver=..., version=..." and then the data rows.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& columns, std::uint64_t seed, const std::string& solver);

    CsvWriter& operator<<(const std::string& field);
    CsvWriter& operator<<(const char* field) { return *this << std::string(field); }
    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(std::int64_t x);
    CsvWriter& operator<<(std::uint64_t x);
    CsvWriter& operator<<(int x) { return *this << static_cast<std::int64_t>(x); }
    // Ends the current row; throws std::logic_error if the field count is off.
    void end_row();

private:
    void field(const std::string& text);

    std::ostream& out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

std::string csv_escape(const std::string& s);
// Shortest round-trip representation; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);

}  // namespace rdhybrid
