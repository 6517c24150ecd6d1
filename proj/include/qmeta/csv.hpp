#pragma once

// Minimal CSV writing with round-trippable number formatting.

#include <ostream>
#include <string>
#include <vector>

namespace qmeta {

/// %.17g; the same bytes for the same double on every run.
std::string format_double(double x);

class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(long long n);
    CsvWriter& operator<<(std::size_t n) { return *this << static_cast<long long>(n); }
    CsvWriter& operator<<(int n) { return *this << static_cast<long long>(n); }
    /// Terminates the current row; throws if the row has the wrong width.
    void end_row();

private:
    void sep();
    std::ostream& out_;
    std::size_t width_;
    std::size_t col_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  // throws SchemaError
    double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace qmeta
