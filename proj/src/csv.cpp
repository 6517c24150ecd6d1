#include "qmeta/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qmeta/errors.hpp"

namespace qmeta {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::sep() {
    if (col_ == width_) throw InvalidArgument("CsvWriter: too many fields in row");
    if (col_++) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double x) {
    sep();
    out_ << format_double(x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    if (s.find_first_of(",\"\n") != std::string::npos) throw InvalidArgument("CsvWriter: field needs quoting: " + s);
    sep();
    out_ << s;
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long n) {
    sep();
    out_ << n;
    return *this;
}

void CsvWriter::end_row() {
    if (col_ != width_) throw InvalidArgument("CsvWriter: row has too few fields");
    out_ << '\n';
    col_ = 0;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("CSV has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    const std::string& s = rows.at(row).at(column(name));
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("column '" + name + "' holds a non-numeric value '" + s + "'");
    }
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty CSV");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw SchemaError("CSV row width differs from header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return read_csv(in);
}

}  // namespace qmeta
