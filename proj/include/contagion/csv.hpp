#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "contagion/errors.hpp"

namespace contagion {

// Plain comma-separated tables: no quoting, no embedded commas. That is
// the documented shape of every input and output file here.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back("");
    return out;
}

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw ParseError("empty CSV input");
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f.is_open()) throw ParseError("cannot open file: " + path);
    return read_csv(f);
}

inline double parse_double(const std::string& cell, const std::string& context) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw ParseError("trailing characters in number '" + cell + "' in " + context);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("unparsable number '" + cell + "' in " + context);
    }
}

// Round-trip-safe general formatting for data dumps.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

// Fixed-decimal formatting for report tables.
inline std::string format_fixed(double v, int decimals) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_.is_open()) throw Error("cannot open output file: " + path);
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace contagion
