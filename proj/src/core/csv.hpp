#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace a2v::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0; // 1-based physical line where the record starts
};

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// newlines. Accepts both LF and CRLF line endings. Returns every record
// including the header row.
std::vector<Row> read(std::istream& in);

std::vector<Row> read_file(const std::string& path);

// Quotes a field only when it contains characters that require it.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

double parse_double(const std::string& s, std::size_t line);

long long parse_int(const std::string& s, std::size_t line);

} // namespace a2v::csv
