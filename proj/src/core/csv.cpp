#include "csv.hpp"

#include "error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace a2v::csv {

std::vector<Row> read(std::istream& in) {
  std::vector<Row> rows;
  std::string field;
  Row row;
  row.line = 1;
  std::size_t line = 1;
  bool in_quotes = false;
  bool row_started = false;
  char c;

  auto end_field = [&] {
    row.fields.push_back(field);
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row = Row{};
    row.line = line;
    row_started = false;
  };

  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
    case '"':
      if (!field.empty())
        throw ParseError("unexpected quote inside unquoted field", row.line);
      in_quotes = true;
      row_started = true;
      break;
    case ',':
      end_field();
      row_started = true;
      break;
    case '\r':
      break; // handled by the following '\n'
    case '\n':
      ++line;
      if (row_started || !field.empty() || !row.fields.empty()) {
        end_row();
      } else {
        row.line = line; // skip blank line
      }
      break;
    default:
      field.push_back(c);
      row_started = true;
      break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", row.line);
  if (row_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

std::vector<Row> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return read(in);
}

std::string escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a number: '" + s + "'", line);
  return v;
}

long long parse_int(const std::string& s, std::size_t line) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not an integer: '" + s + "'", line);
  return v;
}

} // namespace a2v::csv
