#include "content_embed.hpp"

#include "csv.hpp"
#include "error.hpp"

#include <cctype>
#include <charconv>
#include <istream>
#include <sstream>

namespace a2v::content {

namespace {

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '#';
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  long long v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace

WordVectorTable load_word_vectors(std::istream& in) {
  WordVectorTable table;
  std::string line;
  std::size_t lineno = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (lineno == 1 && parts.size() == 2 && is_integer(parts[0]) && is_integer(parts[1]))
      continue; // count/dim header
    if (parts.size() < 2)
      throw ParseError("word vector line needs a token and at least one value", lineno);
    std::vector<double> vec;
    vec.reserve(parts.size() - 1);
    for (std::size_t i = 1; i < parts.size(); ++i)
      vec.push_back(csv::parse_double(parts[i], lineno));
    if (first_data_line) {
      table.dim = vec.size();
      first_data_line = false;
    } else if (vec.size() != table.dim) {
      throw ParseError("inconsistent vector dimension: expected " + std::to_string(table.dim) +
                           ", got " + std::to_string(vec.size()),
                       lineno);
    }
    table.vectors[parts[0]] = std::move(vec); // last occurrence wins
  }
  if (table.vectors.empty()) throw ParseError("word vector file has no entries");
  return table;
}

std::vector<std::string> tokenize(const std::string& title, const std::string& description) {
  std::string text = title + " " + description;
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<double> embed_content(const ContentDocument& doc, const WordVectorTable& table) {
  if (table.vectors.empty()) throw std::invalid_argument("embed_content: empty table");
  std::vector<double> sum(table.dim, 0.0);
  std::size_t matched = 0;
  for (const auto& tok : tokenize(doc.title, doc.description)) {
    if (const auto* vec = table.find(tok)) {
      for (std::size_t d = 0; d < table.dim; ++d) sum[d] += (*vec)[d];
      ++matched;
    }
  }
  if (matched > 0)
    for (double& v : sum) v /= static_cast<double>(matched);
  return sum;
}

std::vector<ContentDocument> parse_content(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) return {};
  if (rows[0].fields != std::vector<std::string>{"asset_id", "title", "description"})
    throw ParseError("bad content header: expected asset_id,title,description", rows[0].line);

  std::vector<ContentDocument> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 3)
      throw ParseError("expected 3 fields, got " + std::to_string(row.fields.size()), row.line);
    if (row.fields[0].empty()) throw ParseError("empty asset_id", row.line);
    out.push_back({row.fields[0], row.fields[1], row.fields[2]});
  }
  return out;
}

VectorTable embed_documents(const std::vector<ContentDocument>& docs,
                            const WordVectorTable& table) {
  VectorTable out = VectorTable::with_dim(table.dim);
  for (const auto& doc : docs) out.add(doc.asset_id, embed_content(doc, table));
  return out;
}

} // namespace a2v::content
