#pragma once

#include "vector_table.hpp"

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace a2v::content {

// Pretrained token vectors, e.g. a GloVe text file.
struct WordVectorTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

struct ContentDocument {
  std::string asset_id;
  std::string title;
  std::string description;
};

// One entry per line: token followed by dim floats, space separated. A first
// line of exactly two integers is treated as a count/dim header and skipped.
// Duplicate tokens keep the last occurrence.
WordVectorTable load_word_vectors(std::istream& in);

// Lowercases title + " " + description and splits on maximal runs of
// characters that are not ASCII letters, digits or '#'. Hashtags keep their
// '#'.
std::vector<std::string> tokenize(const std::string& title, const std::string& description);

// Average of the vectors of in-table tokens, duplicates counted each time;
// zero vector when nothing matches.
std::vector<double> embed_content(const ContentDocument& doc, const WordVectorTable& table);

// Content CSV: header `asset_id,title,description`.
std::vector<ContentDocument> parse_content(std::istream& in);

// Averaged vector per document, keyed by asset id.
VectorTable embed_documents(const std::vector<ContentDocument>& docs,
                            const WordVectorTable& table);

} // namespace a2v::content
