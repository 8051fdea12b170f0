#pragma once

#include "matrix.hpp"

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace a2v {

// Named rows of a fixed-width real matrix: trained asset vectors, averaged
// content vectors. CSV form is `id,v0,...,v{d-1}` with shortest round-trip
// number formatting, so save followed by load is bit-exact.
struct VectorTable {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  Matrix vectors; // ids.size() x dim

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return vectors.cols; }

  bool contains(const std::string& id) const { return index.count(id) > 0; }

  std::span<const double> vector_for(const std::string& id) const;

  void add(const std::string& id, std::span<const double> v);

  static VectorTable with_dim(std::size_t dim);
};

void save_vector_table(std::ostream& out, const VectorTable& table);
VectorTable load_vector_table(std::istream& in);

} // namespace a2v
