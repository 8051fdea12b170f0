#include "vector_table.hpp"

#include "csv.hpp"
#include "error.hpp"

#include <ostream>

namespace a2v {

std::span<const double> VectorTable::vector_for(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw NotFoundError("no vector for id: " + id);
  return vectors.row_span(it->second);
}

void VectorTable::add(const std::string& id, std::span<const double> v) {
  if (v.size() != vectors.cols)
    throw std::invalid_argument("VectorTable::add: dimension mismatch");
  if (!index.emplace(id, ids.size()).second)
    throw std::invalid_argument("VectorTable::add: duplicate id " + id);
  ids.push_back(id);
  vectors.data.insert(vectors.data.end(), v.begin(), v.end());
  ++vectors.rows;
}

VectorTable VectorTable::with_dim(std::size_t dim) {
  VectorTable t;
  t.vectors.cols = dim;
  return t;
}

void save_vector_table(std::ostream& out, const VectorTable& table) {
  out << "asset_id";
  for (std::size_t j = 0; j < table.dim(); ++j) out << ",v" << j;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::vector<std::string> fields;
    fields.reserve(table.dim() + 1);
    fields.push_back(table.ids[i]);
    for (double v : table.vectors.row_span(i)) fields.push_back(csv::format_double(v));
    csv::write_row(out, fields);
  }
}

VectorTable load_vector_table(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) throw ParseError("empty vector table");
  const auto& header = rows[0];
  if (header.fields.size() < 2 || header.fields[0] != "asset_id")
    throw ParseError("bad vector table header", header.line);
  std::size_t dim = header.fields.size() - 1;

  VectorTable table = VectorTable::with_dim(dim);
  std::vector<double> buf(dim);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(row.fields.size()),
                       row.line);
    for (std::size_t j = 0; j < dim; ++j) buf[j] = csv::parse_double(row.fields[j + 1], row.line);
    table.add(row.fields[0], buf);
  }
  return table;
}

} // namespace a2v
