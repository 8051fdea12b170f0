#include "features.hpp"

#include "csv.hpp"
#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace a2v::features {

AssetType asset_type_from_string(const std::string& s) {
  if (s == "collab_wb") return AssetType::collab_wb;
  if (s == "asset") return AssetType::asset;
  if (s == "solo_wb") return AssetType::solo_wb;
  if (s == "curated") return AssetType::curated;
  throw std::invalid_argument("unknown asset type: '" + s + "'");
}

const char* asset_type_to_string(AssetType t) {
  switch (t) {
  case AssetType::collab_wb: return "collab_wb";
  case AssetType::asset: return "asset";
  case AssetType::solo_wb: return "solo_wb";
  case AssetType::curated: return "curated";
  }
  return "?";
}

void InstructorFeatures::validate() const {
  if (asset_id.empty()) throw std::invalid_argument("instructor features: empty asset_id");
  if (acad < 1 || acad > 5) throw std::invalid_argument("instructor features: acad not in 1..5");
  if (creativity < 1 || creativity > 5)
    throw std::invalid_argument("instructor features: creativity not in 1..5");
  if (title_len < 0 || desc_len < 0)
    throw std::invalid_argument("instructor features: negative length");
}

std::array<double, kInstructorWidth> encode_instructor(const InstructorFeatures& f) {
  f.validate();
  std::array<double, kInstructorWidth> row{};
  row[0] = f.acad;
  row[1] = f.creativity;
  row[2] = f.day_asgmt;
  row[3] = f.title_len;
  row[4] = f.desc_len;
  row[5 + static_cast<int>(f.type)] = 1.0;
  return row;
}

ZScoreStats zscore_fit(const Matrix& train) {
  if (train.rows == 0) throw std::invalid_argument("zscore_fit: empty training matrix");
  ZScoreStats stats;
  stats.means.assign(train.cols, 0.0);
  stats.stds.assign(train.cols, 0.0);
  for (std::size_t i = 0; i < train.rows; ++i)
    for (std::size_t j = 0; j < train.cols; ++j) stats.means[j] += train.at(i, j);
  for (double& m : stats.means) m /= static_cast<double>(train.rows);
  for (std::size_t i = 0; i < train.rows; ++i)
    for (std::size_t j = 0; j < train.cols; ++j) {
      double d = train.at(i, j) - stats.means[j];
      stats.stds[j] += d * d;
    }
  for (double& s : stats.stds) s = std::sqrt(s / static_cast<double>(train.rows));
  return stats;
}

Matrix zscore_apply(const Matrix& m, const ZScoreStats& stats) {
  if (m.cols != stats.means.size()) throw std::invalid_argument("zscore_apply: width mismatch");
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      out.at(i, j) = stats.stds[j] > 0 ? (m.at(i, j) - stats.means[j]) / stats.stds[j] : 0.0;
  return out;
}

std::vector<double> unit_normalize(std::span<const double> v) {
  double norm2 = 0;
  for (double x : v) norm2 += x * x;
  std::vector<double> out(v.begin(), v.end());
  if (norm2 > 0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : out) x *= inv;
  }
  return out;
}

std::vector<double> ensemble_concat(std::span<const double> v_context,
                                    std::span<const double> v_content) {
  std::vector<double> out;
  out.reserve(v_context.size() + v_content.size());
  out.insert(out.end(), v_context.begin(), v_context.end());
  out.insert(out.end(), v_content.begin(), v_content.end());
  return out;
}

Representation representation_from_string(const std::string& s) {
  if (s == "asset2vec") return Representation::asset2vec;
  if (s == "avg_content") return Representation::avg_content;
  if (s == "ensemble") return Representation::ensemble;
  if (s == "instructor") return Representation::instructor;
  throw std::invalid_argument("unknown representation: '" + s + "'");
}

const char* representation_to_string(Representation r) {
  switch (r) {
  case Representation::asset2vec: return "asset2vec";
  case Representation::avg_content: return "avg_content";
  case Representation::ensemble: return "ensemble";
  case Representation::instructor: return "instructor";
  }
  return "?";
}

RepresentationSet assemble(Representation name, const RepresentationSources& sources,
                           const std::vector<events::PopularityLabel>& labels) {
  bool needs_embedding = name == Representation::asset2vec || name == Representation::ensemble;
  bool needs_content = name == Representation::avg_content || name == Representation::ensemble;
  bool needs_instructor = name == Representation::instructor;
  if (needs_embedding && !sources.embedding)
    throw std::invalid_argument("assemble: embedding source required");
  if (needs_content && !sources.content)
    throw std::invalid_argument("assemble: content source required");
  if (needs_instructor && !sources.instructor)
    throw std::invalid_argument("assemble: instructor source required");

  std::vector<events::PopularityLabel> sorted = labels;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.asset_id < b.asset_id; });

  std::vector<std::string> missing;
  for (const auto& l : sorted) {
    if (needs_embedding && !sources.embedding->contains(l.asset_id)) missing.push_back(l.asset_id);
    else if (needs_content && !sources.content->contains(l.asset_id)) missing.push_back(l.asset_id);
    else if (needs_instructor && !sources.instructor->count(l.asset_id)) missing.push_back(l.asset_id);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "assemble: labeled assets without a " << representation_to_string(name)
        << " representation:";
    for (const auto& a : missing) msg << ' ' << a;
    throw NotFoundError(msg.str());
  }

  std::size_t width = 0;
  switch (name) {
  case Representation::asset2vec: width = sources.embedding->dim(); break;
  case Representation::avg_content: width = sources.content->dim(); break;
  case Representation::ensemble: width = sources.embedding->dim() + sources.content->dim(); break;
  case Representation::instructor: width = kInstructorWidth; break;
  }

  RepresentationSet set;
  set.name = name;
  set.matrix = Matrix(sorted.size(), width);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& id = sorted[i].asset_id;
    set.asset_ids.push_back(id);
    set.labels.push_back(static_cast<double>(sorted[i].popularity));
    double* row = set.matrix.row(i);
    switch (name) {
    case Representation::asset2vec: {
      auto v = unit_normalize(sources.embedding->vector_for(id));
      std::copy(v.begin(), v.end(), row);
      break;
    }
    case Representation::avg_content: {
      auto v = unit_normalize(sources.content->vector_for(id));
      std::copy(v.begin(), v.end(), row);
      break;
    }
    case Representation::ensemble: {
      auto v = ensemble_concat(unit_normalize(sources.embedding->vector_for(id)),
                               unit_normalize(sources.content->vector_for(id)));
      std::copy(v.begin(), v.end(), row);
      break;
    }
    case Representation::instructor: {
      auto v = encode_instructor(sources.instructor->at(id));
      std::copy(v.begin(), v.end(), row);
      break;
    }
    }
  }
  return set;
}

std::map<std::string, InstructorFeatures> parse_instructor(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) return {};
  const std::vector<std::string> expected = {"asset_id", "acad",     "creativity", "day_asgmt",
                                             "title_len", "desc_len", "type"};
  if (rows[0].fields != expected)
    throw ParseError("bad instructor header", rows[0].line);

  std::map<std::string, InstructorFeatures> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 7)
      throw ParseError("expected 7 fields, got " + std::to_string(row.fields.size()), row.line);
    InstructorFeatures f;
    f.asset_id = row.fields[0];
    f.acad = static_cast<int>(csv::parse_int(row.fields[1], row.line));
    f.creativity = static_cast<int>(csv::parse_int(row.fields[2], row.line));
    f.day_asgmt = static_cast<int>(csv::parse_int(row.fields[3], row.line));
    f.title_len = static_cast<int>(csv::parse_int(row.fields[4], row.line));
    f.desc_len = static_cast<int>(csv::parse_int(row.fields[5], row.line));
    try {
      f.type = asset_type_from_string(row.fields[6]);
      f.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), row.line);
    }
    out[f.asset_id] = f;
  }
  return out;
}

} // namespace a2v::features
