#pragma once

#include "event_log.hpp"
#include "matrix.hpp"
#include "vector_table.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace a2v::features {

enum class AssetType { collab_wb, asset, solo_wb, curated };

AssetType asset_type_from_string(const std::string& s);
const char* asset_type_to_string(AssetType t);

struct InstructorFeatures {
  std::string asset_id;
  int acad = 1;       // 1..5
  int creativity = 1; // 1..5
  int day_asgmt = 0;  // days, may be negative
  int title_len = 0;
  int desc_len = 0;
  AssetType type = AssetType::asset;

  void validate() const;
};

// [acad, creativity, day_asgmt, title_len, desc_len, onehot(type)]
constexpr std::size_t kInstructorWidth = 9;
std::array<double, kInstructorWidth> encode_instructor(const InstructorFeatures& f);

struct ZScoreStats {
  std::vector<double> means;
  std::vector<double> stds; // population formula
};

ZScoreStats zscore_fit(const Matrix& train);
Matrix zscore_apply(const Matrix& m, const ZScoreStats& stats); // std 0 columns map to 0

std::vector<double> unit_normalize(std::span<const double> v);

std::vector<double> ensemble_concat(std::span<const double> v_context,
                                    std::span<const double> v_content);

enum class Representation { asset2vec, avg_content, ensemble, instructor };

Representation representation_from_string(const std::string& s);
const char* representation_to_string(Representation r);

// A named feature matrix over the labeled assets, rows sorted by asset id.
// asset2vec / avg_content rows are unit-normalized vectors; ensemble is their
// concatenation; instructor rows are raw encodings (z-scored per CV fold).
struct RepresentationSet {
  Representation name = Representation::asset2vec;
  std::vector<std::string> asset_ids;
  Matrix matrix;
  std::vector<double> labels;
};

struct RepresentationSources {
  const VectorTable* embedding = nullptr;                       // asset2vec / ensemble
  const VectorTable* content = nullptr;                         // avg_content / ensemble
  const std::map<std::string, InstructorFeatures>* instructor = nullptr;
};

RepresentationSet assemble(Representation name, const RepresentationSources& sources,
                           const std::vector<events::PopularityLabel>& labels);

// Instructor CSV: `asset_id,acad,creativity,day_asgmt,title_len,desc_len,type`.
std::map<std::string, InstructorFeatures> parse_instructor(std::istream& in);

} // namespace a2v::features
