#include "event_log.hpp"

#include "csv.hpp"
#include "error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>

namespace a2v::events {

namespace {

constexpr const char* kEventsHeader[] = {"user_id", "asset_id", "event_type", "timestamp_ms"};

void check_header(const csv::Row& row, std::span<const char* const> expected) {
  if (row.fields.size() != expected.size())
    throw ParseError("bad header: expected " + std::to_string(expected.size()) + " columns",
                     row.line);
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (row.fields[i] != expected[i])
      throw ParseError(std::string("bad header: expected column '") + expected[i] + "', got '" +
                           row.fields[i] + "'",
                       row.line);
}

void require_assets(const std::vector<EventRecord>& events, const char* op) {
  for (const auto& e : events)
    if (!e.asset_id)
      throw std::invalid_argument(std::string(op) + ": event without asset_id");
}

} // namespace

std::vector<EventRecord> parse_events(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) return {};
  check_header(rows[0], kEventsHeader);

  std::vector<EventRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 4)
      throw ParseError("expected 4 fields, got " + std::to_string(row.fields.size()), row.line);
    EventRecord e;
    e.user_id = row.fields[0];
    if (e.user_id.empty()) throw ParseError("empty user_id", row.line);
    if (!row.fields[1].empty()) e.asset_id = row.fields[1];
    e.event_type = row.fields[2];
    e.timestamp_ms = csv::parse_int(row.fields[3], row.line);
    if (e.timestamp_ms < 0) throw ParseError("negative timestamp", row.line);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EventRecord> filter_asset_events(const std::vector<EventRecord>& events,
                                             std::int64_t course_start_ms,
                                             std::int64_t course_end_ms) {
  if (course_start_ms > course_end_ms)
    throw std::invalid_argument("filter_asset_events: course_start > course_end");
  std::vector<EventRecord> out;
  for (const auto& e : events)
    if (e.asset_id && e.timestamp_ms >= course_start_ms && e.timestamp_ms <= course_end_ms)
      out.push_back(e);
  return out;
}

std::vector<EventRecord> remove_ghost_assets(const std::vector<EventRecord>& events,
                                             long min_events) {
  if (min_events < 1) throw std::invalid_argument("remove_ghost_assets: min_events < 1");
  require_assets(events, "remove_ghost_assets");

  std::unordered_map<std::string, long> counts;
  for (const auto& e : events) ++counts[*e.asset_id];

  std::vector<EventRecord> out;
  for (const auto& e : events)
    if (counts[*e.asset_id] >= min_events) out.push_back(e);
  return out;
}

std::vector<AssetSequence> build_sequences(const std::vector<EventRecord>& events) {
  require_assets(events, "build_sequences");

  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<std::size_t>> per_user;
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto [it, inserted] = per_user.try_emplace(events[i].user_id);
    if (inserted) user_order.push_back(events[i].user_id);
    it->second.push_back(i);
  }

  std::vector<AssetSequence> out;
  out.reserve(user_order.size());
  for (const auto& user : user_order) {
    auto& idx = per_user[user];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp_ms < events[b].timestamp_ms;
    });
    AssetSequence seq;
    seq.user_id = user;
    for (std::size_t i : idx) {
      const auto& asset = *events[i].asset_id;
      if (seq.assets.empty() || seq.assets.back() != asset) seq.assets.push_back(asset);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<PopularityLabel>
compute_popularity(const std::vector<EventRecord>& events,
                   const std::map<std::string, std::string>& creators) {
  require_assets(events, "compute_popularity");

  std::map<std::string, std::set<std::string>> users_by_asset;
  for (const auto& e : events) users_by_asset[*e.asset_id].insert(e.user_id);

  std::vector<std::string> missing;
  for (const auto& [asset, _] : users_by_asset)
    if (!creators.count(asset)) missing.push_back(asset);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "compute_popularity: assets missing from creators map:";
    for (const auto& a : missing) msg << ' ' << a;
    throw NotFoundError(msg.str());
  }

  std::vector<PopularityLabel> out;
  out.reserve(users_by_asset.size());
  for (auto& [asset, users] : users_by_asset) {
    users.erase(creators.at(asset));
    out.push_back({asset, static_cast<long>(users.size())});
  }
  return out; // std::map iteration already sorts by asset id
}

std::map<std::string, std::string> parse_creators(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) return {};
  static constexpr const char* header[] = {"asset_id", "creator_user_id"};
  check_header(rows[0], header);

  std::map<std::string, std::string> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2)
      throw ParseError("expected 2 fields, got " + std::to_string(row.fields.size()), row.line);
    if (row.fields[0].empty()) throw ParseError("empty asset_id", row.line);
    if (row.fields[1].empty()) throw ParseError("empty creator_user_id", row.line);
    out[row.fields[0]] = row.fields[1];
  }
  return out;
}

void write_labels(std::ostream& out, const std::vector<PopularityLabel>& labels) {
  out << "asset_id,popularity\n";
  for (const auto& l : labels) csv::write_row(out, {l.asset_id, std::to_string(l.popularity)});
}

std::vector<PopularityLabel> parse_labels(std::istream& in) {
  auto rows = csv::read(in);
  if (rows.empty()) return {};
  static constexpr const char* header[] = {"asset_id", "popularity"};
  check_header(rows[0], header);

  std::vector<PopularityLabel> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2)
      throw ParseError("expected 2 fields, got " + std::to_string(row.fields.size()), row.line);
    long pop = csv::parse_int(row.fields[1], row.line);
    if (pop < 0) throw ParseError("negative popularity", row.line);
    out.push_back({row.fields[0], pop});
  }
  return out;
}

} // namespace a2v::events
