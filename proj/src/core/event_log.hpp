#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace a2v::events {

// One raw log entry: who did what, when, and on which asset (if any).
struct EventRecord {
  std::string user_id;
  std::optional<std::string> asset_id;
  std::string event_type;
  std::int64_t timestamp_ms = 0;
};

// A user's asset visits in time order, consecutive duplicates collapsed.
struct AssetSequence {
  std::string user_id;
  std::vector<std::string> assets;
};

struct PopularityLabel {
  std::string asset_id;
  long popularity = 0; // distinct non-creator users
};

// Parses the events CSV: header `user_id,asset_id,event_type,timestamp_ms`,
// empty asset_id field means no associated asset. Throws ParseError with the
// offending line on malformed rows; an empty stream yields an empty list.
std::vector<EventRecord> parse_events(std::istream& in);

// Keeps asset-associated events inside [course_start, course_end], both ends
// inclusive; order preserved.
std::vector<EventRecord> filter_asset_events(const std::vector<EventRecord>& events,
                                             std::int64_t course_start_ms,
                                             std::int64_t course_end_ms);

// Drops events of assets with fewer than min_events events overall.
std::vector<EventRecord> remove_ghost_assets(const std::vector<EventRecord>& events,
                                             long min_events = 3);

// One sequence per user, assets sorted by (timestamp, input order) with
// consecutive duplicate asset ids collapsed. Users appear in order of first
// occurrence in the event list.
std::vector<AssetSequence> build_sequences(const std::vector<EventRecord>& events);

// Popularity = number of distinct users interacting with the asset, not
// counting its creator. Labels come back sorted by asset id. Assets missing
// from the creators map are reported in one error.
std::vector<PopularityLabel>
compute_popularity(const std::vector<EventRecord>& events,
                   const std::map<std::string, std::string>& creators);

// Creators CSV: header `asset_id,creator_user_id`.
std::map<std::string, std::string> parse_creators(std::istream& in);

void write_labels(std::ostream& out, const std::vector<PopularityLabel>& labels);
std::vector<PopularityLabel> parse_labels(std::istream& in);

} // namespace a2v::events
