#include <doctest.h>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/event_log.hpp"
#include "core/rng.hpp"

#include <map>
#include <set>
#include <sstream>

using namespace a2v;
using namespace a2v::events;

namespace {

std::vector<EventRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

const char* kHeader = "user_id,asset_id,event_type,timestamp_ms\n";

EventRecord ev(const std::string& user, const std::string& asset, std::int64_t ts,
               const std::string& type = "view") {
  EventRecord e;
  e.user_id = user;
  if (!asset.empty()) e.asset_id = asset;
  e.event_type = type;
  e.timestamp_ms = ts;
  return e;
}

} // namespace

TEST_CASE("csv reader handles quoting and line numbers") {
  std::istringstream in("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",2\n");
  auto rows = csv::read(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].fields[0] == "x,y");
  CHECK(rows[1].fields[1] == "he said \"hi\"");
  CHECK(rows[2].fields[0] == "multi\nline");
  CHECK(rows[2].line == 3);
}

TEST_CASE("csv escape round-trips through the reader") {
  Rng rng(99);
  const std::string alphabet = "ab,\"\n\r x#";
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> fields;
    for (int f = 0; f < 3; ++f) {
      std::string s;
      std::size_t len = rng.below(8);
      for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
      fields.push_back(s);
    }
    std::ostringstream out;
    csv::write_row(out, fields);
    std::istringstream in(out.str());
    auto rows = csv::read(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].fields == fields);
  }
}

TEST_CASE("parse_events basics") {
  auto events = parse(std::string(kHeader) + "u1,a1,view,1000\n");
  REQUIRE(events.size() == 1);
  CHECK(events[0].user_id == "u1");
  CHECK(*events[0].asset_id == "a1");
  CHECK(events[0].event_type == "view");
  CHECK(events[0].timestamp_ms == 1000);
}

TEST_CASE("parse_events: empty asset field means no asset") {
  auto events = parse(std::string(kHeader) + "u1,,login,1000\n");
  REQUIRE(events.size() == 1);
  CHECK(!events[0].asset_id.has_value());
}

TEST_CASE("parse_events errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "u1,a1,view,notatime\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "u1,a1,view,1\nu2,a2,view\n"),
                       doctest::Contains("line 3"), ParseError);
  CHECK_THROWS_AS(parse(std::string(kHeader) + "u1,a1,view,-5\n"), ParseError);
  CHECK_THROWS_AS(parse(std::string(kHeader) + ",a1,view,5\n"), ParseError);
  CHECK_THROWS_AS(parse("wrong,header\n"), ParseError);
}

TEST_CASE("parse_events: empty input gives empty list") {
  CHECK(parse("").empty());
}

TEST_CASE("filter_asset_events keeps in-window asset events in order") {
  std::vector<EventRecord> events = {ev("u1", "", 100), ev("u1", "a1", 100),
                                     ev("u2", "a2", 150), ev("u1", "a3", 200),
                                     ev("u2", "a4", 999)};
  auto kept = filter_asset_events(events, 100, 200);
  REQUIRE(kept.size() == 3);
  CHECK(*kept[0].asset_id == "a1");
  CHECK(*kept[1].asset_id == "a2");
  CHECK(*kept[2].asset_id == "a3");

  SUBCASE("no asset events") {
    std::vector<EventRecord> none = {ev("u1", "", 100), ev("u2", "", 150)};
    CHECK(filter_asset_events(none, 0, 1000).empty());
  }
  SUBCASE("window endpoints are inclusive") {
    auto edge = filter_asset_events(events, 100, 100);
    REQUIRE(edge.size() == 1);
    CHECK(*edge[0].asset_id == "a1");
  }
  SUBCASE("idempotent") {
    auto twice = filter_asset_events(kept, 100, 200);
    CHECK(twice.size() == kept.size());
  }
  SUBCASE("bad window") { CHECK_THROWS_AS(filter_asset_events(events, 5, 4), std::invalid_argument); }
}

TEST_CASE("remove_ghost_assets drops under-interacted assets") {
  std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u2", "a1", 2), ev("u1", "a2", 3),
                                     ev("u3", "a1", 4), ev("u2", "a2", 5)};
  auto kept = remove_ghost_assets(events, 3);
  REQUIRE(kept.size() == 3);
  for (const auto& e : kept) CHECK(*e.asset_id == "a1");

  SUBCASE("threshold 1 is the identity") {
    CHECK(remove_ghost_assets(events, 1).size() == events.size());
  }
  SUBCASE("threshold below 1 is an error") {
    CHECK_THROWS_AS(remove_ghost_assets(events, 0), std::invalid_argument);
  }
  SUBCASE("idempotent") {
    auto twice = remove_ghost_assets(kept, 3);
    CHECK(twice.size() == kept.size());
  }
}

TEST_CASE("remove_ghost_assets matches a brute-force counting pass") {
  Rng rng(42);
  std::vector<EventRecord> events;
  for (int i = 0; i < 200; ++i)
    events.push_back(ev("u" + std::to_string(rng.below(8)),
                        "a" + std::to_string(rng.below(10)), i));
  for (long threshold : {1L, 2L, 3L, 5L, 50L}) {
    std::map<std::string, long> counts;
    for (const auto& e : events) ++counts[*e.asset_id];
    std::vector<EventRecord> expected;
    for (const auto& e : events)
      if (counts[*e.asset_id] >= threshold) expected.push_back(e);

    auto got = remove_ghost_assets(events, threshold);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].user_id == expected[i].user_id);
      CHECK(*got[i].asset_id == *expected[i].asset_id);
    }
    // never drops an asset at or above threshold, never increases counts
    std::map<std::string, long> kept_counts;
    for (const auto& e : got) ++kept_counts[*e.asset_id];
    for (const auto& [asset, c] : counts) {
      if (c >= threshold) CHECK(kept_counts[asset] == c);
      else CHECK(kept_counts.count(asset) == 0);
    }
  }
}

TEST_CASE("build_sequences orders by time and collapses consecutive repeats") {
  SUBCASE("basic ordering") {
    std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u1", "a2", 2), ev("u1", "a1", 3)};
    auto seqs = build_sequences(events);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].assets == std::vector<std::string>{"a1", "a2", "a1"});
  }
  SUBCASE("consecutive duplicates collapse") {
    std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u1", "a1", 2), ev("u1", "a2", 3)};
    auto seqs = build_sequences(events);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].assets == std::vector<std::string>{"a1", "a2"});
  }
  SUBCASE("users never merge") {
    std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u2", "a2", 2), ev("u1", "a3", 3)};
    auto seqs = build_sequences(events);
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].user_id == "u1");
    CHECK(seqs[0].assets == std::vector<std::string>{"a1", "a3"});
    CHECK(seqs[1].assets == std::vector<std::string>{"a2"});
  }
  SUBCASE("equal timestamps keep input order") {
    std::vector<EventRecord> events = {ev("u1", "a2", 5), ev("u1", "a1", 5), ev("u1", "a3", 5)};
    auto seqs = build_sequences(events);
    CHECK(seqs[0].assets == std::vector<std::string>{"a2", "a1", "a3"});
  }
  SUBCASE("events out of time order get sorted") {
    std::vector<EventRecord> events = {ev("u1", "a3", 30), ev("u1", "a1", 10), ev("u1", "a2", 20)};
    auto seqs = build_sequences(events);
    CHECK(seqs[0].assets == std::vector<std::string>{"a1", "a2", "a3"});
  }
}

TEST_CASE("sequence lengths before collapse account for every event") {
  Rng rng(7);
  std::vector<EventRecord> events;
  for (int i = 0; i < 300; ++i)
    events.push_back(ev("u" + std::to_string(rng.below(5)),
                        "a" + std::to_string(rng.below(12)), rng.below(1000)));
  // count collapsed duplicates independently
  auto seqs = build_sequences(events);
  std::size_t total = 0;
  for (const auto& s : seqs) total += s.assets.size();
  std::map<std::string, std::vector<std::pair<std::int64_t, std::size_t>>> per_user;
  for (std::size_t i = 0; i < events.size(); ++i)
    per_user[events[i].user_id].push_back({events[i].timestamp_ms, i});
  std::size_t collapsed = 0;
  for (auto& [user, items] : per_user) {
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < items.size(); ++i)
      if (*events[items[i].second].asset_id == *events[items[i - 1].second].asset_id)
        ++collapsed;
  }
  CHECK(total + collapsed == events.size());
}

TEST_CASE("compute_popularity counts distinct non-creator users") {
  std::map<std::string, std::string> creators = {{"a1", "u1"}};
  SUBCASE("repeat interactions count once") {
    std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u2", "a1", 2), ev("u3", "a1", 3),
                                       ev("u2", "a1", 4)};
    auto labels = compute_popularity(events, creators);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].popularity == 2);
  }
  SUBCASE("creator-only asset has popularity 0") {
    std::vector<EventRecord> events = {ev("u1", "a1", 1), ev("u1", "a1", 2)};
    CHECK(compute_popularity(events, creators)[0].popularity == 0);
  }
  SUBCASE("missing creator is reported") {
    std::vector<EventRecord> events = {ev("u2", "a9", 1)};
    CHECK_THROWS_WITH_AS(compute_popularity(events, creators), doctest::Contains("a9"),
                         NotFoundError);
  }
}

TEST_CASE("compute_popularity matches a set-based oracle and ignores event order") {
  Rng rng(11);
  std::vector<EventRecord> events;
  std::map<std::string, std::string> creators;
  for (int a = 0; a < 20; ++a)
    creators["a" + std::to_string(a)] = "u" + std::to_string(rng.below(6));
  for (int i = 0; i < 400; ++i)
    events.push_back(ev("u" + std::to_string(rng.below(6)),
                        "a" + std::to_string(rng.below(20)), i));

  std::map<std::string, std::set<std::string>> oracle;
  for (const auto& e : events)
    if (e.user_id != creators[*e.asset_id]) oracle[*e.asset_id].insert(e.user_id);

  auto labels = compute_popularity(events, creators);
  for (const auto& l : labels) CHECK(l.popularity == static_cast<long>(oracle[l.asset_id].size()));

  // permutation invariance
  std::vector<EventRecord> shuffled = events;
  rng.shuffle(shuffled);
  auto labels2 = compute_popularity(shuffled, creators);
  REQUIRE(labels.size() == labels2.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(labels[i].asset_id == labels2[i].asset_id);
    CHECK(labels[i].popularity == labels2[i].popularity);
  }
}

TEST_CASE("labels CSV round-trips") {
  std::vector<PopularityLabel> labels = {{"a1", 3}, {"a2", 0}};
  std::ostringstream out;
  write_labels(out, labels);
  std::istringstream in(out.str());
  auto back = parse_labels(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].asset_id == "a1");
  CHECK(back[0].popularity == 3);
  CHECK(back[1].popularity == 0);
}
