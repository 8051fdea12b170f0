#include "synth.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace a2v::synth {

using nlohmann::json;

void SynthConfig::validate() const {
  if (n_students < 2) throw std::invalid_argument("synth: need at least 2 students");
  if (n_assets < 1) throw std::invalid_argument("synth: n_assets < 1");
  if (n_blocks < 1 || n_assets % n_blocks != 0)
    throw std::invalid_argument("synth: n_blocks must divide n_assets");
  if (n_ghosts < 0) throw std::invalid_argument("synth: n_ghosts < 0");
  if (block_affinity < 0.5 || block_affinity > 1.0)
    throw std::invalid_argument("synth: block_affinity outside [0.5, 1]");
  if (content_topic_mix < 0 || content_topic_mix > 1)
    throw std::invalid_argument("synth: content_topic_mix outside [0, 1]");
  if (vocab_size < 2 * n_blocks) throw std::invalid_argument("synth: vocabulary too small");
  if (word_vec_dim < 1) throw std::invalid_argument("synth: word_vec_dim < 1");
  if (course_start_ms < 0 || course_start_ms > course_end_ms)
    throw std::invalid_argument("synth: bad course window");
  if (extra_interactions < 0) throw std::invalid_argument("synth: extra_interactions < 0");
}

std::vector<double> SynthConfig::effective_weights() const {
  if (!pop_weights.empty()) return pop_weights;
  return {0.8, -0.6, 0.4, -0.2};
}

namespace {

std::string pad_id(const char* prefix, int i, int width) {
  std::string num = std::to_string(i);
  std::string out = prefix;
  out.append(width > static_cast<int>(num.size()) ? width - num.size() : 0, '0');
  out += num;
  return out;
}

struct RawEvent {
  std::string user_id;
  std::string asset_id; // empty = none
  std::string event_type;
  std::int64_t timestamp_ms;
};

// One user's required visits, consumed by a block-affine walk.
class WalkPool {
public:
  WalkPool(int n_blocks) : by_block_(n_blocks) {}

  void add(int asset, int block, int count) {
    by_block_[block].push_back({asset, count});
    total_ += count;
  }

  bool empty() const { return total_ == 0; }
  int total() const { return total_; }

  // next visit: stay in `block` with probability affinity when possible,
  // avoiding an immediate repeat of `current_asset` when there is a choice
  std::pair<int, int> next(Rng& rng, int current_asset, int block, double affinity) {
    bool stay = block >= 0 && !by_block_[block].empty() && rng.uniform() < affinity;
    int chosen_block;
    if (stay) {
      chosen_block = block;
    } else {
      // uniform over remaining visits outside the current block
      int outside = total_ - block_total(block);
      if (outside == 0) {
        chosen_block = block; // only in-block visits left
      } else {
        std::uint64_t pick = rng.below(static_cast<std::uint64_t>(outside));
        chosen_block = -1;
        for (int b = 0; b < static_cast<int>(by_block_.size()); ++b) {
          if (b == block) continue;
          int size = block_total(b);
          if (pick < static_cast<std::uint64_t>(size)) {
            chosen_block = b;
            break;
          }
          pick -= size;
        }
      }
    }
    auto& bucket = by_block_[chosen_block];
    std::size_t slot = rng.below(bucket.size());
    if (bucket[slot].first == current_asset && bucket.size() > 1)
      slot = (slot + 1 + rng.below(bucket.size() - 1)) % bucket.size();
    int asset = bucket[slot].first;
    if (--bucket[slot].second == 0) {
      bucket[slot] = bucket.back();
      bucket.pop_back();
    }
    --total_;
    return {asset, chosen_block};
  }

private:
  int block_total(int b) const {
    if (b < 0) return 0;
    int s = 0;
    for (const auto& [asset, count] : by_block_[b]) s += count;
    return s;
  }

  std::vector<std::vector<std::pair<int, int>>> by_block_; // (asset, remaining)
  int total_ = 0;
};

} // namespace

void generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  Rng rng(config.seed);

  int n_total_assets = config.n_assets + config.n_ghosts;
  auto weights = config.effective_weights();
  std::size_t latent_dim = weights.size();

  std::vector<std::string> students(config.n_students);
  for (int u = 0; u < config.n_students; ++u) students[u] = pad_id("u", u, 4);
  std::vector<std::string> assets(n_total_assets);
  for (int a = 0; a < n_total_assets; ++a) assets[a] = pad_id("a", a, 5);

  std::vector<int> block_of(n_total_assets);
  for (int a = 0; a < n_total_assets; ++a) block_of[a] = a % config.n_blocks;

  // per-block latent centers; each asset jitters around its block's center
  Matrix centers(config.n_blocks, latent_dim);
  for (double& v : centers.data) v = rng.uniform(-1.0, 1.0);
  Matrix latent(config.n_assets, latent_dim);
  std::vector<long> planted(config.n_assets);
  std::vector<int> creator_of(n_total_assets);
  for (int a = 0; a < n_total_assets; ++a)
    creator_of[a] = static_cast<int>(rng.below(config.n_students));

  for (int a = 0; a < config.n_assets; ++a) {
    double rate = config.pop_bias;
    for (std::size_t d = 0; d < latent_dim; ++d) {
      latent.at(a, d) = centers.at(block_of[a], d) + config.latent_jitter * rng.normal();
      rate += weights[d] * latent.at(a, d);
    }
    long y = rng.poisson(std::exp(rate));
    planted[a] = std::min<long>(y, config.n_students - 1);
  }

  // choose interactors: exactly planted[a] distinct non-creator students
  std::vector<WalkPool> pools(config.n_students, WalkPool(config.n_blocks));
  std::vector<long> events_on_asset(n_total_assets, 0);
  std::vector<std::vector<int>> interactors(config.n_assets);
  for (int a = 0; a < config.n_assets; ++a) {
    std::vector<int> candidates;
    candidates.reserve(config.n_students - 1);
    for (int u = 0; u < config.n_students; ++u)
      if (u != creator_of[a]) candidates.push_back(u);
    rng.shuffle(candidates);
    candidates.resize(static_cast<std::size_t>(planted[a]));
    interactors[a] = candidates;
    for (int u : candidates) {
      int visits = 1 + static_cast<int>(rng.below(config.extra_interactions + 1));
      pools[u].add(a, block_of[a], visits);
      events_on_asset[a] += visits;
    }
  }

  // creators: one create event, plus padding edits so no labeled asset is a ghost
  for (int a = 0; a < config.n_assets; ++a) {
    long creator_visits = 1;
    ++events_on_asset[a];
    while (events_on_asset[a] < 3) {
      ++creator_visits;
      ++events_on_asset[a];
    }
    pools[creator_of[a]].add(a, block_of[a], static_cast<int>(creator_visits));
  }

  // ghost decoys: 1-2 events, always below the filter threshold
  for (int g = config.n_assets; g < n_total_assets; ++g) {
    pools[creator_of[g]].add(g, block_of[g], 1);
    if (rng.uniform() < 0.5) {
      int u = static_cast<int>(rng.below(config.n_students));
      if (u != creator_of[g]) pools[u].add(g, block_of[g], 1);
    }
  }

  // walk each pool, block-affine, and timestamp visits inside the course
  std::vector<RawEvent> events;
  std::set<std::pair<int, int>> created; // (user, asset) first visit by creator
  for (int u = 0; u < config.n_students; ++u) {
    WalkPool& pool = pools[u];
    int total = pool.total();
    std::int64_t span = config.course_end_ms - config.course_start_ms;
    int block = -1;
    int current = -1;
    int k = 0;
    while (!pool.empty()) {
      auto [asset, next_block] = pool.next(rng, current, block, config.block_affinity);
      block = next_block;
      current = asset;
      std::int64_t ts = config.course_start_ms +
                        span * (k + 1) / (total + 2); // strictly inside the window
      const char* type;
      if (creator_of[asset] == u && created.insert({u, asset}).second) {
        type = "create";
      } else if (creator_of[asset] == u) {
        type = "edit";
      } else {
        static constexpr const char* kinds[] = {"view", "like", "comment"};
        type = kinds[rng.below(3)];
      }
      events.push_back({students[u], assets[asset], type, ts});
      ++k;
    }
    // a login row (no asset) and, sometimes, a pre-course stray
    events.push_back({students[u], "", "login", config.course_start_ms});
    if (rng.uniform() < 0.2) {
      int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_total_assets)));
      events.push_back({students[u], assets[a], "view", config.course_start_ms - 500});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.timestamp_ms < b.timestamp_ms; });

  // vocabulary, block topic slices and content text
  std::vector<std::string> vocab(config.vocab_size);
  for (int w = 0; w < config.vocab_size; ++w) vocab[w] = pad_id("w", w, 3);
  int topic_width = config.vocab_size / config.n_blocks;

  auto draw_word = [&](int block) -> const std::string& {
    if (rng.uniform() < config.content_topic_mix)
      return vocab[rng.below(vocab.size())];
    return vocab[block * topic_width + rng.below(static_cast<std::uint64_t>(topic_width))];
  };

  struct ContentRow {
    std::string title, description;
    int title_len, desc_len;
  };
  std::vector<ContentRow> content(n_total_assets);
  for (int a = 0; a < n_total_assets; ++a) {
    int tlen = 1 + static_cast<int>(rng.below(3));
    std::string title;
    for (int i = 0; i < tlen; ++i) {
      if (i) title += ' ';
      title += draw_word(block_of[a]);
    }
    // heavy-tailed lengths: mostly terse posts, some long ones (mean ~44)
    int dlen = rng.uniform() < 0.6 ? static_cast<int>(rng.poisson(8))
                                   : static_cast<int>(rng.poisson(100));
    std::string desc;
    for (int i = 0; i < dlen; ++i) {
      if (i) desc += ' ';
      desc += draw_word(block_of[a]);
    }
    int week = 1 + static_cast<int>(rng.below(14));
    if (!desc.empty()) desc += ' ';
    desc += "#week" + std::to_string(week);
    content[a] = {title, desc, tlen, dlen};
  }

  // files
  {
    std::ofstream out(out_dir / "events.csv", std::ios::binary);
    out << "user_id,asset_id,event_type,timestamp_ms\n";
    for (const auto& e : events)
      csv::write_row(out, {e.user_id, e.asset_id, e.event_type, std::to_string(e.timestamp_ms)});
  }
  {
    std::ofstream out(out_dir / "creators.csv", std::ios::binary);
    out << "asset_id,creator_user_id\n";
    for (int a = 0; a < n_total_assets; ++a)
      csv::write_row(out, {assets[a], students[creator_of[a]]});
  }
  {
    std::ofstream out(out_dir / "content.csv", std::ios::binary);
    out << "asset_id,title,description\n";
    for (int a = 0; a < n_total_assets; ++a)
      csv::write_row(out, {assets[a], content[a].title, content[a].description});
  }
  {
    std::ofstream out(out_dir / "instructor.csv", std::ios::binary);
    out << "asset_id,acad,creativity,day_asgmt,title_len,desc_len,type\n";
    static constexpr double likert_cdf[] = {0.08, 0.28, 0.72, 0.92, 1.0};
    static constexpr double type_cdf[] = {0.379, 0.733, 0.939, 1.0};
    static constexpr const char* type_names[] = {"collab_wb", "asset", "solo_wb", "curated"};
    auto draw_cdf = [&](const double* cdf, int n) {
      double u = rng.uniform();
      for (int i = 0; i < n; ++i)
        if (u < cdf[i]) return i;
      return n - 1;
    };
    for (int a = 0; a < n_total_assets; ++a) {
      int acad = 1 + draw_cdf(likert_cdf, 5);
      int creativity = 1 + draw_cdf(likert_cdf, 5);
      int day = static_cast<int>(std::clamp(std::round(4.95 + 3.76 * rng.normal()), -5.0, 43.0));
      const char* type = type_names[draw_cdf(type_cdf, 4)];
      csv::write_row(out, {assets[a], std::to_string(acad), std::to_string(creativity),
                           std::to_string(day), std::to_string(content[a].title_len),
                           std::to_string(content[a].desc_len), type});
    }
  }
  {
    std::ofstream out(out_dir / "word_vectors.txt", std::ios::binary);
    for (const auto& token : vocab) {
      out << token;
      for (int d = 0; d < config.word_vec_dim; ++d)
        out << ' ' << csv::format_double(rng.normal() / std::sqrt(config.word_vec_dim));
      out << '\n';
    }
  }
  {
    json truth;
    truth["seed"] = config.seed;
    truth["n_students"] = config.n_students;
    truth["n_assets"] = config.n_assets;
    truth["n_blocks"] = config.n_blocks;
    truth["block_affinity"] = config.block_affinity;
    truth["pop_weights"] = weights;
    truth["pop_bias"] = config.pop_bias;
    truth["course_start_ms"] = config.course_start_ms;
    truth["course_end_ms"] = config.course_end_ms;
    json asset_list = json::array();
    for (int a = 0; a < config.n_assets; ++a) {
      std::vector<double> lat(latent.row(a), latent.row(a) + latent_dim);
      asset_list.push_back({{"id", assets[a]},
                            {"block", block_of[a]},
                            {"latent", lat},
                            {"planted_popularity", planted[a]}});
    }
    truth["assets"] = asset_list;
    json ghost_list = json::array();
    for (int g = config.n_assets; g < n_total_assets; ++g) ghost_list.push_back(assets[g]);
    truth["ghosts"] = ghost_list;
    std::ofstream out(out_dir / "ground_truth.json", std::ios::binary);
    out << truth.dump(2) << '\n';
  }
}

RegressionDraw make_poisson_regression(std::size_t n, std::span<const double> weights,
                                       double bias, std::uint64_t seed) {
  Rng rng(seed);
  RegressionDraw draw;
  draw.x = Matrix(n, weights.size());
  draw.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double rate = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      double v = rng.normal();
      draw.x.at(i, j) = v;
      rate += weights[j] * v;
    }
    draw.y[i] = static_cast<double>(rng.poisson(std::exp(rate)));
  }
  return draw;
}

} // namespace a2v::synth
