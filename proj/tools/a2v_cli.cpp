// Pipeline driver: every subcommand goes through the public C API and
// records a manifest of what it did, so a run can be reproduced from its
// output directory alone.

#include "a2v/a2v.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  std::string message;
};

void check(a2v_status status) {
  if (status != A2V_OK) throw CliError{a2v_last_error()};
}

std::string fnv1a_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{"cannot open file: " + path.string()};
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
  }
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

class Manifest {
public:
  Manifest(std::string subcommand, fs::path out_dir)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {}

  void flag(const std::string& name, const std::string& value) { flags_[name] = value; }
  template <typename T>
  void flag(const std::string& name, T value) {
    flags_[name] = std::to_string(value);
  }
  void input(const fs::path& path) { inputs_[path.string()] = fnv1a_digest(path); }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }

  void write() const {
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    json j = {{"subcommand", subcommand_},
              {"flags", flags_},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"duration_ms", elapsed}};
    fs::create_directories(out_dir_);
    std::ofstream out(out_dir_ / "manifest.json", std::ios::binary);
    if (!out) throw CliError{"cannot write manifest in " + out_dir_.string()};
    out << j.dump(2) << '\n';
  }

private:
  std::string subcommand_;
  fs::path out_dir_;
  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

// RAII wrappers over the C handles
struct Dataset {
  a2v_dataset* handle = nullptr;
  ~Dataset() { a2v_dataset_close(handle); }
};
struct Embedding {
  a2v_embedding* handle = nullptr;
  Embedding() = default;
  Embedding(Embedding&& other) noexcept : handle(other.handle) { other.handle = nullptr; }
  Embedding& operator=(Embedding&& other) noexcept {
    std::swap(handle, other.handle);
    return *this;
  }
  ~Embedding() { a2v_embedding_close(handle); }
};
struct WordVecs {
  a2v_wordvecs* handle = nullptr;
  ~WordVecs() { a2v_wordvecs_close(handle); }
};

struct CommonOpts {
  std::string events, creators, content, instructor, word_vectors, embedding, labels;
  std::string out = ".";
  std::int64_t course_start = 0;
  std::int64_t course_end = INT64_MAX;
  long min_events = 3;
  int dim = 50;
  int window = 3;
  int epochs = 5;
  double learning_rate = 0.05;
  int negative = 0;
  int hidden = 8;
  int folds = 5;
  std::uint64_t seed = 1;
};

void add_dataset_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--events", o.events, "events CSV")->required();
  cmd->add_option("--creators", o.creators, "creators CSV")->required();
  cmd->add_option("--course-start", o.course_start, "course window start (ms)");
  cmd->add_option("--course-end", o.course_end, "course window end (ms)");
  cmd->add_option("--min-events", o.min_events, "ghost-asset threshold (default 3)");
}

Dataset open_dataset(const CommonOpts& o, Manifest& manifest) {
  manifest.input(o.events);
  manifest.input(o.creators);
  manifest.flag("course_start", o.course_start);
  manifest.flag("course_end", o.course_end);
  manifest.flag("min_events", o.min_events);
  Dataset ds;
  check(a2v_dataset_open(o.events.c_str(), o.creators.c_str(), o.course_start, o.course_end,
                         o.min_events, &ds.handle));
  return ds;
}

Embedding train_embedding(const Dataset& ds, const CommonOpts& o, Manifest& manifest) {
  a2v_train_options topts;
  a2v_train_options_init(&topts);
  topts.dim = o.dim;
  topts.window = o.window;
  topts.epochs = o.epochs;
  topts.learning_rate = o.learning_rate;
  topts.negative = o.negative;
  topts.seed = o.seed;
  manifest.flag("dim", o.dim);
  manifest.flag("window", o.window);
  manifest.flag("epochs", o.epochs);
  manifest.flag("learning_rate", o.learning_rate);
  manifest.flag("negative", o.negative);
  Embedding emb;
  check(a2v_train_embedding(ds.handle, &topts, &emb.handle));
  return emb;
}

int run_synth(const CommonOpts& o, const a2v_synth_options& sopts) {
  Manifest manifest("synth", o.out);
  manifest.flag("seed", sopts.seed);
  manifest.flag("students", sopts.n_students);
  manifest.flag("assets", sopts.n_assets);
  manifest.flag("blocks", sopts.n_blocks);
  manifest.flag("ghosts", sopts.n_ghosts);
  manifest.flag("affinity", sopts.block_affinity);
  manifest.flag("pop_bias", sopts.pop_bias);
  manifest.flag("topic_mix", sopts.content_topic_mix);
  check(a2v_synth_generate(&sopts, o.out.c_str()));
  for (const char* name : {"events.csv", "creators.csv", "content.csv", "instructor.csv",
                           "word_vectors.txt", "ground_truth.json"})
    manifest.output(fs::path(o.out) / name);
  manifest.write();
  std::cout << "synthetic course written to " << o.out << "\n";
  return 0;
}

int run_ingest(const CommonOpts& o) {
  Manifest manifest("ingest", o.out);
  Dataset ds = open_dataset(o, manifest);
  fs::create_directories(o.out);
  fs::path labels = fs::path(o.out) / "labels.csv";
  check(a2v_dataset_save_labels(ds.handle, labels.string().c_str()));
  manifest.output(labels);
  manifest.write();
  std::cout << "events: " << a2v_dataset_num_events(ds.handle)
            << ", assets: " << a2v_dataset_num_assets(ds.handle)
            << ", users: " << a2v_dataset_num_users(ds.handle) << "\n";
  return 0;
}

int run_train_embed(const CommonOpts& o) {
  Manifest manifest("train-embed", o.out);
  manifest.flag("seed", o.seed);
  Dataset ds = open_dataset(o, manifest);
  Embedding emb = train_embedding(ds, o, manifest);
  fs::create_directories(o.out);
  fs::path path = fs::path(o.out) / "embedding.csv";
  check(a2v_embedding_save_csv(emb.handle, path.string().c_str()));
  manifest.output(path);
  manifest.write();
  std::cout << "trained " << a2v_embedding_size(emb.handle) << " vectors of dim "
            << a2v_embedding_dim(emb.handle) << " -> " << path.string() << "\n";
  return 0;
}

int run_embed_content(const CommonOpts& o) {
  Manifest manifest("embed-content", o.out);
  manifest.input(o.content);
  manifest.input(o.word_vectors);
  WordVecs wv;
  check(a2v_wordvecs_open(o.word_vectors.c_str(), &wv.handle));
  fs::create_directories(o.out);
  fs::path path = fs::path(o.out) / "content_vectors.csv";
  check(a2v_embed_content(wv.handle, o.content.c_str(), path.string().c_str()));
  manifest.output(path);
  manifest.write();
  std::cout << "content vectors (dim " << a2v_wordvecs_dim(wv.handle) << ") -> "
            << path.string() << "\n";
  return 0;
}

int run_evaluate(const CommonOpts& o, const std::string& rep, const std::string& model,
                 double lr, int max_epochs, int patience) {
  Manifest manifest("evaluate", o.out);
  manifest.flag("rep", rep);
  manifest.flag("model", model);
  manifest.flag("folds", o.folds);
  manifest.flag("hidden", o.hidden);
  manifest.flag("seed", o.seed);
  Dataset ds = open_dataset(o, manifest);

  bool needs_embedding = rep == "asset2vec" || rep == "ensemble";
  bool needs_content = rep == "avg_content" || rep == "ensemble";
  bool needs_instructor = rep == "instructor";

  Embedding emb;
  if (needs_embedding) {
    if (!o.embedding.empty()) {
      manifest.input(o.embedding);
      check(a2v_embedding_load_csv(o.embedding.c_str(), &emb.handle));
    } else {
      emb = train_embedding(ds, o, manifest);
    }
  }
  WordVecs wv;
  if (needs_content) {
    if (o.content.empty() || o.word_vectors.empty())
      throw CliError{"--content and --word-vectors are required for rep " + rep};
    manifest.input(o.content);
    manifest.input(o.word_vectors);
    check(a2v_wordvecs_open(o.word_vectors.c_str(), &wv.handle));
  }
  if (needs_instructor) {
    if (o.instructor.empty()) throw CliError{"--instructor is required for rep instructor"};
    manifest.input(o.instructor);
  }

  a2v_eval_options eopts;
  a2v_eval_options_init(&eopts);
  eopts.representation = rep.c_str();
  eopts.model = model.c_str();
  eopts.folds = o.folds;
  eopts.hidden = o.hidden;
  eopts.learning_rate = lr;
  eopts.max_epochs = max_epochs;
  eopts.patience = patience;
  eopts.seed = o.seed;
  manifest.flag("model_learning_rate", lr);
  manifest.flag("model_max_epochs", max_epochs);
  manifest.flag("model_patience", patience);

  fs::create_directories(o.out);
  fs::path report = fs::path(o.out) / ("report_" + rep + "_" + model + ".json");
  fs::path kde = fs::path(o.out) / ("error_kde_" + rep + "_" + model + ".csv");
  check(a2v_evaluate(ds.handle, emb.handle, wv.handle,
                     o.content.empty() ? nullptr : o.content.c_str(),
                     o.instructor.empty() ? nullptr : o.instructor.c_str(), &eopts,
                     report.string().c_str(), kde.string().c_str()));
  manifest.output(report);
  manifest.output(kde);
  manifest.write();

  std::ifstream in(report);
  json j = json::parse(in);
  std::cout << rep << " + " << model << ": overall RMSE " << j["overall_rmse"].get<double>()
            << " over " << j["asset_ids"].size() << " assets -> " << report.string() << "\n";
  return 0;
}

int run_tsne(const CommonOpts& o, const a2v_tsne_options& topts) {
  Manifest manifest("tsne", o.out);
  manifest.flag("perplexity", topts.perplexity);
  manifest.flag("theta", topts.theta);
  manifest.flag("iterations", topts.iterations);
  manifest.flag("seed", topts.seed);
  manifest.input(o.embedding);
  Embedding emb;
  check(a2v_embedding_load_csv(o.embedding.c_str(), &emb.handle));
  if (!o.labels.empty()) manifest.input(o.labels);

  fs::create_directories(o.out);
  fs::path layout = fs::path(o.out) / "layout.csv";
  fs::path svg = fs::path(o.out) / "scatter.svg";
  check(a2v_tsne_layout(emb.handle, o.labels.empty() ? nullptr : o.labels.c_str(), &topts,
                        layout.string().c_str(), svg.string().c_str()));
  manifest.output(layout);
  manifest.output(svg);
  manifest.write();
  std::cout << "layout -> " << layout.string() << ", scatter -> " << svg.string() << "\n";
  return 0;
}

int run_partner(const CommonOpts& o, const std::string& asset, const std::string& beacon,
                std::size_t k) {
  Manifest manifest("partner", o.out);
  manifest.flag("asset", asset);
  manifest.flag("beacon", beacon);
  manifest.flag("k", k);
  manifest.input(o.embedding);
  Embedding emb;
  check(a2v_embedding_load_csv(o.embedding.c_str(), &emb.handle));

  std::vector<a2v_match> matches(k);
  std::size_t count = 0;
  check(a2v_embedding_partner(emb.handle, asset.c_str(), beacon.c_str(), k, matches.data(),
                              &count));

  fs::create_directories(o.out);
  fs::path path = fs::path(o.out) / "partners.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{"cannot write " + path.string()};
  out << "rank,asset_id,similarity\n";
  for (std::size_t i = 0; i < count; ++i) {
    out << (i + 1) << ',' << matches[i].asset_id << ',' << matches[i].similarity << '\n';
    std::cout << (i + 1) << ". " << matches[i].asset_id << " (" << matches[i].similarity
              << ")\n";
  }
  manifest.output(path);
  manifest.write();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"asset2vec: popularity modelling of peer-shared course artifacts"};
  app.require_subcommand(1);

  CommonOpts o;
  a2v_synth_options sopts;
  a2v_synth_options_init(&sopts);
  a2v_tsne_options topts;
  a2v_tsne_options_init(&topts);
  std::string rep = "asset2vec", model = "glm", asset, beacon;
  double eval_lr = 0.05;
  int max_epochs = 5000, patience = 50;
  std::size_t k = 5;

  auto* synth = app.add_subcommand("synth", "generate a synthetic course");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seed", o.seed, "rng seed");
  synth->add_option("--students", sopts.n_students, "number of students");
  synth->add_option("--assets", sopts.n_assets, "number of labeled assets");
  synth->add_option("--blocks", sopts.n_blocks, "number of context blocks");
  synth->add_option("--ghosts", sopts.n_ghosts, "number of ghost decoys");
  synth->add_option("--affinity", sopts.block_affinity, "in-block transition probability");
  synth->add_option("--pop-bias", sopts.pop_bias, "popularity log-rate intercept");
  synth->add_option("--topic-mix", sopts.content_topic_mix,
                    "probability a content word ignores the block topic");

  auto* ingest = app.add_subcommand("ingest", "parse and filter an event log");
  add_dataset_flags(ingest, o);
  ingest->add_option("--out", o.out, "output directory")->required();

  auto* train = app.add_subcommand("train-embed", "train the skip-gram asset embedding");
  add_dataset_flags(train, o);
  train->add_option("--dim", o.dim, "vector size (default 50)");
  train->add_option("--window", o.window, "context window (default 3)");
  train->add_option("--epochs", o.epochs, "training epochs");
  train->add_option("--lr", o.learning_rate, "initial learning rate");
  train->add_option("--negative", o.negative, "negative samples (0 = full softmax)");
  train->add_option("--seed", o.seed, "rng seed");
  train->add_option("--out", o.out, "output directory")->required();

  auto* embed = app.add_subcommand("embed-content", "average word vectors over content");
  embed->add_option("--content", o.content, "content CSV")->required();
  embed->add_option("--word-vectors", o.word_vectors, "pretrained word vectors")->required();
  embed->add_option("--out", o.out, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "cross-validate a representation/model pair");
  add_dataset_flags(eval, o);
  eval->add_option("--rep", rep, "asset2vec | avg_content | ensemble | instructor");
  eval->add_option("--model", model, "baseline | glm | mlp");
  eval->add_option("--embedding", o.embedding, "trained embedding CSV (else trains in place)");
  eval->add_option("--content", o.content, "content CSV");
  eval->add_option("--word-vectors", o.word_vectors, "pretrained word vectors");
  eval->add_option("--instructor", o.instructor, "instructor features CSV");
  eval->add_option("--dim", o.dim, "vector size when training in place");
  eval->add_option("--window", o.window, "context window when training in place");
  eval->add_option("--epochs", o.epochs, "embedding epochs when training in place");
  eval->add_option("--folds", o.folds, "CV folds (default 5)");
  eval->add_option("--hidden", o.hidden, "MLP hidden units (default 8)");
  eval->add_option("--lr", eval_lr, "model learning rate");
  eval->add_option("--max-epochs", max_epochs, "model epoch cap");
  eval->add_option("--patience", patience, "early-stopping patience");
  eval->add_option("--seed", o.seed, "rng seed");
  eval->add_option("--out", o.out, "output directory")->required();

  auto* tsne = app.add_subcommand("tsne", "project an embedding to 2-d");
  tsne->add_option("--embedding", o.embedding, "embedding CSV")->required();
  tsne->add_option("--labels", o.labels, "labels CSV for coloring");
  tsne->add_option("--perplexity", topts.perplexity, "target perplexity (default 30)");
  tsne->add_option("--theta", topts.theta, "Barnes-Hut accuracy (default 0.5)");
  tsne->add_option("--iterations", topts.iterations, "iterations (default 1000)");
  tsne->add_option("--seed", topts.seed, "rng seed");
  tsne->add_option("--out", o.out, "output directory")->required();

  auto* partner = app.add_subcommand("partner", "find partners so v_asset + v_partner = v_beacon");
  partner->add_option("--embedding", o.embedding, "embedding CSV")->required();
  partner->add_option("--asset", asset, "anchor asset id")->required();
  partner->add_option("--beacon", beacon, "beacon asset id")->required();
  partner->add_option("-k,--top", k, "results to return (default 5)");
  partner->add_option("--out", o.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << (argc > 1 ? app.help() : "run with --help for usage") << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) {
      sopts.seed = o.seed;
      return run_synth(o, sopts);
    }
    if (ingest->parsed()) return run_ingest(o);
    if (train->parsed()) return run_train_embed(o);
    if (embed->parsed()) return run_embed_content(o);
    if (eval->parsed()) return run_evaluate(o, rep, model, eval_lr, max_epochs, patience);
    if (tsne->parsed()) return run_tsne(o, topts);
    if (partner->parsed()) return run_partner(o, asset, beacon, k);
  } catch (const CliError& e) {
    std::cerr << "a2v: " << e.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "a2v: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
