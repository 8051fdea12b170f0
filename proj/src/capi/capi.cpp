#include "a2v/a2v.h"

#include "../core/content_embed.hpp"
#include "../core/error.hpp"
#include "../core/eval.hpp"
#include "../core/event_log.hpp"
#include "../core/features.hpp"
#include "../core/skipgram.hpp"
#include "../core/synth.hpp"
#include "../core/tsne.hpp"
#include "../core/vector_table.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace {

thread_local std::string g_last_error;

a2v_status fail(a2v_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Maps core exceptions onto status codes; the happy path returns A2V_OK.
template <typename Fn>
a2v_status guarded(Fn&& fn) {
  try {
    fn();
    return A2V_OK;
  } catch (const a2v::ParseError& e) {
    return fail(A2V_ERR_PARSE, e.what());
  } catch (const a2v::IoError& e) {
    return fail(A2V_ERR_IO, e.what());
  } catch (const a2v::NumericError& e) {
    return fail(A2V_ERR_NUMERIC, e.what());
  } catch (const a2v::NotFoundError& e) {
    return fail(A2V_ERR_NOT_FOUND, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(A2V_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(A2V_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(A2V_ERR_INTERNAL, "unknown error");
  }
}

a2v_status require(bool ok, const char* message) {
  return ok ? A2V_OK : fail(A2V_ERR_INVALID_ARGUMENT, message);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw a2v::IoError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw a2v::IoError("cannot write file: " + path);
  return out;
}

} // namespace

struct a2v_dataset {
  std::vector<a2v::events::EventRecord> events; // filtered, ghost-free
  std::vector<a2v::events::AssetSequence> sequences;
  std::vector<a2v::events::PopularityLabel> labels;
  std::map<std::string, long> popularity;
  std::size_t num_users = 0;
};

struct a2v_embedding {
  a2v::VectorTable table;
};

struct a2v_wordvecs {
  a2v::content::WordVectorTable table;
};

extern "C" {

const char* a2v_version(void) { return "0.1.0"; }

const char* a2v_last_error(void) { return g_last_error.c_str(); }

a2v_status a2v_dataset_open(const char* events_csv, const char* creators_csv,
                            int64_t course_start_ms, int64_t course_end_ms, long min_events,
                            a2v_dataset** out) {
  if (a2v_status s = require(events_csv && creators_csv && out, "null argument")) return s;
  return guarded([&] {
    auto events_in = open_input(events_csv);
    auto raw = a2v::events::parse_events(events_in);
    auto creators_in = open_input(creators_csv);
    auto creators = a2v::events::parse_creators(creators_in);

    auto ds = std::make_unique<a2v_dataset>();
    auto filtered = a2v::events::filter_asset_events(raw, course_start_ms, course_end_ms);
    ds->events = a2v::events::remove_ghost_assets(filtered, min_events);
    ds->sequences = a2v::events::build_sequences(ds->events);
    ds->labels = a2v::events::compute_popularity(ds->events, creators);
    for (const auto& l : ds->labels) ds->popularity[l.asset_id] = l.popularity;
    ds->num_users = ds->sequences.size();
    *out = ds.release();
  });
}

void a2v_dataset_close(a2v_dataset* ds) { delete ds; }

size_t a2v_dataset_num_events(const a2v_dataset* ds) { return ds ? ds->events.size() : 0; }

size_t a2v_dataset_num_assets(const a2v_dataset* ds) { return ds ? ds->labels.size() : 0; }

size_t a2v_dataset_num_users(const a2v_dataset* ds) { return ds ? ds->num_users : 0; }

a2v_status a2v_dataset_popularity(const a2v_dataset* ds, const char* asset_id, long* out) {
  if (a2v_status s = require(ds && asset_id && out, "null argument")) return s;
  auto it = ds->popularity.find(asset_id);
  if (it == ds->popularity.end())
    return fail(A2V_ERR_NOT_FOUND, std::string("no such asset: ") + asset_id);
  *out = it->second;
  return A2V_OK;
}

a2v_status a2v_dataset_save_labels(const a2v_dataset* ds, const char* csv_path) {
  if (a2v_status s = require(ds && csv_path, "null argument")) return s;
  return guarded([&] {
    auto out = open_output(csv_path);
    a2v::events::write_labels(out, ds->labels);
  });
}

void a2v_train_options_init(a2v_train_options* opts) {
  if (!opts) return;
  opts->dim = 50;
  opts->window = 3;
  opts->epochs = 5;
  opts->learning_rate = 0.05;
  opts->negative = 0;
  opts->seed = 1;
}

a2v_status a2v_train_embedding(const a2v_dataset* ds, const a2v_train_options* opts,
                               a2v_embedding** out) {
  if (a2v_status s = require(ds && opts && out, "null argument")) return s;
  return guarded([&] {
    a2v::skipgram::SkipGramConfig config;
    config.dim = opts->dim;
    config.window = opts->window;
    config.epochs = opts->epochs;
    config.learning_rate = opts->learning_rate;
    config.objective = opts->negative > 0 ? a2v::skipgram::Objective::negative_sampling
                                          : a2v::skipgram::Objective::full_softmax;
    if (opts->negative > 0) config.negative_k = opts->negative;
    config.seed = opts->seed;

    auto vocab = a2v::skipgram::build_vocab(ds->sequences);
    auto trained = a2v::skipgram::train_skipgram(ds->sequences, vocab, config);
    auto emb = std::make_unique<a2v_embedding>();
    emb->table = a2v::skipgram::to_table(vocab, trained);
    *out = emb.release();
  });
}

void a2v_embedding_close(a2v_embedding* emb) { delete emb; }

size_t a2v_embedding_size(const a2v_embedding* emb) { return emb ? emb->table.size() : 0; }

int a2v_embedding_dim(const a2v_embedding* emb) {
  return emb ? static_cast<int>(emb->table.dim()) : 0;
}

a2v_status a2v_embedding_save_csv(const a2v_embedding* emb, const char* path) {
  if (a2v_status s = require(emb && path, "null argument")) return s;
  return guarded([&] {
    auto out = open_output(path);
    a2v::save_vector_table(out, emb->table);
  });
}

a2v_status a2v_embedding_load_csv(const char* path, a2v_embedding** out) {
  if (a2v_status s = require(path && out, "null argument")) return s;
  return guarded([&] {
    auto in = open_input(path);
    auto emb = std::make_unique<a2v_embedding>();
    emb->table = a2v::load_vector_table(in);
    *out = emb.release();
  });
}

a2v_status a2v_embedding_vector(const a2v_embedding* emb, const char* asset_id, double* out) {
  if (a2v_status s = require(emb && asset_id && out, "null argument")) return s;
  return guarded([&] {
    auto v = emb->table.vector_for(asset_id);
    std::copy(v.begin(), v.end(), out);
  });
}

namespace {

a2v_status copy_matches(const a2v_embedding* emb,
                        const std::vector<a2v::skipgram::Match>& matches, a2v_match* out,
                        size_t* count) {
  for (std::size_t i = 0; i < matches.size(); ++i) {
    // point into the table's interned ids so no allocation crosses the ABI
    out[i].asset_id = emb->table.ids[emb->table.index.at(matches[i].asset_id)].c_str();
    out[i].similarity = matches[i].similarity;
  }
  *count = matches.size();
  return A2V_OK;
}

} // namespace

a2v_status a2v_embedding_nearest(const a2v_embedding* emb, const char* asset_id, size_t k,
                                 a2v_match* out, size_t* count) {
  if (a2v_status s = require(emb && asset_id && out && count && k > 0, "bad argument")) return s;
  return guarded([&] {
    auto matches = a2v::skipgram::nearest_neighbors(emb->table, asset_id, k);
    copy_matches(emb, matches, out, count);
  });
}

a2v_status a2v_embedding_partner(const a2v_embedding* emb, const char* asset_id,
                                 const char* beacon_id, size_t k, a2v_match* out,
                                 size_t* count) {
  if (a2v_status s = require(emb && asset_id && beacon_id && out && count && k > 0,
                             "bad argument"))
    return s;
  return guarded([&] {
    auto matches = a2v::skipgram::partner_query(emb->table, asset_id, beacon_id, k);
    copy_matches(emb, matches, out, count);
  });
}

a2v_status a2v_wordvecs_open(const char* path, a2v_wordvecs** out) {
  if (a2v_status s = require(path && out, "null argument")) return s;
  return guarded([&] {
    auto in = open_input(path);
    auto wv = std::make_unique<a2v_wordvecs>();
    wv->table = a2v::content::load_word_vectors(in);
    *out = wv.release();
  });
}

void a2v_wordvecs_close(a2v_wordvecs* wv) { delete wv; }

int a2v_wordvecs_dim(const a2v_wordvecs* wv) {
  return wv ? static_cast<int>(wv->table.dim) : 0;
}

a2v_status a2v_embed_content(const a2v_wordvecs* wv, const char* content_csv,
                             const char* out_csv) {
  if (a2v_status s = require(wv && content_csv && out_csv, "null argument")) return s;
  return guarded([&] {
    auto in = open_input(content_csv);
    auto docs = a2v::content::parse_content(in);
    auto table = a2v::content::embed_documents(docs, wv->table);
    auto out = open_output(out_csv);
    a2v::save_vector_table(out, table);
  });
}

void a2v_eval_options_init(a2v_eval_options* opts) {
  if (!opts) return;
  opts->representation = "asset2vec";
  opts->model = "glm";
  opts->folds = 5;
  opts->hidden = 8;
  opts->learning_rate = 0.05;
  opts->max_epochs = 5000;
  opts->patience = 50;
  opts->seed = 1;
}

a2v_status a2v_evaluate(const a2v_dataset* ds, const a2v_embedding* embedding,
                        const a2v_wordvecs* wordvecs, const char* content_csv,
                        const char* instructor_csv, const a2v_eval_options* opts,
                        const char* report_json_path, const char* kde_csv_path) {
  if (a2v_status s = require(ds && opts && opts->representation && opts->model &&
                                 report_json_path,
                             "null argument"))
    return s;
  return guarded([&] {
    auto rep = a2v::features::representation_from_string(opts->representation);
    auto model = a2v::eval::model_type_from_string(opts->model);

    bool needs_embedding = rep == a2v::features::Representation::asset2vec ||
                           rep == a2v::features::Representation::ensemble;
    bool needs_content = rep == a2v::features::Representation::avg_content ||
                         rep == a2v::features::Representation::ensemble;
    bool needs_instructor = rep == a2v::features::Representation::instructor;
    if (needs_embedding && !embedding)
      throw std::invalid_argument("evaluate: representation needs a trained embedding");
    if (needs_content && (!wordvecs || !content_csv))
      throw std::invalid_argument("evaluate: representation needs word vectors and content");
    if (needs_instructor && !instructor_csv)
      throw std::invalid_argument("evaluate: representation needs instructor features");

    a2v::VectorTable content_table;
    if (needs_content) {
      auto in = open_input(content_csv);
      content_table = a2v::content::embed_documents(a2v::content::parse_content(in),
                                                    wordvecs->table);
    }
    std::map<std::string, a2v::features::InstructorFeatures> instructor;
    if (needs_instructor) {
      auto in = open_input(instructor_csv);
      instructor = a2v::features::parse_instructor(in);
    }

    // evaluation is confined to the labeled assets every needed source covers
    std::vector<a2v::events::PopularityLabel> labels;
    for (const auto& l : ds->labels) {
      if (needs_embedding && !embedding->table.contains(l.asset_id)) continue;
      if (needs_content && !content_table.contains(l.asset_id)) continue;
      if (needs_instructor && !instructor.count(l.asset_id)) continue;
      labels.push_back(l);
    }

    a2v::features::RepresentationSources sources;
    if (needs_embedding) sources.embedding = &embedding->table;
    if (needs_content) sources.content = &content_table;
    if (needs_instructor) sources.instructor = &instructor;
    auto set = a2v::features::assemble(rep, sources, labels);

    a2v::eval::EvalConfig config;
    config.folds = opts->folds;
    config.hidden = static_cast<std::size_t>(opts->hidden);
    config.train.learning_rate = opts->learning_rate;
    config.train.max_epochs = opts->max_epochs;
    config.train.patience = opts->patience;
    config.seed = opts->seed;

    auto report = a2v::eval::cross_validate(set, model, config);
    auto out = open_output(report_json_path);
    a2v::eval::save_report(out, report);
    if (kde_csv_path) {
      auto curve = a2v::eval::abs_error_kde(report.abs_errors);
      auto kde_out = open_output(kde_csv_path);
      a2v::eval::save_kde_csv(kde_out, curve);
    }
  });
}

void a2v_tsne_options_init(a2v_tsne_options* opts) {
  if (!opts) return;
  opts->perplexity = 30;
  opts->theta = 0.5;
  opts->iterations = 1000;
  opts->seed = 1;
}

a2v_status a2v_tsne_layout(const a2v_embedding* emb, const char* labels_csv,
                           const a2v_tsne_options* opts, const char* out_csv,
                           const char* out_svg) {
  if (a2v_status s = require(emb && opts && (out_csv || out_svg), "bad argument")) return s;
  return guarded([&] {
    a2v::tsne::TsneConfig config;
    config.perplexity = opts->perplexity;
    config.theta = opts->theta;
    config.iterations = opts->iterations;
    config.seed = opts->seed;

    std::vector<long> popularity(emb->table.size(), 0);
    if (labels_csv) {
      auto in = open_input(labels_csv);
      for (const auto& l : a2v::events::parse_labels(in)) {
        auto it = emb->table.index.find(l.asset_id);
        if (it != emb->table.index.end()) popularity[it->second] = l.popularity;
      }
    }

    auto result = a2v::tsne::run_tsne(emb->table.vectors, config);
    a2v::tsne::Embedding2D layout;
    layout.asset_ids = emb->table.ids;
    layout.points = std::move(result.points);
    layout.kl_divergence = result.kl_divergence;

    if (out_csv) {
      auto out = open_output(out_csv);
      a2v::tsne::write_layout_csv(out, layout, popularity);
    }
    if (out_svg) {
      auto out = open_output(out_svg);
      out << a2v::tsne::render_scatter_svg(layout.points, popularity);
    }
  });
}

void a2v_synth_options_init(a2v_synth_options* opts) {
  if (!opts) return;
  opts->n_students = 100;
  opts->n_assets = 3000;
  opts->n_blocks = 10;
  opts->n_ghosts = 300;
  opts->block_affinity = 0.9;
  opts->pop_bias = 1.0;
  opts->content_topic_mix = 0.3;
  opts->seed = 1;
}

a2v_status a2v_synth_generate(const a2v_synth_options* opts, const char* out_dir) {
  if (a2v_status s = require(opts && out_dir, "null argument")) return s;
  return guarded([&] {
    a2v::synth::SynthConfig config;
    config.n_students = opts->n_students;
    config.n_assets = opts->n_assets;
    config.n_blocks = opts->n_blocks;
    config.n_ghosts = opts->n_ghosts;
    config.block_affinity = opts->block_affinity;
    config.pop_bias = opts->pop_bias;
    config.content_topic_mix = opts->content_topic_mix;
    config.seed = opts->seed;
    a2v::synth::generate(config, out_dir);
  });
}

} // extern "C"
