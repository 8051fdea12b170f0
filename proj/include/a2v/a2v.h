/* asset2vec: popularity modelling of peer-shared course artifacts.
 *
 * C interface to the pipeline: event-log ingestion, skip-gram asset
 * embeddings, averaged content vectors, Poisson-loss popularity models with
 * cross-validated evaluation, and 2-d layouts for inspection.
 *
 * Every function returning a2v_status yields A2V_OK (0) on success; on
 * failure a human-readable message is available from a2v_last_error() on the
 * same thread. Handles are freed with their matching _close function; out
 * parameters are untouched on failure.
 */
#ifndef A2V_H
#define A2V_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && defined(A2V_BUILD)
#define A2V_API __declspec(dllexport)
#elif defined(_WIN32)
#define A2V_API __declspec(dllimport)
#else
#define A2V_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum a2v_status {
  A2V_OK = 0,
  A2V_ERR_INVALID_ARGUMENT = 1,
  A2V_ERR_PARSE = 2,
  A2V_ERR_IO = 3,
  A2V_ERR_NUMERIC = 4,
  A2V_ERR_NOT_FOUND = 5,
  A2V_ERR_INTERNAL = 6
} a2v_status;

A2V_API const char* a2v_version(void);

/* Message for the most recent failing call on this thread. */
A2V_API const char* a2v_last_error(void);

/* ---- dataset: parsed, filtered, labeled event log -------------------- */

typedef struct a2v_dataset a2v_dataset;

/* Loads the events CSV (user_id,asset_id,event_type,timestamp_ms) and the
 * creators CSV (asset_id,creator_user_id), keeps asset events inside
 * [course_start_ms, course_end_ms], drops assets with fewer than min_events
 * events, and computes popularity labels. */
A2V_API a2v_status a2v_dataset_open(const char* events_csv, const char* creators_csv,
                                    int64_t course_start_ms, int64_t course_end_ms,
                                    long min_events, a2v_dataset** out);
A2V_API void a2v_dataset_close(a2v_dataset* ds);

A2V_API size_t a2v_dataset_num_events(const a2v_dataset* ds);  /* after filtering */
A2V_API size_t a2v_dataset_num_assets(const a2v_dataset* ds);
A2V_API size_t a2v_dataset_num_users(const a2v_dataset* ds);
A2V_API a2v_status a2v_dataset_popularity(const a2v_dataset* ds, const char* asset_id,
                                          long* out);
/* Writes `asset_id,popularity` rows sorted by asset id. */
A2V_API a2v_status a2v_dataset_save_labels(const a2v_dataset* ds, const char* csv_path);

/* ---- skip-gram asset embedding ---------------------------------------- */

typedef struct a2v_embedding a2v_embedding;

typedef struct a2v_train_options {
  int dim;              /* vector size, default 50 */
  int window;           /* context window, default 3 */
  int epochs;           /* default 5 */
  double learning_rate; /* default 0.05, linear decay */
  int negative;         /* 0 = full softmax (default), k > 0 = negative sampling */
  uint64_t seed;
} a2v_train_options;

A2V_API void a2v_train_options_init(a2v_train_options* opts);

A2V_API a2v_status a2v_train_embedding(const a2v_dataset* ds, const a2v_train_options* opts,
                                       a2v_embedding** out);
A2V_API void a2v_embedding_close(a2v_embedding* emb);

A2V_API size_t a2v_embedding_size(const a2v_embedding* emb);
A2V_API int a2v_embedding_dim(const a2v_embedding* emb);

/* CSV is `asset_id,v0,...,v{d-1}`; save then load round-trips bit-exactly. */
A2V_API a2v_status a2v_embedding_save_csv(const a2v_embedding* emb, const char* path);
A2V_API a2v_status a2v_embedding_load_csv(const char* path, a2v_embedding** out);

/* Copies the vector for one asset into out[0..dim). */
A2V_API a2v_status a2v_embedding_vector(const a2v_embedding* emb, const char* asset_id,
                                        double* out);

typedef struct a2v_match {
  const char* asset_id; /* owned by the embedding handle */
  double similarity;
} a2v_match;

/* Top-k cosine neighbours, query excluded. *count receives how many of the
 * k slots were filled. Returned id pointers stay valid until the embedding
 * handle is closed. */
A2V_API a2v_status a2v_embedding_nearest(const a2v_embedding* emb, const char* asset_id,
                                         size_t k, a2v_match* out, size_t* count);

/* Assets x whose vectors are nearest to v_beacon - v_asset: the partners
 * that would pair the asset with the beacon. */
A2V_API a2v_status a2v_embedding_partner(const a2v_embedding* emb, const char* asset_id,
                                         const char* beacon_id, size_t k, a2v_match* out,
                                         size_t* count);

/* ---- averaged content vectors ------------------------------------------ */

typedef struct a2v_wordvecs a2v_wordvecs;

/* Text format: `token v0 v1 ...` per line; an optional leading `count dim`
 * line is skipped. */
A2V_API a2v_status a2v_wordvecs_open(const char* path, a2v_wordvecs** out);
A2V_API void a2v_wordvecs_close(a2v_wordvecs* wv);
A2V_API int a2v_wordvecs_dim(const a2v_wordvecs* wv);

/* Averages token vectors over each document's title + description
 * (content CSV: asset_id,title,description) and writes an embedding CSV. */
A2V_API a2v_status a2v_embed_content(const a2v_wordvecs* wv, const char* content_csv,
                                     const char* out_csv);

/* ---- evaluation --------------------------------------------------------- */

typedef struct a2v_eval_options {
  const char* representation; /* asset2vec | avg_content | ensemble | instructor */
  const char* model;          /* baseline | glm | mlp */
  int folds;                  /* default 5 */
  int hidden;                 /* MLP hidden units, default 8 */
  double learning_rate;       /* default 0.05 */
  int max_epochs;             /* default 5000 */
  int patience;               /* default 50 */
  uint64_t seed;
} a2v_eval_options;

A2V_API void a2v_eval_options_init(a2v_eval_options* opts);

/* Cross-validates one representation/model pair on the dataset's labels and
 * writes the report JSON (per-fold RMSE, pooled per-asset errors, config).
 * embedding is required for asset2vec/ensemble; wordvecs + content_csv for
 * avg_content/ensemble; instructor_csv for instructor. kde_csv (optional,
 * may be NULL) receives the absolute-error density curve. */
A2V_API a2v_status a2v_evaluate(const a2v_dataset* ds, const a2v_embedding* embedding,
                                const a2v_wordvecs* wordvecs, const char* content_csv,
                                const char* instructor_csv, const a2v_eval_options* opts,
                                const char* report_json_path, const char* kde_csv_path);

/* ---- 2-d layout ---------------------------------------------------------- */

typedef struct a2v_tsne_options {
  double perplexity; /* default 30, must be < (n-1)/3 */
  double theta;      /* Barnes-Hut accuracy, 0 = exact, default 0.5 */
  int iterations;    /* default 1000 */
  uint64_t seed;
} a2v_tsne_options;

A2V_API void a2v_tsne_options_init(a2v_tsne_options* opts);

/* Projects the embedding to 2-d and writes a layout CSV
 * (asset_id,x,y,popularity) and an SVG scatter colored by log(1+popularity).
 * labels_csv is optional; assets without a label are drawn with popularity
 * 0. Either output path may be NULL to skip it. */
A2V_API a2v_status a2v_tsne_layout(const a2v_embedding* emb, const char* labels_csv,
                                   const a2v_tsne_options* opts, const char* out_csv,
                                   const char* out_svg);

/* ---- synthetic course ----------------------------------------------------- */

typedef struct a2v_synth_options {
  int n_students;        /* default 100 */
  int n_assets;          /* default 3000; n_blocks must divide it */
  int n_blocks;          /* default 10 */
  int n_ghosts;          /* default 300 under-interacted decoys */
  double block_affinity; /* default 0.9, in [0.5, 1] */
  double pop_bias;       /* log-rate intercept, default 1.0 */
  double content_topic_mix; /* 0 = block-topical text, 1 = uninformative, default 0.3 */
  uint64_t seed;
} a2v_synth_options;

A2V_API void a2v_synth_options_init(a2v_synth_options* opts);

/* Writes events.csv, creators.csv, content.csv, instructor.csv,
 * word_vectors.txt and ground_truth.json into out_dir, byte-identical for a
 * fixed seed. */
A2V_API a2v_status a2v_synth_generate(const a2v_synth_options* opts, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* A2V_H */
