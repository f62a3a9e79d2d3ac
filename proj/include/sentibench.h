/* sentibench — sentiment-classification benchmark harness.
 *
 * C interface over the C++ core. All functions return sb_status; on any
 * nonzero status sb_last_error() holds a human-readable message for the
 * calling thread. Paths are UTF-8, NUL-terminated.
 */
#ifndef SENTIBENCH_H
#define SENTIBENCH_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sb_status {
    SB_OK = 0,
    SB_ERROR_CONFIG = 2,  /* bad configuration / arguments */
    SB_ERROR_DATA = 3,    /* dataset, model or report contents invalid */
    SB_ERROR_NUMERIC = 4, /* training diverged or produced non-finite values */
    SB_ERROR_IO = 5,      /* filesystem failure */
    SB_ERROR_INTERNAL = 6
} sb_status;

const char* sb_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* sb_last_error(void);

/* Writes a config file populated with the benchmark defaults. Refuses to
 * overwrite an existing file. */
sb_status sb_config_init(const char* config_path);

/* For the commands below: out_dir NULL or empty means the config's
 * output_dir; seed_override >= 0 replaces every pipeline seed. */
sb_status sb_prepare(const char* config_path, const char* out_dir, long long seed_override);
sb_status sb_train_ml(const char* config_path, const char* out_dir, long long seed_override);

/* variant is "bilstm" or "bilstm-attn". */
sb_status sb_train_dl(const char* config_path, const char* variant, const char* out_dir,
                      long long seed_override);

/* Re-evaluates a saved model on its pipeline's test partition. */
sb_status sb_evaluate(const char* config_path, const char* model_path, const char* out_dir);

/* Merges report files into comparison.csv / comparison.json under out_dir,
 * ranked by accuracy (descending, ties by model name). */
sb_status sb_compare(const char* const* report_paths, size_t count, const char* out_dir);

/* Single-text prediction through the exact training-time feature path.
 * The paired tfidf.json / dl_vocab.json must sit next to the model file and
 * match the hash stored in it. */
typedef struct sb_predictor sb_predictor;

sb_status sb_predictor_open(const char* model_path, sb_predictor** out_predictor);

/* out_label: 1 positive / 0 negative. out_score is the decision-function
 * value, out_probability its sigmoid. Output pointers may be NULL. */
sb_status sb_predictor_predict(sb_predictor* predictor, const char* text, int* out_label,
                               double* out_score, double* out_probability);

/* "naive_bayes", "logistic_regression", "svm", "bilstm" or "bilstm-attn". */
const char* sb_predictor_model_kind(const sb_predictor* predictor);

const char* sb_label_name(int label);

void sb_predictor_close(sb_predictor* predictor);

#ifdef __cplusplus
}
#endif

#endif /* SENTIBENCH_H */
