#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "sequence_models.hpp"

namespace sentibench {

// The CLI verbs, shared between the C API and the test suites. Every
// artifact a command writes is deterministic for a given config and
// dataset (no timestamps, stable key order, pinned RNGs).

// Cleans, tokenizes, samples and splits, then writes <out>/manifest.json
// with counts, seeds, label distribution and the dataset content hash.
// Returns the manifest path.
std::string cmd_prepare(const ExperimentConfig& config);

struct TrainedModelSummary {
    std::string model;
    std::string model_path;
    std::string report_path;
    MetricsReport metrics;
};

// Fits TF-IDF on the train split and trains/evaluates the three classical
// models. A diverging trainer is reported and skipped without aborting the
// others; if any diverged, a NumericError naming them is thrown at the end.
std::vector<TrainedModelSummary> cmd_train_ml(const ExperimentConfig& config);

TrainedModelSummary cmd_train_dl(const ExperimentConfig& config, BiLstmVariant variant);

// Re-evaluates a saved model on its pipeline's test partition.
TrainedModelSummary cmd_evaluate(const ExperimentConfig& config, const std::string& model_path);

// Merges report files, sorts by accuracy (descending, ties by model name)
// and writes comparison.csv / comparison.json under out_dir.
std::vector<TableRow> cmd_compare(const std::vector<std::string>& report_paths,
                                  const std::string& out_dir);

struct PredictionOutput {
    std::string label;
    double score = 0.0;       // decision-function value (logit / margin / log-posterior gap)
    double probability = 0.0; // sigmoid(score)
    std::string model_kind;
};

// Loads a saved model with its paired transformer/vocabulary (sidecar file
// next to the model, verified against the hash stored in the model) and
// runs single texts through the exact training-time feature path.
class Predictor {
public:
    explicit Predictor(const std::string& model_path);

    PredictionOutput predict(const std::string& text) const;
    const std::string& model_kind() const { return kind_; }

private:
    std::string kind_;
    TfidfTransformer transformer_; // classical models
    NaiveBayesModel nb_;
    LinearModel linear_;
    Vocabulary vocab_; // sequence models
    BiLstmModel dl_;
    int max_len_ = 0;
};

PredictionOutput cmd_predict(const std::string& model_path, const std::string& text);

// helpers shared with the acceptance suite
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace sentibench
