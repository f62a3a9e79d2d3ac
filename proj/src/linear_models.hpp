#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "activations.hpp"
#include "tfidf.hpp"

namespace sentibench {

struct TrainExample {
    SparseVector features;
    int label = 0; // 0 or 1
};

enum class LossKind {
    logistic,
    hinge,
};

const char* loss_kind_name(LossKind kind);

struct TrainConfig {
    std::size_t epochs = 10;
    double learning_rate = 0.1;
    double l2 = 1e-4;
    std::uint64_t seed = 42;
    bool shuffle = true;

    void validate() const;
};

struct LinearModel {
    std::vector<double> weights; // length V
    double bias = 0.0;
    LossKind loss_kind = LossKind::logistic;
};

struct LinearPrediction {
    int label = 0;
    double score = 0.0;       // w.x + b
    double probability = 0.0; // sigmoid(score); meaningful for logistic loss
};

// Multinomial Naive Bayes over nonnegative feature weights treated as
// fractional counts, with additive smoothing.
struct NaiveBayesModel {
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> log_likelihood; // per class, length V
    double smoothing = 1.0;
};

struct NbPrediction {
    int label = 0;
    std::array<double, 2> log_posterior{};
};

NaiveBayesModel train_naive_bayes(std::span<const TrainExample> train, std::size_t dimension,
                                  double smoothing);

NbPrediction nb_predict(const NaiveBayesModel& model, const SparseVector& x);

// Plain SGD on the regularized per-example objective
//   loss(w,b; x,y) + (l2/2)*|w|^2
// with logistic or hinge loss (bias unregularized). Deterministic in
// cfg.seed; epochs are reshuffled when cfg.shuffle is set.
LinearModel train_sgd(std::span<const TrainExample> train, std::size_t dimension,
                      const TrainConfig& cfg, LossKind loss_kind);

LinearPrediction linear_predict(const LinearModel& model, const SparseVector& x);

// Analytic per-example gradient of the regularized objective, dense form.
// This is the quantity the trainer steps along; tests compare it against
// central finite differences.
void per_example_gradient(const LinearModel& model, const SparseVector& x, int label, double l2,
                          std::vector<double>& grad_weights, double& grad_bias);

// Regularized per-example objective value, for finite-difference probes.
double per_example_loss(const LinearModel& model, const SparseVector& x, int label, double l2);

// ---------------------------------------------------------------------------
// serialization (round-trip exact for decision outputs)

std::string linear_model_to_json_string(const LinearModel& model, const TrainConfig& cfg,
                                        const std::string& transformer_hash);
struct LoadedLinearModel {
    LinearModel model;
    TrainConfig config;
    std::string transformer_hash;
};
LoadedLinearModel linear_model_from_json_string(const std::string& text);

std::string nb_model_to_json_string(const NaiveBayesModel& model,
                                    const std::string& transformer_hash);
struct LoadedNbModel {
    NaiveBayesModel model;
    std::string transformer_hash;
};
LoadedNbModel nb_model_from_json_string(const std::string& text);

} // namespace sentibench
