#include "linear_models.hpp"

#include <cmath>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace sentibench {

const char* loss_kind_name(LossKind kind) {
    return kind == LossKind::logistic ? "logistic" : "hinge";
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (l2 < 0.0) throw ConfigError("l2 must be nonnegative");
}

NaiveBayesModel train_naive_bayes(std::span<const TrainExample> train, std::size_t dimension,
                                  double smoothing) {
    if (smoothing <= 0.0) throw ConfigError("NB smoothing must be positive");

    std::array<std::uint64_t, 2> class_counts{0, 0};
    NaiveBayesModel model;
    model.smoothing = smoothing;
    for (auto& ll : model.log_likelihood) ll.assign(dimension, 0.0);

    // accumulate per-class feature mass (weights act as fractional counts)
    std::array<double, 2> class_mass{0.0, 0.0};
    for (const auto& ex : train) {
        const auto c = static_cast<std::size_t>(ex.label);
        ++class_counts[c];
        for (const auto& e : ex.features) {
            if (e.weight < 0.0) throw DataError("Naive Bayes requires nonnegative feature weights");
            model.log_likelihood[c][e.index] += e.weight;
            class_mass[c] += e.weight;
        }
    }
    if (class_counts[0] == 0 || class_counts[1] == 0) {
        throw DataError("Naive Bayes training needs both classes present");
    }

    const double total = static_cast<double>(train.size());
    for (int c = 0; c < 2; ++c) {
        model.log_prior[static_cast<std::size_t>(c)] =
            std::log(static_cast<double>(class_counts[static_cast<std::size_t>(c)]) / total);
        const double denom = class_mass[static_cast<std::size_t>(c)] +
                             smoothing * static_cast<double>(dimension);
        for (auto& v : model.log_likelihood[static_cast<std::size_t>(c)]) {
            v = std::log((v + smoothing) / denom);
        }
    }
    return model;
}

NbPrediction nb_predict(const NaiveBayesModel& model, const SparseVector& x) {
    NbPrediction p;
    for (int c = 0; c < 2; ++c) {
        const auto& ll = model.log_likelihood[static_cast<std::size_t>(c)];
        double acc = model.log_prior[static_cast<std::size_t>(c)];
        for (const auto& e : x) acc += e.weight * ll[e.index];
        p.log_posterior[static_cast<std::size_t>(c)] = acc;
    }
    p.label = p.log_posterior[1] > p.log_posterior[0] ? 1 : 0; // tie -> class 0
    return p;
}

namespace {

void check_finite(const LinearModel& model, std::size_t epoch) {
    for (double w : model.weights) {
        if (!std::isfinite(w)) {
            throw NumericError("SGD diverged at epoch " + std::to_string(epoch));
        }
    }
    if (!std::isfinite(model.bias)) {
        throw NumericError("SGD diverged at epoch " + std::to_string(epoch));
    }
}

} // namespace

LinearModel train_sgd(std::span<const TrainExample> train, std::size_t dimension,
                      const TrainConfig& cfg, LossKind loss_kind) {
    cfg.validate();
    if (train.empty()) throw DataError("SGD training set is empty");

    LinearModel model;
    model.loss_kind = loss_kind;
    model.weights.assign(dimension, 0.0);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.seed);

    const double lr = cfg.learning_rate;
    const double decay = 1.0 - lr * cfg.l2;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) rng.shuffle(order);
        for (const std::size_t idx : order) {
            const auto& ex = train[idx];
            double score = model.bias;
            for (const auto& e : ex.features) score += e.weight * model.weights[e.index];

            // err is dLoss/dscore; the weight update below is exactly
            // w <- (1 - lr*l2) w - lr*err*x, the regularized gradient step
            double err;
            if (loss_kind == LossKind::logistic) {
                err = sigmoid(score) - static_cast<double>(ex.label);
            } else {
                const double y = ex.label == 1 ? 1.0 : -1.0;
                err = (y * score < 1.0) ? -y : 0.0;
            }
            if (cfg.l2 != 0.0) {
                for (auto& w : model.weights) w *= decay;
            }
            if (err != 0.0) {
                for (const auto& e : ex.features) model.weights[e.index] -= lr * err * e.weight;
                model.bias -= lr * err;
            }
        }
        check_finite(model, epoch);
    }
    return model;
}

LinearPrediction linear_predict(const LinearModel& model, const SparseVector& x) {
    LinearPrediction p;
    p.score = model.bias + dot(x, model.weights);
    p.label = p.score > 0.0 ? 1 : 0; // score == 0 -> class 0
    p.probability = sigmoid(p.score);
    return p;
}

void per_example_gradient(const LinearModel& model, const SparseVector& x, int label, double l2,
                          std::vector<double>& grad_weights, double& grad_bias) {
    grad_weights.assign(model.weights.size(), 0.0);
    const double score = model.bias + dot(x, model.weights);

    double err;
    if (model.loss_kind == LossKind::logistic) {
        err = sigmoid(score) - static_cast<double>(label);
    } else {
        const double y = label == 1 ? 1.0 : -1.0;
        err = (y * score < 1.0) ? -y : 0.0;
    }
    for (std::size_t i = 0; i < model.weights.size(); ++i) grad_weights[i] = l2 * model.weights[i];
    for (const auto& e : x) grad_weights[e.index] += err * e.weight;
    grad_bias = err;
}

double per_example_loss(const LinearModel& model, const SparseVector& x, int label, double l2) {
    const double score = model.bias + dot(x, model.weights);
    double loss;
    if (model.loss_kind == LossKind::logistic) {
        // -[y log p + (1-y) log(1-p)] in the numerically stable logit form
        const double z = score;
        loss = std::max(z, 0.0) - z * static_cast<double>(label) + std::log1p(std::exp(-std::abs(z)));
    } else {
        const double y = label == 1 ? 1.0 : -1.0;
        loss = std::max(0.0, 1.0 - y * score);
    }
    double reg = 0.0;
    for (double w : model.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

// ---------------------------------------------------------------------------
// serialization

std::string linear_model_to_json_string(const LinearModel& model, const TrainConfig& cfg,
                                        const std::string& transformer_hash) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = model.loss_kind == LossKind::logistic ? "logistic_regression" : "svm";
    j["dimension"] = model.weights.size();
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["train_config"] = {{"epochs", cfg.epochs},
                         {"learning_rate", cfg.learning_rate},
                         {"l2", cfg.l2},
                         {"seed", cfg.seed},
                         {"shuffle", cfg.shuffle}};
    j["transformer_hash"] = transformer_hash;
    return j.dump();
}

LoadedLinearModel linear_model_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind != "logistic_regression" && kind != "svm") throw DataError("not a linear model file");
    if (j.value("format_version", 0) != 1) throw DataError("unsupported model format version");

    LoadedLinearModel loaded;
    loaded.model.loss_kind = kind == "svm" ? LossKind::hinge : LossKind::logistic;
    loaded.model.weights = j.at("weights").get<std::vector<double>>();
    loaded.model.bias = j.at("bias").get<double>();
    if (loaded.model.weights.size() != j.at("dimension").get<std::size_t>()) {
        throw DataError("model weight vector does not match its declared dimension");
    }
    const auto& c = j.at("train_config");
    loaded.config.epochs = c.at("epochs").get<std::size_t>();
    loaded.config.learning_rate = c.at("learning_rate").get<double>();
    loaded.config.l2 = c.at("l2").get<double>();
    loaded.config.seed = c.at("seed").get<std::uint64_t>();
    loaded.config.shuffle = c.at("shuffle").get<bool>();
    loaded.transformer_hash = j.value("transformer_hash", "");
    return loaded;
}

std::string nb_model_to_json_string(const NaiveBayesModel& model,
                                    const std::string& transformer_hash) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "naive_bayes";
    j["dimension"] = model.log_likelihood[0].size();
    j["log_prior"] = model.log_prior;
    j["log_likelihood"] = {model.log_likelihood[0], model.log_likelihood[1]};
    j["smoothing"] = model.smoothing;
    j["transformer_hash"] = transformer_hash;
    return j.dump();
}

LoadedNbModel nb_model_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    if (j.value("kind", "") != "naive_bayes") throw DataError("not a Naive Bayes model file");
    if (j.value("format_version", 0) != 1) throw DataError("unsupported model format version");

    LoadedNbModel loaded;
    const auto prior = j.at("log_prior").get<std::vector<double>>();
    const auto ll = j.at("log_likelihood").get<std::vector<std::vector<double>>>();
    if (prior.size() != 2 || ll.size() != 2 || ll[0].size() != ll[1].size()) {
        throw DataError("Naive Bayes model has inconsistent shapes");
    }
    loaded.model.log_prior = {prior[0], prior[1]};
    loaded.model.log_likelihood = {ll[0], ll[1]};
    loaded.model.smoothing = j.at("smoothing").get<double>();
    loaded.transformer_hash = j.value("transformer_hash", "");
    return loaded;
}

} // namespace sentibench
