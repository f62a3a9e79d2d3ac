#pragma once

#include <cstdint>
#include <string>

#include "linear_models.hpp"
#include "sequence_models.hpp"

namespace sentibench {

// Benchmark configuration, one human-editable JSON file. Defaults mirror
// the reference experiment: 80:20 split with seed 42 for the classical
// models, a stratified 10k subset split 70/10/20 for the sequence models.
struct MlSection {
    std::uint64_t seed = 42;
    double train_fraction = 0.8;
    double test_fraction = 0.2;
    std::size_t tfidf_max_size = 50000;
    bool tfidf_l2_normalize = true;
    double nb_smoothing = 1.0;
    TrainConfig logistic{};
    TrainConfig svm{};
};

struct DlSection {
    std::size_t subset_size = 10000;
    double train_fraction = 0.7;
    double validation_fraction = 0.1;
    double test_fraction = 0.2;
    DlTrainConfig train{};
};

struct ExperimentConfig {
    std::string dataset_csv = "data/IMDB_Dataset.csv";
    std::string output_dir = "out";
    MlSection ml;
    DlSection dl;

    // replaces every pipeline seed, used by the CLI --seed override
    void override_seeds(std::uint64_t seed);

    std::string to_json_string() const;
    static ExperimentConfig from_json_string(const std::string& text);

    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
};

} // namespace sentibench
