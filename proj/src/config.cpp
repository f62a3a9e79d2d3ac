#include "config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace sentibench {

using nlohmann::json;

void ExperimentConfig::override_seeds(std::uint64_t seed) {
    ml.seed = seed;
    ml.logistic.seed = seed;
    ml.svm.seed = seed;
    dl.train.seed = seed;
}

namespace {

json train_config_to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"l2", c.l2},
            {"seed", c.seed},
            {"shuffle", c.shuffle}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shuffle = j.at("shuffle").get<bool>();
    return c;
}

} // namespace

std::string ExperimentConfig::to_json_string() const {
    json j;
    j["format_version"] = 1;
    j["kind"] = "experiment_config";
    j["dataset_csv"] = dataset_csv;
    j["output_dir"] = output_dir;
    j["ml"] = {
        {"seed", ml.seed},
        {"split", {{"train", ml.train_fraction}, {"test", ml.test_fraction}}},
        {"tfidf", {{"max_size", ml.tfidf_max_size}, {"l2_normalize", ml.tfidf_l2_normalize}}},
        {"naive_bayes", {{"smoothing", ml.nb_smoothing}}},
        {"logistic_regression", train_config_to_json(ml.logistic)},
        {"svm", train_config_to_json(ml.svm)},
    };
    j["dl"] = {
        {"subset_size", dl.subset_size},
        {"split",
         {{"train", dl.train_fraction},
          {"validation", dl.validation_fraction},
          {"test", dl.test_fraction}}},
        {"vocab_size", dl.train.vocab_size},
        {"embedding_dim", dl.train.embedding_dim},
        {"hidden_dim", dl.train.hidden_dim},
        {"layers", dl.train.layers},
        {"dropout", dl.train.dropout},
        {"max_len", dl.train.max_len},
        {"batch_size", dl.train.batch_size},
        {"learning_rate", dl.train.learning_rate},
        {"epochs", dl.train.epochs},
        {"patience", dl.train.patience},
        {"seed", dl.train.seed},
    };
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    try {
        if (j.value("format_version", 0) != 1) throw ConfigError("unsupported config format version");

        ExperimentConfig c;
        c.dataset_csv = j.at("dataset_csv").get<std::string>();
        c.output_dir = j.at("output_dir").get<std::string>();

        const auto& ml = j.at("ml");
        c.ml.seed = ml.at("seed").get<std::uint64_t>();
        c.ml.train_fraction = ml.at("split").at("train").get<double>();
        c.ml.test_fraction = ml.at("split").at("test").get<double>();
        c.ml.tfidf_max_size = ml.at("tfidf").at("max_size").get<std::size_t>();
        c.ml.tfidf_l2_normalize = ml.at("tfidf").at("l2_normalize").get<bool>();
        c.ml.nb_smoothing = ml.at("naive_bayes").at("smoothing").get<double>();
        c.ml.logistic = train_config_from_json(ml.at("logistic_regression"));
        c.ml.svm = train_config_from_json(ml.at("svm"));

        const auto& dl = j.at("dl");
        c.dl.subset_size = dl.at("subset_size").get<std::size_t>();
        c.dl.train_fraction = dl.at("split").at("train").get<double>();
        c.dl.validation_fraction = dl.at("split").at("validation").get<double>();
        c.dl.test_fraction = dl.at("split").at("test").get<double>();
        c.dl.train.vocab_size = dl.at("vocab_size").get<std::size_t>();
        c.dl.train.embedding_dim = dl.at("embedding_dim").get<int>();
        c.dl.train.hidden_dim = dl.at("hidden_dim").get<int>();
        c.dl.train.layers = dl.at("layers").get<int>();
        c.dl.train.dropout = dl.at("dropout").get<double>();
        c.dl.train.max_len = dl.at("max_len").get<int>();
        c.dl.train.batch_size = dl.at("batch_size").get<int>();
        c.dl.train.learning_rate = dl.at("learning_rate").get<double>();
        c.dl.train.epochs = dl.at("epochs").get<int>();
        c.dl.train.patience = dl.at("patience").get<int>();
        c.dl.train.seed = dl.at("seed").get<std::uint64_t>();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is missing required fields: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config file: " + path);
    out << to_json_string() << '\n';
    if (!out) throw IoError("failed writing config file: " + path);
}

} // namespace sentibench
