#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "sentibench.h"

#include "commands.hpp"
#include "config.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace sentibench;

namespace {

struct Workspace {
    fs::path root;

    Workspace() {
        static int counter = 0;
        root = fs::temp_directory_path() /
               ("sentibench_capi_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }

    std::string path(const std::string& name) const { return (root / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// small-but-learnable experiment over the synthetic corpus
void write_test_config(const Workspace& ws, const std::string& config_path) {
    ExperimentConfig config;
    config.dataset_csv = ws.path("reviews.csv");
    config.output_dir = ws.path("out");
    config.ml.tfidf_max_size = 2000;
    config.ml.logistic.epochs = 8;
    config.ml.svm.epochs = 8;
    config.dl.subset_size = 200;
    config.dl.train.vocab_size = 300;
    config.dl.train.embedding_dim = 8;
    config.dl.train.hidden_dim = 8;
    config.dl.train.max_len = 16;
    config.dl.train.batch_size = 32;
    config.dl.train.epochs = 2;
    config.save(config_path);
}

std::map<std::string, std::string> snapshot_dir(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files[entry.path().filename().string()] = read_file(entry.path().string());
        }
    }
    return files;
}

} // namespace

TEST_CASE("config init writes defaults and refuses to overwrite") {
    Workspace ws;
    const std::string config_path = ws.path("config.json");
    REQUIRE(sb_config_init(config_path.c_str()) == SB_OK);

    const ExperimentConfig config = ExperimentConfig::load(config_path);
    CHECK(config.ml.seed == 42);
    CHECK(config.ml.train_fraction == 0.8);
    CHECK(config.dl.subset_size == 10000);
    CHECK(config.dl.train.vocab_size == 5000);
    CHECK(config.dl.train.embedding_dim == 64);
    CHECK(config.dl.train.hidden_dim == 64);
    CHECK(config.dl.train.dropout == 0.3);
    CHECK(config.dl.train.max_len == 80);
    CHECK(config.dl.train.batch_size == 128);
    CHECK(config.dl.train.learning_rate == 0.001);
    CHECK(config.dl.train.epochs == 3);
    CHECK(config.dl.train.patience == 3);

    CHECK(sb_config_init(config_path.c_str()) == SB_ERROR_IO);
    CHECK(std::string(sb_last_error()).find("refusing") != std::string::npos);
}

TEST_CASE("full pipeline over the C API on a synthetic corpus") {
    Workspace ws;
    write_file(ws.path("reviews.csv"), testsupport::synthetic_csv({600, 7, 0.5}));
    const std::string config_path = ws.path("config.json");
    write_test_config(ws, config_path);
    const std::string out = ws.path("out");

    SUBCASE("training before prepare is rejected") {
        CHECK(sb_train_ml(config_path.c_str(), nullptr, -1) == SB_ERROR_DATA);
        CHECK(std::string(sb_last_error()).find("prepare") != std::string::npos);
    }

    REQUIRE(sb_prepare(config_path.c_str(), nullptr, -1) == SB_OK);
    const nlohmann::json manifest = nlohmann::json::parse(read_file(out + "/manifest.json"));
    CHECK(manifest.at("rows") == 600);
    CHECK(manifest.at("labels").at("positive") == 300);
    CHECK(manifest.at("ml").at("partitions").at("train") == 480);
    CHECK(manifest.at("ml").at("partitions").at("test") == 120);
    CHECK(manifest.at("dl").at("partitions").at("train") == 140);
    CHECK(manifest.at("dl").at("partitions").at("validation") == 20);
    CHECK(manifest.at("dl").at("partitions").at("test") == 40);

    REQUIRE(sb_train_ml(config_path.c_str(), nullptr, -1) == SB_OK);
    for (const char* name : {"naive_bayes", "logistic_regression", "svm"}) {
        CHECK(fs::exists(out + "/model_" + std::string(name) + ".json"));
        const nlohmann::json report =
            nlohmann::json::parse(read_file(out + "/report_" + std::string(name) + ".json"));
        // the synthetic corpus is nearly separable; anything sane clears 0.7
        CHECK(report.at("accuracy").get<double>() > 0.7);
    }
    CHECK(fs::exists(out + "/tfidf.json"));
    CHECK(fs::exists(out + "/table_ml.csv"));

    REQUIRE(sb_train_dl(config_path.c_str(), "bilstm", nullptr, -1) == SB_OK);
    REQUIRE(sb_train_dl(config_path.c_str(), "bilstm-attn", nullptr, -1) == SB_OK);
    const nlohmann::json history =
        nlohmann::json::parse(read_file(out + "/history_bilstm.json"));
    CHECK(history.at("epochs").size() == 2);
    const std::string dl_table = read_file(out + "/table_dl.csv");
    CHECK(dl_table.find("bilstm") != std::string::npos);
    CHECK(dl_table.find("bilstm-attn") != std::string::npos);

    SUBCASE("compare merges and ranks the five reports") {
        std::vector<std::string> reports = {
            out + "/report_svm.json", out + "/report_logistic_regression.json",
            out + "/report_naive_bayes.json", out + "/report_bilstm.json",
            out + "/report_bilstm-attn.json"};
        std::vector<const char*> paths;
        for (const auto& r : reports) paths.push_back(r.c_str());
        REQUIRE(sb_compare(paths.data(), paths.size(), out.c_str()) == SB_OK);

        const nlohmann::json comparison = nlohmann::json::parse(read_file(out + "/comparison.json"));
        REQUIRE(comparison.at("ranking").size() == 5);
        double previous = 2.0;
        for (const auto& row : comparison.at("ranking")) {
            const double accuracy = row.at("accuracy").get<double>();
            CHECK(accuracy <= previous);
            previous = accuracy;
        }
        const std::string csv = read_file(out + "/comparison.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 6); // header + five rows

        // a report from a different format version is rejected
        nlohmann::json tampered = nlohmann::json::parse(read_file(reports[0]));
        tampered["format_version"] = 2;
        write_file(ws.path("tampered.json"), tampered.dump());
        const std::string tampered_path = ws.path("tampered.json");
        const char* bad[] = {tampered_path.c_str()};
        CHECK(sb_compare(bad, 1, out.c_str()) == SB_ERROR_DATA);
    }

    SUBCASE("evaluate reproduces the training-time report") {
        const std::string model_path = out + "/model_svm.json";
        REQUIRE(sb_evaluate(config_path.c_str(), model_path.c_str(), nullptr) == SB_OK);
        const nlohmann::json fresh = nlohmann::json::parse(read_file(out + "/report_eval_svm.json"));
        const nlohmann::json original = nlohmann::json::parse(read_file(out + "/report_svm.json"));
        CHECK(fresh.at("accuracy") == original.at("accuracy"));
        CHECK(fresh.at("confusion") == original.at("confusion"));
    }

    SUBCASE("prediction goes through the training feature path") {
        sb_predictor* predictor = nullptr;
        const std::string model_path = out + "/model_logistic_regression.json";
        REQUIRE(sb_predictor_open(model_path.c_str(), &predictor) == SB_OK);
        CHECK(std::string(sb_predictor_model_kind(predictor)) == "logistic_regression");

        int label = -1;
        double score = 0.0, probability = 0.0;
        const char* text = "A Superb, delightful film! <br /> wonderful acting http://x.y/z";
        REQUIRE(sb_predictor_predict(predictor, text, &label, &score, &probability) == SB_OK);
        CHECK(label == 1);
        CHECK(probability > 0.5);
        CHECK(std::string(sb_label_name(label)) == "positive");

        // equals the in-process batch path on the same text
        const TfidfTransformer transformer =
            TfidfTransformer::from_json_string(read_file(out + "/tfidf.json"));
        const LoadedLinearModel loaded =
            linear_model_from_json_string(read_file(model_path));
        const LinearPrediction oracle =
            linear_predict(loaded.model, transformer.transform(tokenize(clean_text(text))));
        CHECK(score == oracle.score);
        CHECK(label == oracle.label);

        // empty input still yields a label (bias-only decision)
        REQUIRE(sb_predictor_predict(predictor, "", &label, &score, &probability) == SB_OK);
        CHECK((label == 0 || label == 1));
        CHECK(score == doctest::Approx(loaded.model.bias).epsilon(1e-15));

        CHECK(sb_predictor_predict(predictor, nullptr, &label, &score, &probability) ==
              SB_ERROR_CONFIG);
        sb_predictor_close(predictor);
    }

    SUBCASE("dl predictor agrees with the batch evaluation path") {
        sb_predictor* predictor = nullptr;
        const std::string model_path = out + "/model_bilstm-attn.json";
        REQUIRE(sb_predictor_open(model_path.c_str(), &predictor) == SB_OK);
        CHECK(std::string(sb_predictor_model_kind(predictor)) == "bilstm-attn");

        const char* text = "dreadful tedious awful plot, wooden acting";
        int label = -1;
        double score = 0.0;
        REQUIRE(sb_predictor_predict(predictor, text, &label, &score, nullptr) == SB_OK);

        const Vocabulary vocab = dl_vocab_from_json_string(read_file(out + "/dl_vocab.json"));
        const LoadedBiLstm loaded = bilstm_from_json_string(read_file(model_path));
        std::vector<LabeledDocument> doc(1);
        doc[0].tokens = tokenize(clean_text(text));
        const Vector logits =
            forward_logits(encode_batch(doc, vocab, loaded.config.max_len), loaded.model);
        CHECK(score == logits(0));
        CHECK(label == (logits(0) > 0.0 ? 1 : 0));
        sb_predictor_close(predictor);
    }

    SUBCASE("hash mismatches are incompatibility errors") {
        // re-pair the model with a transformer fitted on different data
        fs::create_directories(ws.path("mismatch"));
        fs::copy_file(out + "/model_svm.json", ws.path("mismatch/model_svm.json"));
        TfidfTransformer other;
        other.vocab = fit_vocabulary({{"alpha", "beta"}, {"alpha"}}, 10);
        write_file(ws.path("mismatch/tfidf.json"), other.to_json_string());

        sb_predictor* predictor = nullptr;
        const std::string mismatched = ws.path("mismatch/model_svm.json");
        CHECK(sb_predictor_open(mismatched.c_str(), &predictor) == SB_ERROR_DATA);
        CHECK(std::string(sb_last_error()).find("hash mismatch") != std::string::npos);
        CHECK(predictor == nullptr);
    }
}

TEST_CASE("identical configs produce byte-identical artifacts") {
    Workspace ws;
    write_file(ws.path("reviews.csv"), testsupport::synthetic_csv({400, 11, 0.5}));
    const std::string config_path = ws.path("config.json");
    write_test_config(ws, config_path);
    const std::string out = ws.path("out");

    auto run_everything = [&] {
        REQUIRE(sb_prepare(config_path.c_str(), nullptr, -1) == SB_OK);
        REQUIRE(sb_train_ml(config_path.c_str(), nullptr, -1) == SB_OK);
        REQUIRE(sb_train_dl(config_path.c_str(), "bilstm", nullptr, -1) == SB_OK);
    };
    run_everything();
    const auto first = snapshot_dir(out);
    REQUIRE(!first.empty());
    run_everything();
    const auto second = snapshot_dir(out);

    REQUIRE(first.size() == second.size());
    for (const auto& [name, content] : first) {
        CAPTURE(name);
        REQUIRE(second.count(name) == 1);
        CHECK(content == second.at(name));
    }

    // a different seed changes the trained artifacts
    REQUIRE(sb_train_ml(config_path.c_str(), nullptr, 43) == SB_OK);
    const auto overridden = snapshot_dir(out);
    CHECK(overridden.at("model_svm.json") != first.at("model_svm.json"));
}

TEST_CASE("error codes distinguish config, data and io failures") {
    Workspace ws;

    CHECK(sb_prepare(ws.path("missing.json").c_str(), nullptr, -1) == SB_ERROR_IO);
    CHECK(sb_prepare(nullptr, nullptr, -1) == SB_ERROR_CONFIG);
    CHECK(sb_train_dl(nullptr, "bilstm", nullptr, -1) == SB_ERROR_CONFIG);

    // bad variant string
    const std::string config_path = ws.path("config.json");
    write_file(ws.path("reviews.csv"), testsupport::synthetic_csv({40, 3, 0.5}));
    write_test_config(ws, config_path);
    CHECK(sb_train_dl(config_path.c_str(), "gru", nullptr, -1) == SB_ERROR_CONFIG);

    // unknown label in the dataset is a data error with row context
    write_file(ws.path("reviews.csv"), "review,sentiment\nfine,positive\nmeh,neutral\n");
    CHECK(sb_prepare(config_path.c_str(), nullptr, -1) == SB_ERROR_DATA);
    CHECK(std::string(sb_last_error()).find("row 1") != std::string::npos);

    // malformed config JSON
    write_file(config_path, "{not json");
    CHECK(sb_prepare(config_path.c_str(), nullptr, -1) == SB_ERROR_CONFIG);
}
