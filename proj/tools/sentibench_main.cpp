// Command-line front end; everything goes through the shared library's C
// API so the binary exercises the same surface as external integrations.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentibench.h"

namespace {

int finish(sb_status status) {
    if (status != SB_OK) std::fprintf(stderr, "error: %s\n", sb_last_error());
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentibench — TF-IDF linear models vs BiLSTM sentiment benchmark"};
    app.require_subcommand(1);

    std::string config_path = "sentibench.json";
    std::string out_dir;
    long long seed = -1;
    app.add_option("--config", config_path, "experiment config file")->capture_default_str();
    app.add_option("--out", out_dir, "output directory (default: config's output_dir)");
    app.add_option("--seed", seed, "override every pipeline seed");

    auto* init = app.add_subcommand("init", "write a config file with the benchmark defaults");
    auto* prepare =
        app.add_subcommand("prepare", "ingest the dataset, write the split manifest");
    auto* train_ml =
        app.add_subcommand("train-ml", "train and evaluate Naive Bayes, logistic regression, SVM");

    auto* train_dl = app.add_subcommand("train-dl", "train and evaluate a sequence model");
    std::string variant;
    train_dl->add_option("--variant", variant, "bilstm or bilstm-attn")
        ->required()
        ->check(CLI::IsMember({"bilstm", "bilstm-attn"}));

    auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a saved model on its test split");
    std::string eval_model;
    evaluate->add_option("--model", eval_model, "model file")->required();

    auto* compare = app.add_subcommand("compare", "merge reports into a ranking (CSV + JSON)");
    std::vector<std::string> report_paths;
    compare->add_option("reports", report_paths, "report JSON files")->required();

    auto* predict = app.add_subcommand("predict", "classify a single text with a saved model");
    std::string predict_model;
    std::string text;
    predict->add_option("--model", predict_model, "model file")->required();
    predict->add_option("text", text, "review text")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : static_cast<int>(SB_ERROR_CONFIG);
    }

    if (init->parsed()) {
        return finish(sb_config_init(config_path.c_str()));
    }
    if (prepare->parsed()) {
        return finish(sb_prepare(config_path.c_str(), out_dir.c_str(), seed));
    }
    if (train_ml->parsed()) {
        return finish(sb_train_ml(config_path.c_str(), out_dir.c_str(), seed));
    }
    if (train_dl->parsed()) {
        return finish(sb_train_dl(config_path.c_str(), variant.c_str(), out_dir.c_str(), seed));
    }
    if (evaluate->parsed()) {
        return finish(sb_evaluate(config_path.c_str(), eval_model.c_str(), out_dir.c_str()));
    }
    if (compare->parsed()) {
        if (out_dir.empty()) out_dir = ".";
        std::vector<const char*> paths;
        paths.reserve(report_paths.size());
        for (const auto& p : report_paths) paths.push_back(p.c_str());
        return finish(sb_compare(paths.data(), paths.size(), out_dir.c_str()));
    }
    if (predict->parsed()) {
        sb_predictor* predictor = nullptr;
        sb_status status = sb_predictor_open(predict_model.c_str(), &predictor);
        if (status != SB_OK) return finish(status);
        int label = 0;
        double score = 0.0, probability = 0.0;
        status = sb_predictor_predict(predictor, text.c_str(), &label, &score, &probability);
        if (status == SB_OK) {
            std::printf("%s (score %.6f, probability %.4f)\n", sb_label_name(label), score,
                        probability);
        }
        sb_predictor_close(predictor);
        return finish(status);
    }
    return static_cast<int>(SB_ERROR_CONFIG);
}
