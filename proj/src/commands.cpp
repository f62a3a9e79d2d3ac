#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "hashing.hpp"

namespace sentibench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("failed writing file: " + path);
}

namespace {

struct LoadedCorpus {
    std::vector<LabeledDocument> docs;
    std::string content_hash;
    std::size_t rows = 0;
    std::size_t positives = 0;
    std::size_t duplicates = 0;
    std::size_t empty_after_cleaning = 0;
};

LoadedCorpus load_and_clean(const std::string& csv_path) {
    LoadedCorpus corpus;
    corpus.content_hash = fnv1a64_hex(read_text_file(csv_path));

    auto rows = load_csv(csv_path);
    corpus.rows = rows.size();
    corpus.duplicates = count_duplicate_reviews(rows);
    corpus.docs.reserve(rows.size());
    for (auto& row : rows) {
        LabeledDocument doc;
        doc.label = encode_label(row.label);
        doc.tokens = tokenize(clean_text(row.review.text));
        if (doc.tokens.empty()) ++corpus.empty_after_cleaning;
        if (doc.label == 1) ++corpus.positives;
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

SplitSpec ml_split_spec(const ExperimentConfig& config) {
    return SplitSpec{{{"train", config.ml.train_fraction}, {"test", config.ml.test_fraction}},
                     config.ml.seed,
                     /*stratified=*/true};
}

SplitSpec dl_split_spec(const ExperimentConfig& config) {
    return SplitSpec{{{"train", config.dl.train_fraction},
                      {"validation", config.dl.validation_fraction},
                      {"test", config.dl.test_fraction}},
                     config.dl.train.seed,
                     /*stratified=*/true};
}

// train-* commands require a manifest from the same dataset bytes
void require_manifest(const ExperimentConfig& config, const std::string& content_hash) {
    const std::string path = out_path(config.output_dir, "manifest.json");
    if (!fs::exists(path)) {
        throw DataError("no manifest at " + path + "; run prepare first");
    }
    const json manifest = json::parse(read_text_file(path));
    if (manifest.value("content_hash", "") != content_hash) {
        throw DataError("manifest at " + path + " was prepared from different dataset contents; rerun prepare");
    }
}

json config_echo(const ExperimentConfig& config) { return json::parse(config.to_json_string()); }

json report_to_json(const std::string& model, const MetricsReport& r,
                    const ExperimentConfig& config, const std::string& input_hash) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "report";
    j["model"] = model;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["macro_f1"] = r.macro_f1;
    j["weighted_f1"] = r.weighted_f1;
    j["confusion"] = {{"tp", r.confusion.tp},
                      {"fp", r.confusion.fp},
                      {"fn", r.confusion.fn},
                      {"tn", r.confusion.tn}};
    j["undefined"] = r.undefined_flags;
    j["input_hash"] = input_hash;
    j["config_echo"] = config_echo(config);
    return j;
}

MetricsReport report_from_json(const json& j) {
    MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    const auto precision = j.at("precision").get<std::vector<double>>();
    const auto recall = j.at("recall").get<std::vector<double>>();
    const auto f1 = j.at("f1").get<std::vector<double>>();
    if (precision.size() != 2 || recall.size() != 2 || f1.size() != 2) {
        throw DataError("report has malformed per-class metrics");
    }
    r.precision = {precision[0], precision[1]};
    r.recall = {recall[0], recall[1]};
    r.f1 = {f1[0], f1[1]};
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                   c.at("fn").get<std::uint64_t>(), c.at("tn").get<std::uint64_t>()};
    r.undefined_flags = j.at("undefined").get<std::vector<std::string>>();
    return r;
}

TableRow table_row(const std::string& model, const MetricsReport& r) {
    return TableRow{model, r.accuracy, r.macro_f1, r.weighted_f1};
}

std::vector<int> labels_of(const std::vector<LabeledDocument>& docs) {
    std::vector<int> labels;
    labels.reserve(docs.size());
    for (const auto& d : docs) labels.push_back(d.label);
    return labels;
}

void write_dl_table(const ExperimentConfig& config) {
    std::vector<TableRow> rows;
    for (const char* name : {"bilstm", "bilstm-attn"}) {
        const std::string path = out_path(config.output_dir, std::string("report_") + name + ".json");
        if (!fs::exists(path)) continue;
        const json j = json::parse(read_text_file(path));
        rows.push_back(table_row(name, report_from_json(j)));
    }
    if (rows.empty()) return;
    write_text_file(out_path(config.output_dir, "table_dl.csv"), render_table_csv(rows));
    write_text_file(out_path(config.output_dir, "table_dl.txt"), render_table_text(rows));
}

} // namespace

std::string cmd_prepare(const ExperimentConfig& config) {
    ensure_out_dir(config.output_dir);
    const LoadedCorpus corpus = load_and_clean(config.dataset_csv);

    const DatasetSplit ml_split = split(corpus.docs, ml_split_spec(config));
    const auto dl_subset = stratified_sample(corpus.docs, config.dl.subset_size, config.dl.train.seed);
    const DatasetSplit dl_split = split(dl_subset, dl_split_spec(config));

    json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "manifest";
    manifest["dataset_csv"] = config.dataset_csv;
    manifest["content_hash"] = corpus.content_hash;
    manifest["rows"] = corpus.rows;
    manifest["labels"] = {{"positive", corpus.positives},
                          {"negative", corpus.rows - corpus.positives}};
    manifest["duplicate_reviews"] = corpus.duplicates;
    manifest["empty_after_cleaning"] = corpus.empty_after_cleaning;
    json ml_parts, dl_parts;
    for (std::size_t i = 0; i < ml_split.names.size(); ++i) {
        ml_parts[ml_split.names[i]] = ml_split.partitions[i].size();
    }
    for (std::size_t i = 0; i < dl_split.names.size(); ++i) {
        dl_parts[dl_split.names[i]] = dl_split.partitions[i].size();
    }
    manifest["ml"] = {{"seed", config.ml.seed}, {"partitions", ml_parts}};
    manifest["dl"] = {{"seed", config.dl.train.seed},
                      {"subset_size", config.dl.subset_size},
                      {"partitions", dl_parts}};
    manifest["config_echo"] = config_echo(config);

    const std::string path = out_path(config.output_dir, "manifest.json");
    write_text_file(path, manifest.dump(2) + "\n");

    std::printf("prepared %zu rows (%zu positive / %zu negative), %zu duplicates, manifest %s\n",
                corpus.rows, corpus.positives, corpus.rows - corpus.positives, corpus.duplicates,
                path.c_str());
    return path;
}

std::vector<TrainedModelSummary> cmd_train_ml(const ExperimentConfig& config) {
    ensure_out_dir(config.output_dir);
    const LoadedCorpus corpus = load_and_clean(config.dataset_csv);
    require_manifest(config, corpus.content_hash);

    const DatasetSplit parts = split(corpus.docs, ml_split_spec(config));
    const auto& train_docs = parts.partition("train");
    const auto& test_docs = parts.partition("test");

    TfidfTransformer transformer;
    std::vector<TokenSequence> train_tokens;
    train_tokens.reserve(train_docs.size());
    for (const auto& d : train_docs) train_tokens.push_back(d.tokens);
    transformer.vocab = fit_vocabulary(train_tokens, config.ml.tfidf_max_size);
    transformer.l2_normalize = config.ml.tfidf_l2_normalize;
    train_tokens.clear();
    train_tokens.shrink_to_fit();
    const std::string transformer_hash = transformer.hash();
    write_text_file(out_path(config.output_dir, "tfidf.json"), transformer.to_json_string() + "\n");

    auto vectorize = [&](const std::vector<LabeledDocument>& docs) {
        std::vector<TrainExample> examples;
        examples.reserve(docs.size());
        for (const auto& d : docs) examples.push_back({transformer.transform(d.tokens), d.label});
        return examples;
    };
    const auto train_set = vectorize(train_docs);
    const auto test_set = vectorize(test_docs);
    const auto test_labels = labels_of(test_docs);
    const std::size_t dimension = transformer.vocab.size();

    std::vector<TrainedModelSummary> summaries;
    std::vector<std::string> diverged;
    std::vector<TableRow> rows;

    auto finish_model = [&](const std::string& name, const std::string& model_json,
                            const std::vector<int>& predictions) {
        const MetricsReport metrics = evaluate(predictions, test_labels);
        TrainedModelSummary s;
        s.model = name;
        s.model_path = out_path(config.output_dir, "model_" + name + ".json");
        s.report_path = out_path(config.output_dir, "report_" + name + ".json");
        s.metrics = metrics;
        write_text_file(s.model_path, model_json + "\n");
        write_text_file(s.report_path,
                        report_to_json(name, metrics, config, corpus.content_hash).dump(2) + "\n");
        rows.push_back(table_row(name, metrics));
        std::printf("%s: accuracy %.4f macro-F1 %.4f\n", name.c_str(), metrics.accuracy,
                    metrics.macro_f1);
        summaries.push_back(std::move(s));
    };

    // Naive Bayes
    try {
        const NaiveBayesModel nb = train_naive_bayes(train_set, dimension, config.ml.nb_smoothing);
        std::vector<int> predictions;
        predictions.reserve(test_set.size());
        for (const auto& ex : test_set) predictions.push_back(nb_predict(nb, ex.features).label);
        finish_model("naive_bayes", nb_model_to_json_string(nb, transformer_hash), predictions);
    } catch (const NumericError& e) {
        diverged.push_back("naive_bayes: " + std::string(e.what()));
    }

    // logistic regression and linear SVM
    const struct {
        const char* name;
        LossKind loss;
        const TrainConfig& cfg;
    } sgd_models[] = {
        {"logistic_regression", LossKind::logistic, config.ml.logistic},
        {"svm", LossKind::hinge, config.ml.svm},
    };
    for (const auto& spec : sgd_models) {
        try {
            const LinearModel model = train_sgd(train_set, dimension, spec.cfg, spec.loss);
            std::vector<int> predictions;
            predictions.reserve(test_set.size());
            for (const auto& ex : test_set) {
                predictions.push_back(linear_predict(model, ex.features).label);
            }
            finish_model(spec.name, linear_model_to_json_string(model, spec.cfg, transformer_hash),
                         predictions);
        } catch (const NumericError& e) {
            diverged.push_back(std::string(spec.name) + ": " + e.what());
        }
    }

    std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.model < b.model;
    });
    write_text_file(out_path(config.output_dir, "table_ml.csv"), render_table_csv(rows));
    write_text_file(out_path(config.output_dir, "table_ml.txt"), render_table_text(rows));
    std::fputs(render_table_text(rows).c_str(), stdout);

    if (!diverged.empty()) {
        std::string msg = "trainer divergence:";
        for (const auto& d : diverged) msg += " [" + d + "]";
        throw NumericError(msg);
    }
    return summaries;
}

TrainedModelSummary cmd_train_dl(const ExperimentConfig& config, BiLstmVariant variant) {
    ensure_out_dir(config.output_dir);
    const LoadedCorpus corpus = load_and_clean(config.dataset_csv);
    require_manifest(config, corpus.content_hash);

    const auto subset = stratified_sample(corpus.docs, config.dl.subset_size, config.dl.train.seed);
    const DatasetSplit parts = split(subset, dl_split_spec(config));
    const auto& train_docs = parts.partition("train");
    const auto& val_docs = parts.partition("validation");
    const auto& test_docs = parts.partition("test");

    std::vector<TokenSequence> train_tokens;
    train_tokens.reserve(train_docs.size());
    for (const auto& d : train_docs) train_tokens.push_back(d.tokens);
    const Vocabulary vocab = fit_dl_vocabulary(train_tokens, config.dl.train.vocab_size);
    const std::string vocab_hash = dl_vocab_hash(vocab);
    write_text_file(out_path(config.output_dir, "dl_vocab.json"), dl_vocab_to_json_string(vocab) + "\n");

    const std::string name = variant_name(variant);
    DlTrainResult trained;
    try {
        trained = train_dl(train_docs, val_docs, vocab, config.dl.train, variant);
    } catch (const NumericError& e) {
        throw NumericError(std::string(name) + " training diverged: " + e.what());
    }
    for (const auto& epoch : trained.history) {
        std::printf("%s epoch %d: train loss %.4f, val loss %.4f\n", name.c_str(), epoch.epoch,
                    epoch.train_loss, epoch.val_loss);
    }

    const auto predictions = predict_labels(test_docs, vocab, trained.model, config.dl.train.max_len,
                                            config.dl.train.batch_size);
    const MetricsReport metrics = evaluate(predictions, labels_of(test_docs));

    TrainedModelSummary s;
    s.model = name;
    s.model_path = out_path(config.output_dir, "model_" + std::string(name) + ".json");
    s.report_path = out_path(config.output_dir, "report_" + std::string(name) + ".json");
    s.metrics = metrics;
    write_text_file(s.model_path,
                    bilstm_to_json_string(trained.model, config.dl.train, vocab_hash) + "\n");
    write_text_file(s.report_path,
                    report_to_json(name, metrics, config, corpus.content_hash).dump(2) + "\n");

    json history;
    history["format_version"] = 1;
    history["kind"] = "history";
    history["model"] = name;
    history["best_epoch"] = trained.best_epoch;
    history["empty_documents_replaced"] = trained.empty_documents_replaced;
    history["epochs"] = json::array();
    for (const auto& epoch : trained.history) {
        history["epochs"].push_back(
            {{"epoch", epoch.epoch}, {"train_loss", epoch.train_loss}, {"val_loss", epoch.val_loss}});
    }
    write_text_file(out_path(config.output_dir, "history_" + std::string(name) + ".json"),
                    history.dump(2) + "\n");

    write_dl_table(config);
    std::printf("%s: accuracy %.4f macro-F1 %.4f\n", name.c_str(), metrics.accuracy, metrics.macro_f1);
    return s;
}

TrainedModelSummary cmd_evaluate(const ExperimentConfig& config, const std::string& model_path) {
    ensure_out_dir(config.output_dir);
    json model_json;
    try {
        model_json = json::parse(read_text_file(model_path));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    const std::string kind = model_json.value("kind", "");
    const LoadedCorpus corpus = load_and_clean(config.dataset_csv);

    std::vector<int> predictions;
    std::vector<int> labels;
    if (kind == "bilstm" || kind == "bilstm-attn") {
        const auto subset =
            stratified_sample(corpus.docs, config.dl.subset_size, config.dl.train.seed);
        const DatasetSplit parts = split(subset, dl_split_spec(config));
        const auto& test_docs = parts.partition("test");

        const Vocabulary vocab = dl_vocab_from_json_string(
            read_text_file(out_path(fs::path(model_path).parent_path().string(), "dl_vocab.json")));
        const LoadedBiLstm loaded = bilstm_from_json_string(model_json.dump());
        if (loaded.vocab_hash != dl_vocab_hash(vocab)) {
            throw DataError("model " + model_path + " was trained with a different vocabulary");
        }
        predictions = predict_labels(test_docs, vocab, loaded.model, loaded.config.max_len,
                                     loaded.config.batch_size);
        labels = labels_of(test_docs);
    } else if (kind == "naive_bayes" || kind == "logistic_regression" || kind == "svm") {
        const DatasetSplit parts = split(corpus.docs, ml_split_spec(config));
        const auto& test_docs = parts.partition("test");

        const TfidfTransformer transformer = TfidfTransformer::from_json_string(
            read_text_file(out_path(fs::path(model_path).parent_path().string(), "tfidf.json")));
        const std::string transformer_hash = transformer.hash();

        labels = labels_of(test_docs);
        predictions.reserve(test_docs.size());
        if (kind == "naive_bayes") {
            const LoadedNbModel loaded = nb_model_from_json_string(model_json.dump());
            if (loaded.transformer_hash != transformer_hash) {
                throw DataError("model " + model_path + " was trained with a different transformer");
            }
            for (const auto& d : test_docs) {
                predictions.push_back(nb_predict(loaded.model, transformer.transform(d.tokens)).label);
            }
        } else {
            const LoadedLinearModel loaded = linear_model_from_json_string(model_json.dump());
            if (loaded.transformer_hash != transformer_hash) {
                throw DataError("model " + model_path + " was trained with a different transformer");
            }
            for (const auto& d : test_docs) {
                predictions.push_back(
                    linear_predict(loaded.model, transformer.transform(d.tokens)).label);
            }
        }
    } else {
        throw DataError("unrecognized model kind '" + kind + "' in " + model_path);
    }

    const MetricsReport metrics = evaluate(predictions, labels);
    TrainedModelSummary s;
    s.model = kind;
    s.model_path = model_path;
    s.report_path = out_path(config.output_dir, "report_eval_" + kind + ".json");
    s.metrics = metrics;
    write_text_file(s.report_path,
                    report_to_json(kind, metrics, config, corpus.content_hash).dump(2) + "\n");
    std::printf("%s: accuracy %.4f macro-F1 %.4f\n", kind.c_str(), metrics.accuracy, metrics.macro_f1);
    return s;
}

std::vector<TableRow> cmd_compare(const std::vector<std::string>& report_paths,
                                  const std::string& out_dir) {
    if (report_paths.empty()) throw ConfigError("compare needs at least one report");
    ensure_out_dir(out_dir);

    std::vector<TableRow> rows;
    for (const auto& path : report_paths) {
        json j;
        try {
            j = json::parse(read_text_file(path));
        } catch (const json::exception& e) {
            throw DataError("malformed report " + path + ": " + e.what());
        }
        if (j.value("kind", "") != "report") throw DataError(path + " is not a report file");
        if (j.value("format_version", -1) != 1) {
            throw DataError("report " + path + " has an unsupported format version");
        }
        rows.push_back(table_row(j.at("model").get<std::string>(), report_from_json(j)));
    }

    std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.model < b.model;
    });

    json out;
    out["format_version"] = 1;
    out["kind"] = "comparison";
    out["ranking"] = json::array();
    for (const auto& row : rows) {
        out["ranking"].push_back({{"model", row.model},
                                  {"accuracy", row.accuracy},
                                  {"f1_macro", row.macro_f1},
                                  {"f1_weighted", row.weighted_f1}});
    }
    write_text_file(out_path(out_dir, "comparison.csv"), render_table_csv(rows));
    write_text_file(out_path(out_dir, "comparison.json"), out.dump(2) + "\n");
    std::fputs(render_table_text(rows).c_str(), stdout);
    return rows;
}

Predictor::Predictor(const std::string& model_path) {
    const std::string model_text = read_text_file(model_path);
    json model_json;
    try {
        model_json = json::parse(model_text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    kind_ = model_json.value("kind", "");
    const std::string dir = fs::path(model_path).parent_path().string();

    if (kind_ == "bilstm" || kind_ == "bilstm-attn") {
        vocab_ = dl_vocab_from_json_string(read_text_file(out_path(dir, "dl_vocab.json")));
        LoadedBiLstm loaded = bilstm_from_json_string(model_text);
        if (loaded.vocab_hash != dl_vocab_hash(vocab_)) {
            throw DataError("model " + model_path +
                            " is incompatible with dl_vocab.json (vocabulary hash mismatch)");
        }
        dl_ = std::move(loaded.model);
        max_len_ = loaded.config.max_len;
    } else if (kind_ == "naive_bayes" || kind_ == "logistic_regression" || kind_ == "svm") {
        transformer_ = TfidfTransformer::from_json_string(read_text_file(out_path(dir, "tfidf.json")));
        const std::string sidecar_hash = transformer_.hash();
        if (kind_ == "naive_bayes") {
            LoadedNbModel loaded = nb_model_from_json_string(model_text);
            if (loaded.transformer_hash != sidecar_hash) {
                throw DataError("model " + model_path +
                                " is incompatible with tfidf.json (transformer hash mismatch)");
            }
            nb_ = std::move(loaded.model);
        } else {
            LoadedLinearModel loaded = linear_model_from_json_string(model_text);
            if (loaded.transformer_hash != sidecar_hash) {
                throw DataError("model " + model_path +
                                " is incompatible with tfidf.json (transformer hash mismatch)");
            }
            linear_ = std::move(loaded.model);
        }
    } else {
        throw DataError("unrecognized model kind '" + kind_ + "' in " + model_path);
    }
}

PredictionOutput Predictor::predict(const std::string& text) const {
    const TokenSequence tokens = tokenize(clean_text(text));

    PredictionOutput out;
    out.model_kind = kind_;
    if (kind_ == "bilstm" || kind_ == "bilstm-attn") {
        std::vector<LabeledDocument> doc(1);
        doc[0].tokens = tokens;
        const PaddedBatch batch = encode_batch(doc, vocab_, max_len_);
        out.score = forward_logits(batch, dl_)(0);
    } else if (kind_ == "naive_bayes") {
        const NbPrediction p = nb_predict(nb_, transformer_.transform(tokens));
        out.score = p.log_posterior[1] - p.log_posterior[0];
    } else {
        out.score = linear_predict(linear_, transformer_.transform(tokens)).score;
    }
    out.probability = sigmoid(out.score);
    out.label = out.score > 0.0 ? "positive" : "negative";
    return out;
}

PredictionOutput cmd_predict(const std::string& model_path, const std::string& text) {
    const Predictor predictor(model_path);
    PredictionOutput out = predictor.predict(text);
    std::printf("%s (score %.6f, probability %.4f)\n", out.label.c_str(), out.score, out.probability);
    return out;
}

} // namespace sentibench
