#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "metrics.hpp"
#include "rng.hpp"

using namespace sentibench;

namespace {

// builds prediction/label vectors realizing a given confusion matrix
void realize(const ConfusionMatrix& c, std::vector<int>& predictions, std::vector<int>& labels) {
    predictions.clear();
    labels.clear();
    auto add = [&](std::uint64_t n, int p, int y) {
        for (std::uint64_t i = 0; i < n; ++i) {
            predictions.push_back(p);
            labels.push_back(y);
        }
    };
    add(c.tp, 1, 1);
    add(c.fp, 1, 0);
    add(c.fn, 0, 1);
    add(c.tn, 0, 0);
}

} // namespace

TEST_CASE("perfect predictions score 1 everywhere") {
    const std::vector<int> labels = {0, 1, 1, 0, 1};
    const MetricsReport r = evaluate(labels, labels);
    CHECK(r.accuracy == 1.0);
    for (int c = 0; c < 2; ++c) {
        CHECK(r.precision[static_cast<std::size_t>(c)] == 1.0);
        CHECK(r.recall[static_cast<std::size_t>(c)] == 1.0);
        CHECK(r.f1[static_cast<std::size_t>(c)] == 1.0);
    }
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.weighted_f1 == 1.0);
    CHECK(r.undefined_flags.empty());
}

TEST_CASE("hand-computed confusion arithmetic, ten enumerated cases") {
    struct Case {
        ConfusionMatrix c;
        double accuracy, precision1, recall1, f1_1;
    };
    // all expected values computed by hand from the definitions
    const Case cases[] = {
        {{3, 1, 2, 4}, 0.7, 3.0 / 4.0, 3.0 / 5.0, 2.0 * 0.75 * 0.6 / 1.35},
        {{1, 0, 0, 1}, 1.0, 1.0, 1.0, 1.0},
        {{0, 1, 1, 0}, 0.0, 0.0, 0.0, 0.0},
        {{5, 5, 5, 5}, 0.5, 0.5, 0.5, 0.5},
        {{2, 3, 1, 4}, 0.6, 2.0 / 5.0, 2.0 / 3.0, 2.0 * (0.4 * (2.0 / 3.0)) / (0.4 + 2.0 / 3.0)},
        {{10, 0, 5, 5}, 0.75, 1.0, 2.0 / 3.0, 0.8},
        {{0, 0, 3, 7}, 0.7, 0.0, 0.0, 0.0},   // nothing predicted positive
        {{7, 3, 0, 0}, 0.7, 0.7, 1.0, 2.0 * 0.7 / 1.7},
        {{1, 2, 3, 4}, 0.5, 1.0 / 3.0, 0.25, 2.0 * ((1.0 / 3.0) * 0.25) / (1.0 / 3.0 + 0.25)},
        {{8, 1, 1, 90}, 0.98, 8.0 / 9.0, 8.0 / 9.0, 8.0 / 9.0},
    };
    for (const auto& tc : cases) {
        CAPTURE(tc.c.tp);
        CAPTURE(tc.c.fp);
        std::vector<int> predictions, labels;
        realize(tc.c, predictions, labels);
        const MetricsReport r = evaluate(predictions, labels);
        CHECK(r.accuracy == doctest::Approx(tc.accuracy).epsilon(1e-12));
        CHECK(r.precision[1] == doctest::Approx(tc.precision1).epsilon(1e-12));
        CHECK(r.recall[1] == doctest::Approx(tc.recall1).epsilon(1e-12));
        CHECK(r.f1[1] == doctest::Approx(tc.f1_1).epsilon(1e-12));
        CHECK(r.confusion.tp == tc.c.tp);
        CHECK(r.confusion.fp == tc.c.fp);
        CHECK(r.confusion.fn == tc.c.fn);
        CHECK(r.confusion.tn == tc.c.tn);
        // macro and weighted recomputed from per-class values
        const double macro = 0.5 * (r.f1[0] + r.f1[1]);
        CHECK(r.macro_f1 == doctest::Approx(macro).epsilon(1e-12));
        const double support0 = static_cast<double>(tc.c.tn + tc.c.fp);
        const double support1 = static_cast<double>(tc.c.tp + tc.c.fn);
        const double weighted =
            (support0 * r.f1[0] + support1 * r.f1[1]) / (support0 + support1);
        CHECK(r.weighted_f1 == doctest::Approx(weighted).epsilon(1e-12));
    }
}

TEST_CASE("degenerate all-wrong single-class predictions flag undefined metrics") {
    const std::vector<int> predictions(6, 0);
    const std::vector<int> labels(6, 1);
    const MetricsReport r = evaluate(predictions, labels);
    CHECK(r.accuracy == 0.0);
    CHECK(r.precision[1] == 0.0);
    CHECK(std::find(r.undefined_flags.begin(), r.undefined_flags.end(), "precision_1") !=
          r.undefined_flags.end());
    CHECK(std::find(r.undefined_flags.begin(), r.undefined_flags.end(), "recall_0") !=
          r.undefined_flags.end());
}

TEST_CASE("evaluate input validation") {
    CHECK_THROWS_AS(evaluate({}, {}), DataError);
    CHECK_THROWS_AS(evaluate({1, 0}, {1}), DataError);
}

TEST_CASE("report is invariant under joint permutation") {
    Rng rng(404);
    std::vector<int> predictions, labels;
    for (int i = 0; i < 200; ++i) {
        predictions.push_back(static_cast<int>(rng.next_below(2)));
        labels.push_back(static_cast<int>(rng.next_below(2)));
    }
    const MetricsReport before = evaluate(predictions, labels);

    std::vector<std::size_t> order(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> shuffled_pred, shuffled_labels;
    for (std::size_t i : order) {
        shuffled_pred.push_back(predictions[i]);
        shuffled_labels.push_back(labels[i]);
    }
    const MetricsReport after = evaluate(shuffled_pred, shuffled_labels);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.macro_f1 == after.macro_f1);
    CHECK(before.weighted_f1 == after.weighted_f1);
    CHECK(before.confusion.tp == after.confusion.tp);
    CHECK(before.confusion.tn == after.confusion.tn);
}

TEST_CASE("on balanced labels weighted equals macro F1") {
    Rng rng(5150);
    std::vector<int> predictions, labels;
    for (int i = 0; i < 300; ++i) {
        labels.push_back(i % 2);
        predictions.push_back(static_cast<int>(rng.next_below(2)));
    }
    const MetricsReport r = evaluate(predictions, labels);
    CHECK(std::abs(r.weighted_f1 - r.macro_f1) < 1e-12);
}

TEST_CASE("accuracy is one minus normalized hamming distance") {
    Rng rng(606);
    std::vector<int> predictions, labels;
    for (int i = 0; i < 257; ++i) {
        predictions.push_back(static_cast<int>(rng.next_below(2)));
        labels.push_back(static_cast<int>(rng.next_below(2)));
    }
    std::size_t hamming = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hamming += predictions[i] != labels[i] ? 1 : 0;
    }
    const MetricsReport r = evaluate(predictions, labels);
    CHECK(r.accuracy == doctest::Approx(1.0 - static_cast<double>(hamming) / 257.0).epsilon(1e-12));
}

TEST_CASE("table renderers emit the comparison layout") {
    const std::vector<TableRow> rows = {
        {"svm", 0.8530, 0.8530, 0.8530},
        {"naive_bayes", 0.6106, 0.6105, 0.6105},
    };
    const std::string csv = render_table_csv(rows);
    CHECK(csv == "model,accuracy,f1_macro,f1_weighted\n"
                 "svm,0.8530,0.8530,0.8530\n"
                 "naive_bayes,0.6106,0.6105,0.6105\n");
    const std::string text = render_table_text(rows);
    CHECK(text.find("Model") != std::string::npos);
    CHECK(text.find("0.8530") != std::string::npos);
    CHECK(text.find("naive_bayes") != std::string::npos);
}
