#include "metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "errors.hpp"

namespace sentibench {

MetricsReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DataError("evaluate: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw DataError("evaluate: empty input");

    MetricsReport r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if (p == 1 && y == 1) ++r.confusion.tp;
        else if (p == 1 && y == 0) ++r.confusion.fp;
        else if (p == 0 && y == 1) ++r.confusion.fn;
        else ++r.confusion.tn;
    }

    const auto& c = r.confusion;
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());

    auto ratio = [&r](std::uint64_t num, std::uint64_t den, const std::string& name) {
        if (den == 0) {
            r.undefined_flags.push_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    // class 0 first, then class 1
    r.precision[0] = ratio(c.tn, c.tn + c.fn, "precision_0");
    r.recall[0] = ratio(c.tn, c.tn + c.fp, "recall_0");
    r.precision[1] = ratio(c.tp, c.tp + c.fp, "precision_1");
    r.recall[1] = ratio(c.tp, c.tp + c.fn, "recall_1");

    std::array<std::uint64_t, 2> support = {c.tn + c.fp, c.tp + c.fn};
    for (std::size_t cls = 0; cls < 2; ++cls) {
        const double pr = r.precision[cls] + r.recall[cls];
        if (pr == 0.0) {
            r.undefined_flags.push_back("f1_" + std::to_string(cls));
            r.f1[cls] = 0.0;
        } else {
            r.f1[cls] = 2.0 * r.precision[cls] * r.recall[cls] / pr;
        }
    }
    r.macro_f1 = 0.5 * (r.f1[0] + r.f1[1]);
    r.weighted_f1 = (static_cast<double>(support[0]) * r.f1[0] +
                     static_cast<double>(support[1]) * r.f1[1]) /
                    static_cast<double>(c.total());
    return r;
}

std::string render_table_csv(const std::vector<TableRow>& rows) {
    std::string out = "model,accuracy,f1_macro,f1_weighted\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f\n", row.model.c_str(), row.accuracy,
                      row.macro_f1, row.weighted_f1);
        out += buf;
    }
    return out;
}

std::string render_table_text(const std::vector<TableRow>& rows) {
    std::size_t name_width = 5; // "Model"
    for (const auto& row : rows) name_width = std::max(name_width, row.model.size());

    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s  %8s  %11s\n", static_cast<int>(name_width), "Model",
                  "Accuracy", "F1-macro", "F1-weighted");
    std::string out = buf;
    out += std::string(name_width + 33, '-') + "\n";
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8.4f  %8.4f  %11.4f\n", static_cast<int>(name_width),
                      row.model.c_str(), row.accuracy, row.macro_f1, row.weighted_f1);
        out += buf;
    }
    return out;
}

} // namespace sentibench
