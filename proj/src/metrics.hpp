#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sentibench {

// Class 1 ("positive") is the positive class of the confusion matrix.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct MetricsReport {
    double accuracy = 0.0;
    std::array<double, 2> precision{};
    std::array<double, 2> recall{};
    std::array<double, 2> f1{};
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    ConfusionMatrix confusion;
    // metrics that hit a zero denominator and were set to 0 by convention,
    // e.g. "precision_1"
    std::vector<std::string> undefined_flags;
};

MetricsReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels);

// Rows of the benchmark comparison tables (accuracy plus both F1 flavors,
// since the source tables do not say which one they report).
struct TableRow {
    std::string model;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
};

std::string render_table_csv(const std::vector<TableRow>& rows);
std::string render_table_text(const std::vector<TableRow>& rows);

} // namespace sentibench
