#include "sentibench.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "errors.hpp"

namespace {

thread_local std::string t_last_error;

sb_status status_of(const sentibench::Error& e) {
    switch (e.kind()) {
    case sentibench::ErrorKind::config: return SB_ERROR_CONFIG;
    case sentibench::ErrorKind::data: return SB_ERROR_DATA;
    case sentibench::ErrorKind::numeric: return SB_ERROR_NUMERIC;
    case sentibench::ErrorKind::io: return SB_ERROR_IO;
    }
    return SB_ERROR_INTERNAL;
}

template <typename Fn>
sb_status guarded(Fn&& fn) {
    try {
        fn();
        return SB_OK;
    } catch (const sentibench::Error& e) {
        t_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return SB_ERROR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return SB_ERROR_INTERNAL;
    }
}

sb_status require(bool ok, const char* message) {
    if (ok) return SB_OK;
    t_last_error = message;
    return SB_ERROR_CONFIG;
}

sentibench::ExperimentConfig load_config(const char* config_path, const char* out_dir,
                                         long long seed_override) {
    auto config = sentibench::ExperimentConfig::load(config_path);
    if (out_dir != nullptr && out_dir[0] != '\0') config.output_dir = out_dir;
    if (seed_override >= 0) config.override_seeds(static_cast<std::uint64_t>(seed_override));
    return config;
}

} // namespace

struct sb_predictor {
    std::unique_ptr<sentibench::Predictor> impl;
};

extern "C" {

const char* sb_version(void) { return "1.0.0"; }

const char* sb_last_error(void) { return t_last_error.c_str(); }

sb_status sb_config_init(const char* config_path) {
    if (sb_status s = require(config_path != nullptr, "config_path is NULL"); s != SB_OK) return s;
    return guarded([&] {
        std::ifstream probe{std::string(config_path)};
        if (probe.good()) {
            throw sentibench::IoError(std::string("refusing to overwrite existing config at ") +
                                      config_path);
        }
        sentibench::ExperimentConfig{}.save(config_path);
    });
}

sb_status sb_prepare(const char* config_path, const char* out_dir, long long seed_override) {
    if (sb_status s = require(config_path != nullptr, "config_path is NULL"); s != SB_OK) return s;
    return guarded([&] { sentibench::cmd_prepare(load_config(config_path, out_dir, seed_override)); });
}

sb_status sb_train_ml(const char* config_path, const char* out_dir, long long seed_override) {
    if (sb_status s = require(config_path != nullptr, "config_path is NULL"); s != SB_OK) return s;
    return guarded([&] { sentibench::cmd_train_ml(load_config(config_path, out_dir, seed_override)); });
}

sb_status sb_train_dl(const char* config_path, const char* variant, const char* out_dir,
                      long long seed_override) {
    if (sb_status s = require(config_path != nullptr, "config_path is NULL"); s != SB_OK) return s;
    if (sb_status s = require(variant != nullptr, "variant is NULL"); s != SB_OK) return s;
    return guarded([&] {
        sentibench::cmd_train_dl(load_config(config_path, out_dir, seed_override),
                                 sentibench::variant_from_name(variant));
    });
}

sb_status sb_evaluate(const char* config_path, const char* model_path, const char* out_dir) {
    if (sb_status s = require(config_path != nullptr, "config_path is NULL"); s != SB_OK) return s;
    if (sb_status s = require(model_path != nullptr, "model_path is NULL"); s != SB_OK) return s;
    return guarded([&] {
        sentibench::cmd_evaluate(load_config(config_path, out_dir, -1), model_path);
    });
}

sb_status sb_compare(const char* const* report_paths, size_t count, const char* out_dir) {
    if (sb_status s = require(report_paths != nullptr && count > 0, "no report paths given");
        s != SB_OK) {
        return s;
    }
    if (sb_status s = require(out_dir != nullptr && out_dir[0] != '\0', "out_dir is required");
        s != SB_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<std::string> paths(report_paths, report_paths + count);
        sentibench::cmd_compare(paths, out_dir);
    });
}

sb_status sb_predictor_open(const char* model_path, sb_predictor** out_predictor) {
    if (sb_status s = require(model_path != nullptr, "model_path is NULL"); s != SB_OK) return s;
    if (sb_status s = require(out_predictor != nullptr, "out_predictor is NULL"); s != SB_OK) return s;
    *out_predictor = nullptr;
    return guarded([&] {
        auto handle = std::make_unique<sb_predictor>();
        handle->impl = std::make_unique<sentibench::Predictor>(model_path);
        *out_predictor = handle.release();
    });
}

sb_status sb_predictor_predict(sb_predictor* predictor, const char* text, int* out_label,
                               double* out_score, double* out_probability) {
    if (sb_status s = require(predictor != nullptr, "predictor is NULL"); s != SB_OK) return s;
    if (sb_status s = require(text != nullptr, "text is NULL"); s != SB_OK) return s;
    return guarded([&] {
        const sentibench::PredictionOutput out = predictor->impl->predict(text);
        if (out_label != nullptr) *out_label = out.label == "positive" ? 1 : 0;
        if (out_score != nullptr) *out_score = out.score;
        if (out_probability != nullptr) *out_probability = out.probability;
    });
}

const char* sb_predictor_model_kind(const sb_predictor* predictor) {
    if (predictor == nullptr) return "";
    return predictor->impl->model_kind().c_str();
}

const char* sb_label_name(int label) { return label == 1 ? "positive" : "negative"; }

void sb_predictor_close(sb_predictor* predictor) { delete predictor; }

} // extern "C"
