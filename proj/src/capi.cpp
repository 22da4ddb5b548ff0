#include "hsnn.h"

#include <cstring>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"
#include "hsnn/pipeline.hpp"

namespace {

hsnn_status status_from_kind(hsnn::ErrorKind kind) {
    switch (kind) {
        case hsnn::ErrorKind::config: return HSNN_ERR_CONFIG;
        case hsnn::ErrorKind::input: return HSNN_ERR_INPUT;
        case hsnn::ErrorKind::io: return HSNN_ERR_IO;
        case hsnn::ErrorKind::run: return HSNN_ERR_RUN;
        case hsnn::ErrorKind::internal: return HSNN_ERR_INTERNAL;
    }
    return HSNN_ERR_INTERNAL;
}

void copy_out(char* dst, size_t cap, const std::string& src) {
    if (!dst || cap == 0) return;
    const size_t n = std::min(cap - 1, src.size());
    std::memcpy(dst, src.data(), n);
    dst[n] = '\0';
}

}  // namespace

struct hsnn_engine {
    hsnn::RunConfig config;
    std::string config_text;
    std::string out_dir;
    bool quiet = false;
    // The pipeline (and with it the run directory) is created lazily on the
    // first command so seed overrides can still apply.
    std::unique_ptr<hsnn::Pipeline> pipeline;
    std::string run_dir;
    std::string last_error;
    std::string last_error_json;

    hsnn::Pipeline& get_pipeline() {
        if (!pipeline) {
            pipeline = std::make_unique<hsnn::Pipeline>(config, config_text, out_dir, quiet);
            run_dir = pipeline->run_dir().string();
        }
        return *pipeline;
    }

    void record_error(hsnn::ErrorKind kind, const std::string& message) {
        last_error = message;
        nlohmann::json j;
        j["error"] = {{"kind", hsnn::error_kind_name(kind)}, {"message", message}};
        last_error_json = j.dump();
    }
};

namespace {

template <typename Fn>
hsnn_status run_command(hsnn_engine* engine, char* out_path, size_t out_size, Fn&& fn) {
    if (!engine) return HSNN_ERR_CONFIG;
    engine->last_error.clear();
    engine->last_error_json.clear();
    try {
        copy_out(out_path, out_size, fn());
        return HSNN_OK;
    } catch (const hsnn::Error& e) {
        engine->record_error(e.kind(), e.what());
        return status_from_kind(e.kind());
    } catch (const std::exception& e) {
        engine->record_error(hsnn::ErrorKind::internal, e.what());
        return HSNN_ERR_INTERNAL;
    }
}

}  // namespace

extern "C" {

const char* hsnn_version(void) { return "1.0.0"; }

const char* hsnn_status_name(hsnn_status status) {
    switch (status) {
        case HSNN_OK: return "ok";
        case HSNN_ERR_CONFIG: return "config";
        case HSNN_ERR_INPUT: return "input";
        case HSNN_ERR_IO: return "io";
        case HSNN_ERR_RUN: return "run";
        case HSNN_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

hsnn_status hsnn_engine_open(const char* config_json, const char* out_dir,
                             hsnn_engine** out_engine, char* errbuf, size_t errbuf_size) {
    if (out_engine) *out_engine = nullptr;
    if (!config_json || !out_engine) {
        copy_out(errbuf, errbuf_size, "config string and engine out-pointer are required");
        return HSNN_ERR_CONFIG;
    }
    try {
        auto engine = std::make_unique<hsnn_engine>();
        engine->config = hsnn::parse_run_config(config_json);
        engine->config_text = config_json;
        engine->out_dir = out_dir ? out_dir : ".";
        *out_engine = engine.release();
        return HSNN_OK;
    } catch (const hsnn::Error& e) {
        copy_out(errbuf, errbuf_size, e.what());
        return status_from_kind(e.kind());
    } catch (const std::exception& e) {
        copy_out(errbuf, errbuf_size, e.what());
        return HSNN_ERR_INTERNAL;
    }
}

void hsnn_engine_close(hsnn_engine* engine) { delete engine; }

hsnn_status hsnn_engine_set_seed(hsnn_engine* engine, uint64_t seed) {
    if (!engine) return HSNN_ERR_CONFIG;
    if (engine->pipeline) {
        engine->record_error(hsnn::ErrorKind::config,
                             "seed must be set before the first command runs");
        return HSNN_ERR_CONFIG;
    }
    engine->config.seed = seed;
    return HSNN_OK;
}

hsnn_status hsnn_engine_set_quiet(hsnn_engine* engine, int quiet) {
    if (!engine) return HSNN_ERR_CONFIG;
    engine->quiet = quiet != 0;
    return HSNN_OK;
}

const char* hsnn_engine_run_dir(const hsnn_engine* engine) {
    return engine ? engine->run_dir.c_str() : "";
}

const char* hsnn_engine_last_error(const hsnn_engine* engine) {
    return engine ? engine->last_error.c_str() : "";
}

const char* hsnn_engine_last_error_json(const hsnn_engine* engine) {
    return engine ? engine->last_error_json.c_str() : "";
}

hsnn_status hsnn_cmd_synth(hsnn_engine* engine, const char* prefix, char* out_path,
                           size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        return engine->get_pipeline().synth(prefix ? prefix : "");
    });
}

hsnn_status hsnn_cmd_train_ann(hsnn_engine* engine, const char* data_prefix, char* out_path,
                               size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!data_prefix) hsnn::throw_input("data prefix is required");
        return engine->get_pipeline().train_ann(data_prefix);
    });
}

hsnn_status hsnn_cmd_convert(hsnn_engine* engine, const char* ann_checkpoint,
                             const char* data_prefix, char* out_path, size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!ann_checkpoint || !data_prefix) {
            hsnn::throw_input("checkpoint and data prefix are required");
        }
        return engine->get_pipeline().convert(ann_checkpoint, data_prefix);
    });
}

hsnn_status hsnn_cmd_train_snn(hsnn_engine* engine, const char* snn_checkpoint,
                               const char* data_prefix, char* out_path, size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!snn_checkpoint || !data_prefix) {
            hsnn::throw_input("checkpoint and data prefix are required");
        }
        return engine->get_pipeline().train_snn(snn_checkpoint, data_prefix);
    });
}

hsnn_status hsnn_cmd_eval(hsnn_engine* engine, const char* checkpoint, const char* data_prefix,
                          const char* mode, const char* split, char* out_path, size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!checkpoint || !data_prefix || !mode) {
            hsnn::throw_input("checkpoint, data prefix, and mode are required");
        }
        return engine->get_pipeline().eval(checkpoint, data_prefix, mode,
                                           split ? split : "test");
    });
}

hsnn_status hsnn_cmd_profile(hsnn_engine* engine, const char* checkpoint,
                             const char* data_prefix, char* out_path, size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!checkpoint || !data_prefix) {
            hsnn::throw_input("checkpoint and data prefix are required");
        }
        return engine->get_pipeline().profile(checkpoint, data_prefix);
    });
}

hsnn_status hsnn_cmd_energy(hsnn_engine* engine, const char* checkpoint,
                            const char* profile_json, char* out_path, size_t out_size) {
    return run_command(engine, out_path, out_size, [&] {
        if (!checkpoint || !profile_json) {
            hsnn::throw_input("checkpoint and profile path are required");
        }
        return engine->get_pipeline().energy(checkpoint, profile_json);
    });
}

}  // extern "C"
