/*
 * C API for the hsnn engine: quantized spiking neural networks for
 * hyperspectral image patch classification.
 *
 * All entry points are thread-compatible but an engine must only be used
 * from one thread at a time. Strings returned by the library stay valid
 * until the next call on the same engine.
 */
#ifndef HSNN_H
#define HSNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HSNN_API __declspec(dllexport)
#else
#define HSNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hsnn_status {
    HSNN_OK = 0,
    HSNN_ERR_CONFIG = 1,   /* bad configuration, geometry, or schema */
    HSNN_ERR_INPUT = 2,    /* bad runtime data or missing files */
    HSNN_ERR_IO = 3,       /* filesystem or serialization failure */
    HSNN_ERR_RUN = 4,      /* training or pipeline run failure */
    HSNN_ERR_INTERNAL = 5, /* engine invariant violation */
} hsnn_status;

/* Opaque engine handle: one parsed configuration plus one run directory. */
typedef struct hsnn_engine hsnn_engine;

HSNN_API const char* hsnn_version(void);
HSNN_API const char* hsnn_status_name(hsnn_status status);

/*
 * Creates an engine from a JSON configuration string. On failure returns a
 * non-OK status and, when errbuf is non-NULL, stores a single-line message.
 * out_dir selects where the run directory is created ("." when NULL).
 */
HSNN_API hsnn_status hsnn_engine_open(const char* config_json, const char* out_dir,
                                      hsnn_engine** out_engine, char* errbuf,
                                      size_t errbuf_size);
HSNN_API void hsnn_engine_close(hsnn_engine* engine);

/* Overrides the config seed before any command runs. */
HSNN_API hsnn_status hsnn_engine_set_seed(hsnn_engine* engine, uint64_t seed);
HSNN_API hsnn_status hsnn_engine_set_quiet(hsnn_engine* engine, int quiet);

/* Absolute path of the engine's run directory. */
HSNN_API const char* hsnn_engine_run_dir(const hsnn_engine* engine);
/* Message and machine-parsable JSON line for the last failed command. */
HSNN_API const char* hsnn_engine_last_error(const hsnn_engine* engine);
HSNN_API const char* hsnn_engine_last_error_json(const hsnn_engine* engine);

/*
 * Pipeline commands. Each writes its artifacts under the run directory and,
 * when out_path is non-NULL, stores the primary artifact path there.
 * Passing NULL for prefix on hsnn_cmd_synth writes <run_dir>/synthetic.
 */
HSNN_API hsnn_status hsnn_cmd_synth(hsnn_engine* engine, const char* prefix, char* out_path,
                                    size_t out_size);
HSNN_API hsnn_status hsnn_cmd_train_ann(hsnn_engine* engine, const char* data_prefix,
                                        char* out_path, size_t out_size);
HSNN_API hsnn_status hsnn_cmd_convert(hsnn_engine* engine, const char* ann_checkpoint,
                                      const char* data_prefix, char* out_path, size_t out_size);
HSNN_API hsnn_status hsnn_cmd_train_snn(hsnn_engine* engine, const char* snn_checkpoint,
                                        const char* data_prefix, char* out_path,
                                        size_t out_size);
HSNN_API hsnn_status hsnn_cmd_eval(hsnn_engine* engine, const char* checkpoint,
                                   const char* data_prefix, const char* mode, const char* split,
                                   char* out_path, size_t out_size);
HSNN_API hsnn_status hsnn_cmd_profile(hsnn_engine* engine, const char* checkpoint,
                                      const char* data_prefix, char* out_path, size_t out_size);
HSNN_API hsnn_status hsnn_cmd_energy(hsnn_engine* engine, const char* checkpoint,
                                     const char* profile_json, char* out_path, size_t out_size);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HSNN_H */
