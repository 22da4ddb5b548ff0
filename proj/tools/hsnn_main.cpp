// Command-line front end for the hsnn shared library. Everything here goes
// through the C API in hsnn.h; the C++ core is not linked directly.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hsnn.h"

namespace {

int fail(hsnn_status status, const hsnn_engine* engine, const std::string& fallback) {
    const char* line = engine ? hsnn_engine_last_error_json(engine) : "";
    if (line && *line) {
        std::fprintf(stdout, "%s\n", line);
    } else {
        std::fprintf(stdout, "{\"error\":{\"kind\":\"%s\",\"message\":\"%s\"}}\n",
                     hsnn_status_name(status), fallback.c_str());
    }
    const char* detail = engine ? hsnn_engine_last_error(engine) : "";
    std::fprintf(stderr, "error (%s): %s\n", hsnn_status_name(status),
                 (detail && *detail) ? detail : fallback.c_str());
    return static_cast<int>(status);
}

std::string read_file(const std::string& path, bool& ok) {
    std::ifstream in(path);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    ok = true;
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized spiking neural networks for hyperspectral image classification"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
    app.add_option("--config", config_path, "Run configuration JSON")->required();
    app.add_option("--out", out_dir, "Directory that receives the run directory");
    app.add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_flag("--quiet", quiet, "Suppress progress output");

    std::string prefix, data_prefix, checkpoint, mode, split = "test", profile_path;

    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic dataset");
    synth->add_option("--prefix", prefix, "Output path prefix (default: <run>/synthetic)");

    CLI::App* train_ann = app.add_subcommand("train-ann", "Train the full-precision ANN");
    train_ann->add_option("--data", data_prefix, "Dataset path prefix")->required();

    CLI::App* convert = app.add_subcommand("convert", "Initialize and calibrate the SNN");
    convert->add_option("--checkpoint", checkpoint, "ANN checkpoint directory")->required();
    convert->add_option("--data", data_prefix, "Dataset path prefix")->required();

    CLI::App* train_snn = app.add_subcommand("train-snn", "Quantization-aware SNN training");
    train_snn->add_option("--checkpoint", checkpoint, "Converted SNN checkpoint")->required();
    train_snn->add_option("--data", data_prefix, "Dataset path prefix")->required();

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    eval->add_option("--data", data_prefix, "Dataset path prefix")->required();
    eval->add_option("--mode", mode, "ann or snn")->required();
    eval->add_option("--split", split, "test (default), train, or all");

    CLI::App* profile = app.add_subcommand("profile", "Measure spiking activity");
    profile->add_option("--checkpoint", checkpoint, "SNN checkpoint directory")->required();
    profile->add_option("--data", data_prefix, "Dataset path prefix")->required();

    CLI::App* energy = app.add_subcommand("energy", "Compute the compute-energy report");
    energy->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    energy->add_option("--profile", profile_path, "Activity profile JSON")->required();

    CLI11_PARSE(app, argc, argv);

    bool ok = false;
    const std::string config_text = read_file(config_path, ok);
    if (!ok) return fail(HSNN_ERR_INPUT, nullptr, "cannot open config file " + config_path);

    char errbuf[512] = {0};
    hsnn_engine* engine = nullptr;
    hsnn_status status =
        hsnn_engine_open(config_text.c_str(), out_dir.c_str(), &engine, errbuf, sizeof(errbuf));
    if (status != HSNN_OK) return fail(status, nullptr, errbuf);
    if (seed_set) hsnn_engine_set_seed(engine, seed);
    hsnn_engine_set_quiet(engine, quiet ? 1 : 0);

    char out_path[4096] = {0};
    if (synth->parsed()) {
        status = hsnn_cmd_synth(engine, prefix.empty() ? nullptr : prefix.c_str(), out_path,
                                sizeof(out_path));
    } else if (train_ann->parsed()) {
        status = hsnn_cmd_train_ann(engine, data_prefix.c_str(), out_path, sizeof(out_path));
    } else if (convert->parsed()) {
        status = hsnn_cmd_convert(engine, checkpoint.c_str(), data_prefix.c_str(), out_path,
                                  sizeof(out_path));
    } else if (train_snn->parsed()) {
        status = hsnn_cmd_train_snn(engine, checkpoint.c_str(), data_prefix.c_str(), out_path,
                                    sizeof(out_path));
    } else if (eval->parsed()) {
        status = hsnn_cmd_eval(engine, checkpoint.c_str(), data_prefix.c_str(), mode.c_str(),
                               split.c_str(), out_path, sizeof(out_path));
    } else if (profile->parsed()) {
        status = hsnn_cmd_profile(engine, checkpoint.c_str(), data_prefix.c_str(), out_path,
                                  sizeof(out_path));
    } else if (energy->parsed()) {
        status = hsnn_cmd_energy(engine, checkpoint.c_str(), profile_path.c_str(), out_path,
                                 sizeof(out_path));
    }

    int rc = 0;
    if (status != HSNN_OK) {
        rc = fail(status, engine, "command failed");
    } else if (!quiet) {
        std::printf("run dir: %s\nartifact: %s\n", hsnn_engine_run_dir(engine), out_path);
    }
    hsnn_engine_close(engine);
    return rc;
}
