#pragma once

#include <filesystem>
#include <string>

#include "hsnn/conversion.hpp"
#include "hsnn/data.hpp"
#include "hsnn/energy.hpp"
#include "hsnn/training.hpp"

namespace hsnn {

struct DatasetConfig {
    std::string path_prefix;
    int patch_size = 0;  // 0: derived from the architecture (cnn3d 5, cnn32h 3)
    double train_fraction = 0.40;
    SyntheticConfig synthetic;
};

struct AnnSection {
    int epochs = 100;
    double lr = 0.01;
    double lr_decay = 0.1;
    std::vector<int> decay_epochs{60, 80, 90};
    int batch = 50;
    double momentum = 0.0;
    double weight_decay = 0.0;
};

struct SnnSection {
    int epochs = 100;
    double lr = 1e-4;
    double lr_decay = 0.5;
    std::vector<int> decay_epochs{60, 80, 90};
    int batch = 50;
    int bits = 6;
    int timesteps = 5;
    double gamma = 0.3;
    int potential_bits = 6;
};

struct CalibrationSection {
    int batch = 50;
    int timesteps = 100;
    double percentile = 99.7;
    double scale = 0.8;
};

struct EnergySection {
    int ann_bits = 32;
    int snn_bits = 6;
    double mac_exponent = 1.25;
    double ac_exponent = 1.0;
    int profile_samples = 200;
};

struct RunConfig {
    DatasetConfig dataset;
    std::string architecture = "cnn3d";  // cnn3d | cnn32h
    int hidden_features = 128;           // cnn32h linear width
    AnnSection ann;
    SnnSection snn;
    CalibrationSection calibration;
    EnergySection energy;
    std::uint64_t seed = 1;
};

// Strict parse: unknown keys and type mismatches are configuration errors.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

class Pipeline {
public:
    // config_text is echoed verbatim into the run directory.
    Pipeline(RunConfig cfg, std::string config_text, const std::filesystem::path& out_root,
             bool quiet);

    const std::filesystem::path& run_dir() const { return run_dir_; }

    // Each command returns the primary artifact path it wrote.
    std::string synth(const std::string& out_prefix);
    std::string train_ann(const std::string& data_prefix);
    std::string convert(const std::string& ann_checkpoint, const std::string& data_prefix);
    std::string train_snn(const std::string& snn_checkpoint, const std::string& data_prefix);
    std::string eval(const std::string& checkpoint, const std::string& data_prefix,
                     const std::string& mode, const std::string& split = "test");
    std::string profile(const std::string& checkpoint, const std::string& data_prefix);
    std::string energy(const std::string& checkpoint, const std::string& profile_path);

private:
    SplitResult load_split(const std::string& data_prefix, int* bands, int* classes);
    NetworkSpec build_network(int bands, int num_classes) const;
    void log(const std::string& line) const;

    RunConfig cfg_;
    std::filesystem::path run_dir_;
    bool quiet_;
};

}  // namespace hsnn
