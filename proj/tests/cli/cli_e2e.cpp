// End-to-end exercise of the hsnn binary: synth -> train-ann -> convert ->
// train-snn -> eval -> profile -> energy on a tiny synthetic dataset, plus
// the determinism and error-path contracts of the command line.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", what.c_str());
    if (!ok) ++failures;
}

struct RunResult {
    int exit_code = -1;
    std::string artifact;
    std::string run_dir;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& capture) {
    const std::string cmd = std::string(HSNN_CLI_PATH) + " " + args + " > " + capture.string() +
                            " 2> " + capture.string() + ".err";
    const int rc = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    res.stdout_text = ss.str();
    std::istringstream lines(res.stdout_text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("run dir: ", 0) == 0) res.run_dir = line.substr(9);
        if (line.rfind("artifact: ", 0) == 0) res.artifact = line.substr(10);
    }
    return res;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "hsnn-cli-e2e";
    fs::remove_all(work);
    fs::create_directories(work);

    const fs::path config = work / "config.json";
    {
        std::ofstream out(config);
        out << R"({
  "dataset": {"train_fraction": 0.5,
              "synthetic": {"classes": 2, "bands": 16, "samples_per_class": 14,
                             "noise_sigma": 0.05}},
  "architecture": "cnn3d",
  "ann": {"epochs": 6, "lr": 0.02, "decay_epochs": [4, 5], "batch": 7},
  "snn": {"epochs": 2, "lr": 0.001, "decay_epochs": [2, 3], "batch": 7,
           "bits": 6, "timesteps": 3, "gamma": 0.3, "potential_bits": 6},
  "calibration": {"batch": 10, "timesteps": 20},
  "energy": {"profile_samples": 8},
  "seed": 11
})";
    }
    const std::string base = " --config " + config.string() + " --out " + work.string();

    auto synth = run_cli("synth" + base, work / "synth.log");
    check(synth.exit_code == 0, "synth exits 0");
    check(fs::exists(synth.artifact + ".hsij"), "synth writes the cube header");
    check(fs::exists(fs::path(synth.run_dir) / "config.json"), "run dir echoes the config");
    check(file_bytes(fs::path(synth.run_dir) / "config.json") == file_bytes(config) ||
              file_bytes(fs::path(synth.run_dir) / "config.json") ==
                  file_bytes(config) + "\n",
          "config echo is verbatim");

    auto train_ann = run_cli("train-ann --data " + synth.artifact + base, work / "ann.log");
    check(train_ann.exit_code == 0, "train-ann exits 0");
    check(fs::exists(fs::path(train_ann.artifact) / "manifest.json"),
          "ANN checkpoint manifest exists");
    check(fs::exists(fs::path(train_ann.run_dir) / "ann-train.jsonl"),
          "per-epoch JSONL training log exists");

    // eval in the wrong mode fails loudly with a machine-parsable first line
    auto bad_eval = run_cli("eval --checkpoint " + train_ann.artifact + " --data " +
                                synth.artifact + " --mode snn" + base,
                            work / "badeval.log");
    check(bad_eval.exit_code != 0, "eval of an ANN checkpoint in snn mode fails");
    check(bad_eval.stdout_text.find("{\"error\":{\"kind\":\"config\"") != std::string::npos,
          "error line is machine parsable");

    auto convert = run_cli("convert --checkpoint " + train_ann.artifact + " --data " +
                               synth.artifact + base,
                           work / "convert.log");
    check(convert.exit_code == 0, "convert exits 0");
    check(fs::exists(fs::path(convert.run_dir) / "calibration-report.json"),
          "calibration report exists");

    auto train_snn = run_cli("train-snn --checkpoint " + convert.artifact + " --data " +
                                 synth.artifact + base,
                             work / "snn.log");
    check(train_snn.exit_code == 0, "train-snn exits 0");

    auto eval = run_cli("eval --checkpoint " + train_snn.artifact + " --data " +
                            synth.artifact + " --mode snn" + base,
                        work / "eval.log");
    check(eval.exit_code == 0, "eval exits 0");
    check(fs::exists(eval.artifact), "metrics.json exists");

    // re-running eval on the same artifacts reproduces metrics.json exactly
    auto eval2 = run_cli("eval --checkpoint " + train_snn.artifact + " --data " +
                             synth.artifact + " --mode snn" + base,
                         work / "eval2.log");
    check(eval2.exit_code == 0, "second eval exits 0");
    check(file_bytes(eval.artifact) == file_bytes(eval2.artifact),
          "eval reproduces metrics.json byte for byte");

    auto profile = run_cli("profile --checkpoint " + train_snn.artifact + " --data " +
                               synth.artifact + base,
                           work / "profile.log");
    check(profile.exit_code == 0, "profile exits 0");
    check(fs::exists(fs::path(profile.run_dir) / "spike-traces.bin"),
          "spike trace bitstream exists");

    auto energy = run_cli("energy --checkpoint " + train_snn.artifact + " --profile " +
                              profile.artifact + base,
                          work / "energy.log");
    check(energy.exit_code == 0, "energy exits 0");
    check(fs::exists(fs::path(energy.run_dir) / "energy-report.csv"), "energy CSV exists");

    // determinism: identical seeds give bitwise-identical checkpoints
    auto ann_a = run_cli("train-ann --data " + synth.artifact + base + " --seed 7",
                         work / "det-a.log");
    auto ann_b = run_cli("train-ann --data " + synth.artifact + base + " --seed 7",
                         work / "det-b.log");
    check(ann_a.exit_code == 0 && ann_b.exit_code == 0, "seeded reruns exit 0");
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(ann_a.artifact)) {
        const auto other = fs::path(ann_b.artifact) / entry.path().filename();
        if (!fs::exists(other) || file_bytes(entry.path()) != file_bytes(other)) {
            identical = false;
        }
    }
    check(identical, "seed 7 twice gives bitwise-identical checkpoints");
    check(ann_a.run_dir != ann_b.run_dir, "run directories are never reused");

    auto missing = run_cli("train-ann --data /no/such/prefix" + base, work / "missing.log");
    check(missing.exit_code == 2, "missing dataset exits with the input code");

    std::printf("%s\n", failures == 0 ? "ALL CLI CHECKS PASSED" : "CLI CHECKS FAILED");
    return failures == 0 ? 0 : 1;
}
