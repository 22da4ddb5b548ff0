#include "hsnn/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"
#include "hsnn/spiketrace.hpp"

namespace hsnn {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw_config("config section '" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& key : allowed) {
            if (it.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) throw_config("unknown config key '" + where + "." + it.key() + "'");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw_config(std::string("config field '") + key + "' has the wrong type");
    }
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw_io("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw_input("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

json epoch_log_to_json(const EpochLog& e) {
    return json{{"epoch", e.epoch},       {"lr", e.lr},
                {"loss", e.loss},         {"train_oa", e.train_oa},
                {"test_oa", e.test_oa},   {"wall_ms", e.wall_ms}};
}

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw_io("cannot write " + path.string());
    for (const auto& e : log) out << epoch_log_to_json(e).dump() << "\n";
}

json metrics_to_json(const Metrics& m) {
    json j;
    j["oa"] = m.oa;
    j["aa"] = m.aa;
    j["kappa"] = m.kappa;
    j["num_classes"] = m.num_classes;
    std::int64_t total = 0;
    for (auto v : m.confusion) total += v;
    j["samples"] = total;
    return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw_config("config is not valid JSON: " + std::string(e.what()));
    }
    reject_unknown_keys(j, {"dataset", "architecture", "hidden_features", "ann", "snn",
                            "calibration", "energy", "seed"},
                        "config");
    RunConfig cfg;
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown_keys(d, {"path_prefix", "patch_size", "train_fraction", "synthetic"},
                            "dataset");
        read_field(d, "path_prefix", cfg.dataset.path_prefix);
        read_field(d, "patch_size", cfg.dataset.patch_size);
        read_field(d, "train_fraction", cfg.dataset.train_fraction);
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            reject_unknown_keys(s, {"classes", "bands", "samples_per_class", "noise_sigma"},
                                "dataset.synthetic");
            read_field(s, "classes", cfg.dataset.synthetic.classes);
            read_field(s, "bands", cfg.dataset.synthetic.bands);
            read_field(s, "samples_per_class", cfg.dataset.synthetic.samples_per_class);
            read_field(s, "noise_sigma", cfg.dataset.synthetic.noise_sigma);
        }
    }
    read_field(j, "architecture", cfg.architecture);
    if (cfg.architecture != "cnn3d" && cfg.architecture != "cnn32h") {
        throw_config("architecture must be 'cnn3d' or 'cnn32h', got '" + cfg.architecture + "'");
    }
    read_field(j, "hidden_features", cfg.hidden_features);
    if (j.contains("ann")) {
        const json& a = j.at("ann");
        reject_unknown_keys(a, {"epochs", "lr", "lr_decay", "decay_epochs", "batch", "momentum",
                                "weight_decay"},
                            "ann");
        read_field(a, "epochs", cfg.ann.epochs);
        read_field(a, "lr", cfg.ann.lr);
        read_field(a, "lr_decay", cfg.ann.lr_decay);
        read_field(a, "decay_epochs", cfg.ann.decay_epochs);
        read_field(a, "batch", cfg.ann.batch);
        read_field(a, "momentum", cfg.ann.momentum);
        read_field(a, "weight_decay", cfg.ann.weight_decay);
    }
    if (j.contains("snn")) {
        const json& s = j.at("snn");
        reject_unknown_keys(s, {"epochs", "lr", "lr_decay", "decay_epochs", "batch", "bits",
                                "timesteps", "gamma", "potential_bits"},
                            "snn");
        read_field(s, "epochs", cfg.snn.epochs);
        read_field(s, "lr", cfg.snn.lr);
        read_field(s, "lr_decay", cfg.snn.lr_decay);
        read_field(s, "decay_epochs", cfg.snn.decay_epochs);
        read_field(s, "batch", cfg.snn.batch);
        read_field(s, "bits", cfg.snn.bits);
        read_field(s, "timesteps", cfg.snn.timesteps);
        read_field(s, "gamma", cfg.snn.gamma);
        read_field(s, "potential_bits", cfg.snn.potential_bits);
    }
    if (j.contains("calibration")) {
        const json& c = j.at("calibration");
        reject_unknown_keys(c, {"batch", "timesteps", "percentile", "scale"}, "calibration");
        read_field(c, "batch", cfg.calibration.batch);
        read_field(c, "timesteps", cfg.calibration.timesteps);
        read_field(c, "percentile", cfg.calibration.percentile);
        read_field(c, "scale", cfg.calibration.scale);
    }
    if (j.contains("energy")) {
        const json& e = j.at("energy");
        reject_unknown_keys(e, {"ann_bits", "snn_bits", "mac_exponent", "ac_exponent",
                                "profile_samples"},
                            "energy");
        read_field(e, "ann_bits", cfg.energy.ann_bits);
        read_field(e, "snn_bits", cfg.energy.snn_bits);
        read_field(e, "mac_exponent", cfg.energy.mac_exponent);
        read_field(e, "ac_exponent", cfg.energy.ac_exponent);
        read_field(e, "profile_samples", cfg.energy.profile_samples);
    }
    read_field(j, "seed", cfg.seed);

    // cross-field checks
    if (cfg.dataset.train_fraction <= 0.0 || cfg.dataset.train_fraction >= 1.0) {
        throw_config("dataset.train_fraction must lie in (0,1)");
    }
    if (cfg.dataset.patch_size != 0 &&
        (cfg.dataset.patch_size % 2 == 0 || cfg.dataset.patch_size < 1)) {
        throw_config("dataset.patch_size must be odd");
    }
    if (cfg.ann.epochs < 1 || cfg.snn.epochs < 1) throw_config("epochs must be >= 1");
    if (cfg.ann.lr <= 0 || cfg.snn.lr <= 0) throw_config("learning rates must be positive");
    for (const auto& epochs : {cfg.ann.decay_epochs, cfg.snn.decay_epochs}) {
        for (std::size_t i = 1; i < epochs.size(); ++i) {
            if (epochs[i] <= epochs[i - 1]) {
                throw_config("decay_epochs must be strictly increasing");
            }
        }
    }
    if (cfg.snn.bits != 0 && (cfg.snn.bits < 2 || cfg.snn.bits > 31)) {
        throw_config("snn.bits must be 0 (full precision) or within [2,31]");
    }
    if (cfg.snn.timesteps < 1) throw_config("snn.timesteps must be >= 1");
    if (cfg.snn.gamma <= 0) throw_config("snn.gamma must be positive");
    if (cfg.calibration.percentile <= 0.0 || cfg.calibration.percentile > 100.0) {
        throw_config("calibration.percentile must lie in (0,100]");
    }
    if (cfg.calibration.scale <= 0.0) throw_config("calibration.scale must be positive");
    if (cfg.energy.ann_bits < 2 || cfg.energy.snn_bits < 2) {
        throw_config("energy bit widths must be >= 2");
    }
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = {{"path_prefix", cfg.dataset.path_prefix},
                    {"patch_size", cfg.dataset.patch_size},
                    {"train_fraction", cfg.dataset.train_fraction},
                    {"synthetic",
                     {{"classes", cfg.dataset.synthetic.classes},
                      {"bands", cfg.dataset.synthetic.bands},
                      {"samples_per_class", cfg.dataset.synthetic.samples_per_class},
                      {"noise_sigma", cfg.dataset.synthetic.noise_sigma}}}};
    j["architecture"] = cfg.architecture;
    j["hidden_features"] = cfg.hidden_features;
    j["ann"] = {{"epochs", cfg.ann.epochs},
                {"lr", cfg.ann.lr},
                {"lr_decay", cfg.ann.lr_decay},
                {"decay_epochs", cfg.ann.decay_epochs},
                {"batch", cfg.ann.batch},
                {"momentum", cfg.ann.momentum},
                {"weight_decay", cfg.ann.weight_decay}};
    j["snn"] = {{"epochs", cfg.snn.epochs},
                {"lr", cfg.snn.lr},
                {"lr_decay", cfg.snn.lr_decay},
                {"decay_epochs", cfg.snn.decay_epochs},
                {"batch", cfg.snn.batch},
                {"bits", cfg.snn.bits},
                {"timesteps", cfg.snn.timesteps},
                {"gamma", cfg.snn.gamma},
                {"potential_bits", cfg.snn.potential_bits}};
    j["calibration"] = {{"batch", cfg.calibration.batch},
                        {"timesteps", cfg.calibration.timesteps},
                        {"percentile", cfg.calibration.percentile},
                        {"scale", cfg.calibration.scale}};
    j["energy"] = {{"ann_bits", cfg.energy.ann_bits},
                   {"snn_bits", cfg.energy.snn_bits},
                   {"mac_exponent", cfg.energy.mac_exponent},
                   {"ac_exponent", cfg.energy.ac_exponent},
                   {"profile_samples", cfg.energy.profile_samples}};
    j["seed"] = cfg.seed;
    return j.dump(2);
}

Pipeline::Pipeline(RunConfig cfg, std::string config_text, const std::filesystem::path& out_root,
                   bool quiet)
    : cfg_(std::move(cfg)), quiet_(quiet) {
    const std::string base = "run-" + timestamp_utc() + "-seed" + std::to_string(cfg_.seed);
    std::filesystem::path dir = out_root / base;
    for (int suffix = 2; std::filesystem::exists(dir); ++suffix) {
        dir = out_root / (base + "-" + std::to_string(suffix));
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create run directory " + dir.string() + ": " + ec.message());
    run_dir_ = dir;
    write_text(run_dir_ / "config.json", config_text);
    write_text(run_dir_ / "config-resolved.json", run_config_to_json(cfg_));
}

void Pipeline::log(const std::string& line) const {
    if (!quiet_) std::cout << line << "\n";
}

NetworkSpec Pipeline::build_network(int bands, int num_classes) const {
    NetworkSpec spec = cfg_.architecture == "cnn32h"
                           ? build_cnn32h(bands, num_classes, cfg_.hidden_features)
                           : build_cnn3d(bands, num_classes);
    for (const auto& note : spec.build_notes) log("note: " + note);
    return spec;
}

SplitResult Pipeline::load_split(const std::string& data_prefix, int* bands, int* classes) {
    auto [cube, labels] = load_cube(data_prefix);
    normalize(cube);
    const int required = cfg_.architecture == "cnn32h" ? 3 : 5;
    int patch = cfg_.dataset.patch_size;
    if (patch == 0) patch = required;
    if (patch != required) {
        throw_config("architecture " + cfg_.architecture + " takes " + std::to_string(required) +
                     "x" + std::to_string(required) + " patches, config asks for " +
                     std::to_string(patch));
    }
    PatchDataset patches = extract_patches(cube, labels, patch);
    if (bands) *bands = cube.bands;
    if (classes) *classes = patches.num_classes;
    auto result = split(patches, cfg_.dataset.train_fraction, cfg_.seed);
    for (const auto& w : result.warnings) log("warning: " + w);
    return result;
}

std::string Pipeline::synth(const std::string& out_prefix) {
    SyntheticConfig sc = cfg_.dataset.synthetic;
    sc.seed = cfg_.seed;
    auto [cube, labels] = generate_synthetic(sc);
    const std::string prefix =
        out_prefix.empty() ? (run_dir_ / "synthetic").string() : out_prefix;
    save_cube(prefix, cube, labels);
    log("synth: wrote " + prefix + ".{hsij,hsib,lbl} (" + std::to_string(cube.height) + "x" +
        std::to_string(cube.width) + "x" + std::to_string(cube.bands) + ")");
    return prefix;
}

std::string Pipeline::train_ann(const std::string& data_prefix) {
    int bands = 0, classes = 0;
    auto splits = load_split(data_prefix, &bands, &classes);
    NetworkSpec spec = build_network(bands, classes);

    AnnTrainConfig tc;
    tc.epochs = cfg_.ann.epochs;
    tc.schedule = LrSchedule{cfg_.ann.lr, cfg_.ann.lr_decay, cfg_.ann.decay_epochs};
    tc.batch_size = cfg_.ann.batch;
    tc.momentum = cfg_.ann.momentum;
    tc.weight_decay = cfg_.ann.weight_decay;
    tc.seed = cfg_.seed;

    log("train-ann: " + std::to_string(splits.train.samples.size()) + " train / " +
        std::to_string(splits.test.samples.size()) + " test samples, " +
        std::to_string(parameter_count(spec)) + " parameters");
    auto result = hsnn::train_ann(spec, splits.train, splits.test, tc);
    write_train_log(run_dir_ / "ann-train.jsonl", result.log);

    const auto ckpt_dir = run_dir_ / "ann-checkpoint";
    save_checkpoint(ckpt_dir, result.best);
    log("train-ann: best test OA " + std::to_string(result.best_test_oa) + " at epoch " +
        std::to_string(result.best_epoch) + " -> " + ckpt_dir.string());
    return ckpt_dir.string();
}

std::string Pipeline::convert(const std::string& ann_checkpoint, const std::string& data_prefix) {
    Checkpoint ann = load_checkpoint(ann_checkpoint);
    if (ann.spec.mode != NetworkMode::ann) {
        throw_config("convert expects an ANN checkpoint, got mode " +
                     std::string(network_mode_name(ann.spec.mode)));
    }
    auto splits = load_split(data_prefix, nullptr, nullptr);

    Checkpoint snn = init_snn_from_ann(ann, cfg_.snn.timesteps);
    CalibrationConfig cc;
    cc.batch_size = cfg_.calibration.batch;
    cc.timesteps = cfg_.calibration.timesteps;
    cc.percentile = cfg_.calibration.percentile;
    cc.threshold_scale = cfg_.calibration.scale;

    // calibration draws from the training split only
    auto report = calibrate_thresholds(snn, splits.train, cc);
    for (const auto& w : report.warnings) log("warning: " + w);

    json rj;
    rj["layers"] = json::array();
    for (const auto& entry : report.layers) {
        rj["layers"].push_back({{"layer", entry.layer},
                                {"samples_seen", entry.samples_seen},
                                {"percentile_value", entry.percentile_value},
                                {"threshold", entry.threshold},
                                {"clamped", entry.clamped}});
    }
    write_text(run_dir_ / "calibration-report.json", rj.dump(2));

    const auto ckpt_dir = run_dir_ / "snn-init-checkpoint";
    save_checkpoint(ckpt_dir, snn);
    log("convert: calibrated " + std::to_string(report.layers.size()) + " layers -> " +
        ckpt_dir.string());
    return ckpt_dir.string();
}

std::string Pipeline::train_snn(const std::string& snn_checkpoint,
                                const std::string& data_prefix) {
    Checkpoint init = load_checkpoint(snn_checkpoint);
    if (init.spec.mode != NetworkMode::snn) {
        throw_config("train-snn expects a converted SNN checkpoint");
    }
    if (!init.thresholds) {
        throw_config("SNN checkpoint has no calibrated thresholds; run convert first");
    }
    auto splits = load_split(data_prefix, nullptr, nullptr);

    SnnTrainConfig tc;
    tc.epochs = cfg_.snn.epochs;
    tc.schedule = LrSchedule{cfg_.snn.lr, cfg_.snn.lr_decay, cfg_.snn.decay_epochs};
    tc.batch_size = cfg_.snn.batch;
    tc.bits = cfg_.snn.bits;
    tc.timesteps = cfg_.snn.timesteps;
    tc.gamma = cfg_.snn.gamma;
    tc.potential_bits = cfg_.snn.potential_bits;
    tc.seed = cfg_.seed;

    init.spec.timesteps = cfg_.snn.timesteps;
    log("train-snn: " + std::to_string(splits.train.samples.size()) + " train samples, " +
        std::to_string(tc.bits) + "-bit weights, T=" + std::to_string(tc.timesteps));
    auto result = hsnn::train_snn(init, splits.train, splits.test, tc);
    write_train_log(run_dir_ / "snn-train.jsonl", result.log);

    // Inference export: scale quantization re-derived from the trained
    // weights' symmetric range, plus input-layer params from the training
    // split.
    Checkpoint out = result.best;
    if (cfg_.snn.bits > 0) {
        for (std::size_t i = 0; i < out.spec.layers.size(); ++i) {
            if (!out.spec.layers[i].has_weights()) continue;
            out.weight_quant[i] =
                calibrate_params(out.weights.tensors[i], cfg_.snn.bits, QuantScheme::scale);
        }
        double lo = splits.train.samples[0].patch[0], hi = lo;
        for (const auto& sample : splits.train.samples) {
            for (std::int64_t k = 0; k < sample.patch.size(); ++k) {
                lo = std::min(lo, sample.patch[k]);
                hi = std::max(hi, sample.patch[k]);
            }
        }
        out.input_quant = make_quant_params(lo, hi, cfg_.snn.bits, QuantScheme::scale);
    }

    const auto ckpt_dir = run_dir_ / "snn-checkpoint";
    save_checkpoint(ckpt_dir, out);
    log("train-snn: best test OA " + std::to_string(result.best_test_oa) + " at epoch " +
        std::to_string(result.best_epoch) + " -> " + ckpt_dir.string());
    return ckpt_dir.string();
}

std::string Pipeline::eval(const std::string& checkpoint, const std::string& data_prefix,
                           const std::string& mode, const std::string& split_name) {
    Checkpoint ckpt = load_checkpoint(checkpoint);
    const NetworkMode want = network_mode_from_name(mode);
    if (ckpt.spec.mode != want) {
        throw_config("checkpoint is in " + std::string(network_mode_name(ckpt.spec.mode)) +
                     " mode but eval requested " + mode +
                     (want == NetworkMode::snn ? " (run convert/train-snn first)" : ""));
    }
    auto splits = load_split(data_prefix, nullptr, nullptr);
    const PatchDataset* set = nullptr;
    PatchDataset all;
    if (split_name == "test") {
        set = &splits.test;
    } else if (split_name == "train") {
        set = &splits.train;
    } else if (split_name == "all") {
        all = splits.train;
        for (const auto& sample : splits.test.samples) all.samples.push_back(sample);
        set = &all;
    } else {
        throw_config("eval split must be one of test/train/all, got '" + split_name + "'");
    }

    json mj;
    mj["mode"] = mode;
    mj["split"] = split_name;
    Metrics metrics;
    if (want == NetworkMode::ann) {
        metrics = evaluate_ann(ckpt.spec, ckpt.weights, *set).metrics;
    } else {
        if (!ckpt.thresholds) throw_config("SNN checkpoint has no calibrated thresholds");
        std::vector<LifParams> lif(ckpt.leak.size());
        for (std::size_t s = 0; s < lif.size(); ++s) {
            lif[s] = LifParams{ckpt.leak[s], (*ckpt.thresholds)[s]};
        }
        EvalOptions opts;
        opts.timesteps = ckpt.spec.timesteps;
        opts.potential_bits = cfg_.snn.potential_bits;
        opts.stored_weight_quant = &ckpt.weight_quant;
        opts.fixed_input_quant = ckpt.input_quant ? &*ckpt.input_quant : nullptr;
        metrics = evaluate_snn(ckpt.spec, ckpt.weights, lif, *set, opts).metrics;

        EvalOptions qopts = opts;
        qopts.quantize_output_potentials = true;
        mj["oa_quantized_potentials"] =
            evaluate_snn(ckpt.spec, ckpt.weights, lif, *set, qopts).metrics.oa;
    }
    mj.update(metrics_to_json(metrics));

    write_text(run_dir_ / "confusion.csv", confusion_to_csv(metrics));
    mj["confusion_csv"] = "confusion.csv";
    const auto path = run_dir_ / "metrics.json";
    write_text(path, mj.dump(2));
    log("eval: OA " + std::to_string(metrics.oa) + ", AA " + std::to_string(metrics.aa) +
        ", Kappa " + std::to_string(metrics.kappa));
    return path.string();
}

std::string Pipeline::profile(const std::string& checkpoint, const std::string& data_prefix) {
    Checkpoint ckpt = load_checkpoint(checkpoint);
    if (ckpt.spec.mode != NetworkMode::snn) throw_config("profile expects an SNN checkpoint");
    if (!ckpt.thresholds) throw_config("SNN checkpoint has no calibrated thresholds");
    auto splits = load_split(data_prefix, nullptr, nullptr);
    if (splits.test.samples.empty()) throw_input("profile needs a non-empty test split");

    std::vector<LifParams> lif(ckpt.leak.size());
    for (std::size_t s = 0; s < lif.size(); ++s) {
        lif[s] = LifParams{ckpt.leak[s], (*ckpt.thresholds)[s]};
    }
    EvalOptions prep;
    prep.stored_weight_quant = &ckpt.weight_quant;
    NetworkWeights fw = prepare_forward_weights(ckpt.spec, ckpt.weights, prep);

    const std::size_t count = std::min<std::size_t>(
        splits.test.samples.size(), static_cast<std::size_t>(cfg_.energy.profile_samples));
    SnnOptions fwd;
    fwd.timesteps = ckpt.spec.timesteps;
    fwd.potential_bits = cfg_.snn.potential_bits;
    fwd.record_spikes = true;
    fwd.input_quant = ckpt.input_quant ? &*ckpt.input_quant : nullptr;

    std::vector<SpikeRecord> records;
    records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        records.push_back(
            snn_forward(ckpt.spec, fw, lif, splits.test.samples[i].patch, fwd).record);
    }
    ActivityProfile profile = measure_activity(records);
    const auto path = run_dir_ / "activity-profile.json";
    write_text(path, activity_profile_to_json(profile));
    write_spike_traces(run_dir_ / "spike-traces.bin", traces_from_record(records[0]));

    std::string zetas;
    for (double z : profile.zeta) zetas += (zetas.empty() ? "" : ", ") + std::to_string(z);
    log("profile: " + std::to_string(count) + " samples, zeta [" + zetas + "]");
    return path.string();
}

std::string Pipeline::energy(const std::string& checkpoint, const std::string& profile_path) {
    Checkpoint ckpt = load_checkpoint(checkpoint);
    ActivityProfile profile = activity_profile_from_json(read_text(profile_path));

    EnergyConstants c;
    c.mac_exponent = cfg_.energy.mac_exponent;
    c.ac_exponent = cfg_.energy.ac_exponent;
    EnergyReport report =
        energy_totals(ckpt.spec, profile, cfg_.energy.ann_bits, cfg_.energy.snn_bits, c);

    const auto jpath = run_dir_ / "energy-report.json";
    write_text(jpath, energy_report_to_json(report));
    write_text(run_dir_ / "energy-report.csv", energy_report_to_csv(report));
    log("energy: E_ANN(32) " + std::to_string(report.e_ann_32_pj) + " pJ, E_SNN " +
        std::to_string(report.e_snn_pj) + " pJ, ratio " +
        std::to_string(report.ratio_ann32_over_snn));
    return jpath.string();
}

}  // namespace hsnn
