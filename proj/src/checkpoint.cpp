#include "hsnn/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"

namespace hsnn {

using nlohmann::json;

namespace {

json quant_to_json(const QuantParams& p) {
    return json{{"scheme", quant_scheme_name(p.scheme)}, {"bits", p.bits},     {"scale", p.scale},
                {"zero_point", p.zero_point},            {"w_min", p.w_min},   {"w_max", p.w_max}};
}

QuantParams quant_from_json(const json& j) {
    QuantParams p;
    p.scheme = quant_scheme_from_name(j.at("scheme").get<std::string>());
    p.bits = j.at("bits").get<int>();
    p.scale = j.at("scale").get<double>();
    p.zero_point = j.at("zero_point").get<int>();
    p.w_min = j.at("w_min").get<double>();
    p.w_max = j.at("w_max").get<double>();
    return p;
}

void write_blob(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) throw_io("short write to " + path.string());
}

Tensor read_blob(const std::filesystem::path& path, const std::vector<int>& shape) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw_io("cannot open " + path.string());
    const std::int64_t expected = shape_volume(shape) * static_cast<std::int64_t>(sizeof(double));
    const std::int64_t actual = static_cast<std::int64_t>(in.tellg());
    if (actual != expected) {
        throw_io("tensor blob " + path.string() + " has " + std::to_string(actual) +
                 " bytes, expected " + std::to_string(expected));
    }
    in.seekg(0);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(expected));
    if (!in) throw_io("short read from " + path.string());
    return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["format"] = "hsnn-checkpoint-v1";
    manifest["mode"] = network_mode_name(ckpt.spec.mode);
    manifest["network"] = json::parse(network_spec_to_json(ckpt.spec));

    json tensors = json::array();
    for (std::size_t i = 0; i < ckpt.spec.layers.size(); ++i) {
        const LayerSpec& layer = ckpt.spec.layers[i];
        if (!layer.has_weights()) continue;
        const Tensor& t = ckpt.weights.tensors[i];
        if (t.empty()) throw_internal("checkpoint is missing weights for layer " + layer.name);
        const std::string file = layer.name + ".weight.bin";
        json entry;
        entry["name"] = layer.name + ".weight";
        entry["shape"] = t.shape();
        entry["file"] = file;
        entry["quant"] =
            ckpt.weight_quant[i] ? quant_to_json(*ckpt.weight_quant[i]) : json(nullptr);
        tensors.push_back(entry);
        write_blob(dir / file, t);
    }
    manifest["tensors"] = tensors;

    if (ckpt.spec.mode == NetworkMode::snn) {
        json lif;
        lif["leak"] = ckpt.leak;
        lif["threshold"] = ckpt.thresholds ? json(*ckpt.thresholds) : json(nullptr);
        manifest["lif"] = lif;
    } else {
        manifest["lif"] = nullptr;
    }
    manifest["input_quant"] =
        ckpt.input_quant ? quant_to_json(*ckpt.input_quant) : json(nullptr);

    std::ofstream out(dir / "manifest.json");
    if (!out) throw_io("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw_io("cannot open checkpoint manifest " + (dir / "manifest.json").string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw_io("invalid checkpoint manifest: " + std::string(e.what()));
    }

    try {
        if (manifest.at("format").get<std::string>() != "hsnn-checkpoint-v1") {
            throw_io("unsupported checkpoint format '" +
                     manifest.at("format").get<std::string>() + "'");
        }
        Checkpoint ckpt(network_spec_from_json(manifest.at("network").dump()));
        ckpt.spec.mode = network_mode_from_name(manifest.at("mode").get<std::string>());

        for (const json& entry : manifest.at("tensors")) {
            const std::string name = entry.at("name").get<std::string>();
            const std::string layer_name = name.substr(0, name.rfind(".weight"));
            bool found = false;
            for (std::size_t i = 0; i < ckpt.spec.layers.size(); ++i) {
                if (ckpt.spec.layers[i].name != layer_name) continue;
                auto shape = entry.at("shape").get<std::vector<int>>();
                auto expected = layer_weight_shape(ckpt.spec.layers[i]);
                if (shape != expected) {
                    throw_io("tensor " + name + " has shape " + shape_to_string(shape) +
                             ", layer expects " + shape_to_string(expected));
                }
                ckpt.weights.tensors[i] =
                    read_blob(dir / entry.at("file").get<std::string>(), shape);
                if (!entry.at("quant").is_null()) {
                    ckpt.weight_quant[i] = quant_from_json(entry.at("quant"));
                }
                found = true;
                break;
            }
            if (!found) throw_io("tensor " + name + " does not match any network layer");
        }
        for (std::size_t i = 0; i < ckpt.spec.layers.size(); ++i) {
            if (ckpt.spec.layers[i].has_weights() && ckpt.weights.tensors[i].empty()) {
                throw_io("checkpoint is missing weights for layer " + ckpt.spec.layers[i].name);
            }
        }

        if (!manifest.at("lif").is_null()) {
            const json& lif = manifest.at("lif");
            ckpt.leak = lif.at("leak").get<std::vector<double>>();
            if (!lif.at("threshold").is_null()) {
                ckpt.thresholds = lif.at("threshold").get<std::vector<double>>();
            }
        }
        if (!manifest.at("input_quant").is_null()) {
            ckpt.input_quant = quant_from_json(manifest.at("input_quant"));
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw_io("invalid checkpoint manifest: " + std::string(e.what()));
    }
}

}  // namespace hsnn
