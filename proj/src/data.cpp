#include "hsnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"

namespace hsnn {

using nlohmann::json;

int LabelGrid::num_classes() const {
    int k = 0;
    for (std::uint16_t l : labels) k = std::max(k, static_cast<int>(l));
    return k;
}

void save_cube(const std::string& prefix, const HsiCube& cube, const LabelGrid& labels,
               const std::vector<int>& discard_bands) {
    if (labels.height != cube.height || labels.width != cube.width) {
        throw_input("label grid " + std::to_string(labels.height) + "x" +
                    std::to_string(labels.width) + " does not match cube " +
                    std::to_string(cube.height) + "x" + std::to_string(cube.width));
    }
    json header;
    header["height"] = cube.height;
    header["width"] = cube.width;
    header["bands"] = cube.bands;
    header["dtype"] = "f32le";
    header["band_order"] = "bip";
    if (!discard_bands.empty()) header["discard_bands"] = discard_bands;

    std::ofstream hj(prefix + ".hsij");
    if (!hj) throw_io("cannot write " + prefix + ".hsij");
    hj << header.dump(2) << "\n";

    std::ofstream hb(prefix + ".hsib", std::ios::binary);
    if (!hb) throw_io("cannot write " + prefix + ".hsib");
    std::vector<float> payload(cube.values.size());
    for (std::size_t i = 0; i < cube.values.size(); ++i) {
        payload[i] = static_cast<float>(cube.values[i]);
    }
    hb.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size() * sizeof(float)));

    std::ofstream lb(prefix + ".lbl", std::ios::binary);
    if (!lb) throw_io("cannot write " + prefix + ".lbl");
    lb.write(reinterpret_cast<const char*>(labels.labels.data()),
             static_cast<std::streamsize>(labels.labels.size() * sizeof(std::uint16_t)));
}

std::pair<HsiCube, LabelGrid> load_cube(const std::string& prefix) {
    std::ifstream hj(prefix + ".hsij");
    if (!hj) throw_input("cannot open header " + prefix + ".hsij");
    json header;
    try {
        hj >> header;
    } catch (const json::exception& e) {
        throw_input("invalid cube header " + prefix + ".hsij: " + e.what());
    }

    HsiCube cube;
    std::vector<int> discard;
    try {
        cube.height = header.at("height").get<int>();
        cube.width = header.at("width").get<int>();
        cube.bands = header.at("bands").get<int>();
        const std::string dtype = header.at("dtype").get<std::string>();
        if (dtype != "f32le") throw_input("unknown cube dtype '" + dtype + "'");
        const std::string order = header.at("band_order").get<std::string>();
        if (order != "bip") throw_input("unknown band order '" + order + "'");
        if (header.contains("discard_bands")) {
            discard = header.at("discard_bands").get<std::vector<int>>();
        }
    } catch (const json::exception& e) {
        throw_input("invalid cube header " + prefix + ".hsij: " + e.what());
    }
    if (cube.height <= 0 || cube.width <= 0 || cube.bands <= 0) {
        throw_input("cube dimensions must be positive in " + prefix + ".hsij");
    }

    const std::int64_t count =
        static_cast<std::int64_t>(cube.height) * cube.width * cube.bands;
    {
        std::ifstream hb(prefix + ".hsib", std::ios::binary | std::ios::ate);
        if (!hb) throw_input("cannot open payload " + prefix + ".hsib");
        const std::int64_t expected = count * static_cast<std::int64_t>(sizeof(float));
        const std::int64_t actual = static_cast<std::int64_t>(hb.tellg());
        if (actual != expected) {
            throw_input("payload " + prefix + ".hsib has " + std::to_string(actual) +
                        " bytes, expected " + std::to_string(expected));
        }
        hb.seekg(0);
        std::vector<float> payload(static_cast<std::size_t>(count));
        hb.read(reinterpret_cast<char*>(payload.data()),
                static_cast<std::streamsize>(expected));
        if (!hb) throw_input("short read from " + prefix + ".hsib");
        cube.values.assign(payload.begin(), payload.end());
    }
    for (std::size_t i = 0; i < cube.values.size(); ++i) {
        if (std::isnan(cube.values[i])) {
            throw_input("NaN value in " + prefix + ".hsib at byte offset " +
                        std::to_string(i * sizeof(float)));
        }
    }

    LabelGrid labels;
    labels.height = cube.height;
    labels.width = cube.width;
    {
        const std::int64_t pixels = static_cast<std::int64_t>(cube.height) * cube.width;
        std::ifstream lb(prefix + ".lbl", std::ios::binary | std::ios::ate);
        if (!lb) throw_input("cannot open labels " + prefix + ".lbl");
        const std::int64_t expected = pixels * static_cast<std::int64_t>(sizeof(std::uint16_t));
        const std::int64_t actual = static_cast<std::int64_t>(lb.tellg());
        if (actual != expected) {
            throw_input("labels " + prefix + ".lbl has " + std::to_string(actual) +
                        " bytes, expected " + std::to_string(expected));
        }
        lb.seekg(0);
        labels.labels.resize(static_cast<std::size_t>(pixels));
        lb.read(reinterpret_cast<char*>(labels.labels.data()),
                static_cast<std::streamsize>(expected));
        if (!lb) throw_input("short read from " + prefix + ".lbl");
    }

    if (!discard.empty()) {
        std::vector<bool> drop(static_cast<std::size_t>(cube.bands), false);
        for (int b : discard) {
            if (b < 0 || b >= cube.bands) {
                throw_input("discard band index " + std::to_string(b) + " out of range [0," +
                            std::to_string(cube.bands) + ")");
            }
            drop[static_cast<std::size_t>(b)] = true;
        }
        int kept = 0;
        for (bool d : drop) kept += d ? 0 : 1;
        std::vector<double> reduced;
        reduced.reserve(static_cast<std::size_t>(cube.height) * cube.width * kept);
        for (std::int64_t px = 0; px < static_cast<std::int64_t>(cube.height) * cube.width; ++px) {
            const double* spectrum = cube.values.data() + px * cube.bands;
            for (int b = 0; b < cube.bands; ++b) {
                if (!drop[static_cast<std::size_t>(b)]) reduced.push_back(spectrum[b]);
            }
        }
        cube.values = std::move(reduced);
        cube.bands = kept;
    }
    return {std::move(cube), std::move(labels)};
}

void normalize(HsiCube& cube) {
    const std::int64_t pixels = static_cast<std::int64_t>(cube.height) * cube.width;
    for (int b = 0; b < cube.bands; ++b) {
        double mean = 0.0;
        for (std::int64_t px = 0; px < pixels; ++px) {
            mean += cube.values[static_cast<std::size_t>(px * cube.bands + b)];
        }
        mean /= static_cast<double>(pixels);
        double var = 0.0;
        for (std::int64_t px = 0; px < pixels; ++px) {
            const double d = cube.values[static_cast<std::size_t>(px * cube.bands + b)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(pixels);
        const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
        for (std::int64_t px = 0; px < pixels; ++px) {
            auto& v = cube.values[static_cast<std::size_t>(px * cube.bands + b)];
            v = (v - mean) * inv;
        }
    }
}

PatchDataset extract_patches(const HsiCube& cube, const LabelGrid& labels, int patch_size) {
    if (patch_size % 2 == 0 || patch_size < 1) {
        throw_config("patch size must be odd and positive, got " + std::to_string(patch_size));
    }
    if (labels.height != cube.height || labels.width != cube.width) {
        throw_input("label grid does not match cube dimensions");
    }
    PatchDataset ds;
    ds.patch_size = patch_size;
    ds.bands = cube.bands;
    ds.num_classes = labels.num_classes();
    const int half = patch_size / 2;
    for (int r = 0; r < cube.height; ++r) {
        for (int c = 0; c < cube.width; ++c) {
            const int label = labels.at(r, c);
            if (label == 0) continue;
            Tensor patch({1, cube.bands, patch_size, patch_size});
            for (int b = 0; b < cube.bands; ++b) {
                for (int dr = -half; dr <= half; ++dr) {
                    const int rr = r + dr;
                    for (int dc = -half; dc <= half; ++dc) {
                        const int cc = c + dc;
                        double v = 0.0;  // zero padding outside the image
                        if (rr >= 0 && rr < cube.height && cc >= 0 && cc < cube.width) {
                            v = cube.at(rr, cc, b);
                        }
                        patch[(static_cast<std::int64_t>(b) * patch_size + (dr + half)) *
                                  patch_size + (dc + half)] = v;
                    }
                }
            }
            ds.samples.push_back(PatchSample{std::move(patch), label});
        }
    }
    return ds;
}

SplitResult split(const PatchDataset& dataset, double train_fraction, std::uint64_t seed) {
    if (dataset.samples.empty()) throw_input("cannot split an empty dataset");
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw_config("train fraction must lie in (0,1), got " + std::to_string(train_fraction));
    }
    SplitResult out;
    out.train.patch_size = out.test.patch_size = dataset.patch_size;
    out.train.bands = out.test.bands = dataset.bands;
    out.train.num_classes = out.test.num_classes = dataset.num_classes;
    out.train.split_tag = "train";
    out.test.split_tag = "test";

    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(dataset.num_classes) + 1);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        by_class[static_cast<std::size_t>(dataset.samples[i].label)].push_back(i);
    }

    Rng rng(seed);
    for (std::size_t k = 1; k < by_class.size(); ++k) {
        auto& idx = by_class[k];
        if (idx.empty()) continue;
        if (idx.size() < 2) {
            out.warnings.push_back("class " + std::to_string(k) +
                                   " has fewer than 2 samples; assigned to train");
            out.train.samples.push_back(dataset.samples[idx[0]]);
            continue;
        }
        rng.shuffle(idx);
        const std::size_t n_train =
            static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? out.train : out.test).samples.push_back(dataset.samples[idx[i]]);
        }
    }
    return out;
}

std::pair<HsiCube, LabelGrid> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.classes < 2) throw_config("synthetic dataset needs at least 2 classes");
    if (cfg.bands < 2 || cfg.samples_per_class < 1) {
        throw_config("synthetic dataset needs positive bands and samples per class");
    }
    const int total = cfg.classes * cfg.samples_per_class;
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(total))));

    HsiCube cube;
    cube.height = side;
    cube.width = side;
    cube.bands = cfg.bands;
    cube.values.assign(static_cast<std::size_t>(side) * side * cfg.bands, 0.0);
    LabelGrid labels;
    labels.height = side;
    labels.width = side;
    labels.labels.assign(static_cast<std::size_t>(side) * side, 0);

    // One Gaussian bump per class, centers spread across the band axis.
    const double sigma = static_cast<double>(cfg.bands) / (4.0 * cfg.classes);
    auto signature = [&](int cls, int band) {
        const double mu = (cls + 0.5) * static_cast<double>(cfg.bands) / cfg.classes;
        const double d = (band - mu) / sigma;
        return std::exp(-0.5 * d * d);
    };

    Rng rng(cfg.seed);
    for (int i = 0; i < total; ++i) {
        const int cls = i / cfg.samples_per_class;
        const int r = i / side, c = i % side;
        labels.labels[static_cast<std::size_t>(r) * side + c] =
            static_cast<std::uint16_t>(cls + 1);
        for (int b = 0; b < cfg.bands; ++b) {
            double v = signature(cls, b);
            if (cfg.noise_sigma > 0.0) v += rng.normal(0.0, cfg.noise_sigma);
            // values survive a file round trip unchanged
            cube.values[(static_cast<std::size_t>(r) * side + c) * cfg.bands + b] =
                static_cast<float>(v);
        }
    }
    return {std::move(cube), std::move(labels)};
}

}  // namespace hsnn
