#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsnn/rng.hpp"
#include "hsnn/tensor.hpp"

namespace hsnn {

// Hyperspectral cube, values in (row, col, band) order (band-interleaved by
// pixel). Values are held as doubles in memory; the file payload is f32le.
// Labels use 0 for unlabeled background and 1..K for classes.
struct HsiCube {
    int height = 0;
    int width = 0;
    int bands = 0;
    std::vector<double> values;  // height*width*bands

    double at(int r, int c, int b) const {
        return values[(static_cast<std::size_t>(r) * width + c) * bands + b];
    }
};

struct LabelGrid {
    int height = 0;
    int width = 0;
    std::vector<std::uint16_t> labels;  // height*width, row-major

    int at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
    int num_classes() const;
};

struct PatchSample {
    Tensor patch;  // [1, bands, p, p]
    int label = 0;  // 1..K
};

struct PatchDataset {
    std::vector<PatchSample> samples;
    int patch_size = 0;
    int bands = 0;
    int num_classes = 0;
    std::string split_tag;
};

// File format: <prefix>.hsij JSON header, <prefix>.hsib raw f32le values,
// <prefix>.lbl raw u16le labels. The header may declare bands to discard.
void save_cube(const std::string& path_prefix, const HsiCube& cube, const LabelGrid& labels,
               const std::vector<int>& discard_bands = {});
std::pair<HsiCube, LabelGrid> load_cube(const std::string& path_prefix);

// Per-band standardization to zero mean and unit population variance;
// constant bands map to zero.
void normalize(HsiCube& cube);

// One patch per labeled pixel, centered, zero-padded at the image border.
PatchDataset extract_patches(const HsiCube& cube, const LabelGrid& labels, int patch_size);

struct SplitResult {
    PatchDataset train;
    PatchDataset test;
    std::vector<std::string> warnings;
};

// Stratified shuffle split; per class, floor(train_fraction*n) samples train
// and the remainder tests. Classes with fewer than 2 samples go to train with
// a warning.
SplitResult split(const PatchDataset& dataset, double train_fraction, std::uint64_t seed);

struct SyntheticConfig {
    int classes = 3;
    int bands = 16;
    int samples_per_class = 100;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
};

// Grid image where each class carries a distinct smooth spectral signature
// (shifted Gaussian bump over the band axis) plus i.i.d. noise.
std::pair<HsiCube, LabelGrid> generate_synthetic(const SyntheticConfig& cfg);

}  // namespace hsnn
