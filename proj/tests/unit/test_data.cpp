#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hsnn/data.hpp"
#include "hsnn/error.hpp"
#include "hsnn/metrics.hpp"

using namespace hsnn;

namespace {

std::string temp_prefix(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() / "hsnn-data-tests";
    std::filesystem::create_directories(dir);
    return (dir / tag).string();
}

HsiCube tiny_cube() {
    HsiCube cube;
    cube.height = 2;
    cube.width = 2;
    cube.bands = 3;
    // f32-representable values so the file round trip is bitwise
    for (float v : {0.1f, 0.2f, 0.3f, 1.1f, 1.2f, 1.3f, 2.1f, 2.2f, 2.3f, 3.1f, 3.2f, 3.3f}) {
        cube.values.push_back(v);
    }
    return cube;
}

LabelGrid tiny_labels() {
    LabelGrid labels;
    labels.height = 2;
    labels.width = 2;
    labels.labels = {1, 2, 0, 1};
    return labels;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("cube round trip is bitwise") {
    const std::string prefix = temp_prefix("roundtrip");
    save_cube(prefix, tiny_cube(), tiny_labels());
    auto [cube, labels] = load_cube(prefix);
    CHECK(cube.height == 2);
    CHECK(cube.width == 2);
    CHECK(cube.bands == 3);
    const HsiCube ref = tiny_cube();
    for (std::size_t i = 0; i < ref.values.size(); ++i) CHECK(cube.values[i] == ref.values[i]);
    const LabelGrid lref = tiny_labels();
    for (std::size_t i = 0; i < lref.labels.size(); ++i) CHECK(labels.labels[i] == lref.labels[i]);
}

TEST_CASE("payload size mismatch names the byte counts") {
    const std::string prefix = temp_prefix("short");
    save_cube(prefix, tiny_cube(), tiny_labels());
    // truncate the payload by one band's worth of bytes
    std::filesystem::resize_file(prefix + ".hsib", 12 * sizeof(float) - 4);
    CHECK_THROWS_WITH_AS(load_cube(prefix), doctest::Contains("expected"), Error);
}

TEST_CASE("NaN payloads are rejected with the byte offset") {
    const std::string prefix = temp_prefix("nan");
    HsiCube cube = tiny_cube();
    cube.values[5] = std::numeric_limits<double>::quiet_NaN();
    save_cube(prefix, cube, tiny_labels());
    CHECK_THROWS_WITH_AS(load_cube(prefix), doctest::Contains("offset 20"), Error);
}

TEST_CASE("declared band discards are applied") {
    const std::string prefix = temp_prefix("discard");
    save_cube(prefix, tiny_cube(), tiny_labels(), {0, 2});
    auto [cube, labels] = load_cube(prefix);
    CHECK(cube.bands == 1);
    CHECK(cube.values[0] == doctest::Approx(0.2f));
    CHECK(cube.values[1] == doctest::Approx(1.2f));
    CHECK(cube.values[2] == doctest::Approx(2.2f));
    CHECK(cube.values[3] == doctest::Approx(3.2f));
}

TEST_CASE("per-band standardization") {
    HsiCube cube;
    cube.height = 1;
    cube.width = 2;
    cube.bands = 2;
    cube.values = {1.0, 5.0, 3.0, 5.0};  // band 0: {1,3}, band 1: constant 5
    normalize(cube);
    CHECK(cube.values[0] == doctest::Approx(-1.0));
    CHECK(cube.values[2] == doctest::Approx(1.0));
    CHECK(cube.values[1] == 0.0);
    CHECK(cube.values[3] == 0.0);

    // means vanish per band on a larger random cube
    Rng rng(179);
    HsiCube big;
    big.height = 8;
    big.width = 9;
    big.bands = 4;
    for (int i = 0; i < 8 * 9 * 4; ++i) {
        big.values.push_back(rng.uniform(-3.0, 9.0));
    }
    normalize(big);
    for (int b = 0; b < big.bands; ++b) {
        double mean = 0.0;
        for (int px = 0; px < 72; ++px) mean += big.values[px * 4 + b];
        CHECK(std::abs(mean / 72.0) <= 1e-9);
    }
}

TEST_CASE("patch extraction centers, pads, and counts") {
    HsiCube cube;
    cube.height = 3;
    cube.width = 3;
    cube.bands = 2;
    for (int px = 0; px < 9; ++px) {
        cube.values.push_back(px);
        cube.values.push_back(10 + px);
    }
    LabelGrid labels;
    labels.height = 3;
    labels.width = 3;
    labels.labels = {1, 0, 0, 0, 2, 0, 0, 0, 3};

    PatchDataset ds = extract_patches(cube, labels, 5);
    CHECK(ds.samples.size() == 3);  // one patch per labeled pixel
    CHECK(ds.num_classes == 3);

    // center of each patch equals the pixel's spectrum
    for (const auto& sample : ds.samples) {
        const Tensor& p = sample.patch;
        REQUIRE(p.shape() == std::vector<int>{1, 2, 5, 5});
        const int center = 2 * 5 + 2;
        const int px = sample.label == 1 ? 0 : (sample.label == 2 ? 4 : 8);
        CHECK(p[center] == doctest::Approx(px));
        CHECK(p[25 + center] == doctest::Approx(10 + px));
    }

    // corner patch has zero padding outside the image
    const Tensor& corner = ds.samples[0].patch;  // labeled pixel (0,0)
    CHECK(corner[0] == 0.0);       // (-2,-2) out of range
    CHECK(corner[1 * 5 + 1] == 0.0);
    CHECK_THROWS_AS(extract_patches(cube, labels, 4), Error);
}

TEST_CASE("stratified split fractions and determinism") {
    SyntheticConfig sc;
    sc.classes = 2;
    sc.bands = 4;
    sc.samples_per_class = 50;
    sc.noise_sigma = 0.0;
    sc.seed = 3;
    auto [cube, labels] = generate_synthetic(sc);
    PatchDataset ds = extract_patches(cube, labels, 3);
    REQUIRE(ds.samples.size() == 100);

    auto s1 = split(ds, 0.40, 17);
    CHECK(s1.train.samples.size() == 40);
    CHECK(s1.test.samples.size() == 60);

    // disjoint and exhaustive, per-class fractions preserved
    int train_c1 = 0;
    for (const auto& s : s1.train.samples) train_c1 += s.label == 1 ? 1 : 0;
    CHECK(train_c1 == 20);

    auto s2 = split(ds, 0.40, 17);
    REQUIRE(s1.train.samples.size() == s2.train.samples.size());
    for (std::size_t i = 0; i < s1.train.samples.size(); ++i) {
        CHECK(s1.train.samples[i].label == s2.train.samples[i].label);
        CHECK(s1.train.samples[i].patch[0] == s2.train.samples[i].patch[0]);
    }

    // a singleton class lands in train with a warning
    PatchDataset tiny;
    tiny.patch_size = 3;
    tiny.bands = 4;
    tiny.num_classes = 2;
    tiny.samples.push_back(ds.samples[0]);
    tiny.samples.push_back(ds.samples[1]);
    tiny.samples.push_back(PatchSample{ds.samples[0].patch, 2});
    auto s3 = split(tiny, 0.40, 1);
    CHECK(!s3.warnings.empty());
}

TEST_CASE("synthetic classes are reproducible and separable") {
    SyntheticConfig sc;
    sc.classes = 2;
    sc.bands = 8;
    sc.samples_per_class = 10;
    sc.noise_sigma = 0.0;
    sc.seed = 11;
    auto [cube, labels] = generate_synthetic(sc);

    // zero noise: within-class spectra identical
    std::vector<std::vector<double>> first(3);
    for (int px = 0; px < cube.height * cube.width; ++px) {
        const int label = labels.labels[static_cast<std::size_t>(px)];
        if (label == 0) continue;
        std::vector<double> spectrum(cube.values.begin() + px * 8,
                                     cube.values.begin() + (px + 1) * 8);
        if (first[static_cast<std::size_t>(label)].empty()) {
            first[static_cast<std::size_t>(label)] = spectrum;
        } else {
            CHECK(spectrum == first[static_cast<std::size_t>(label)]);
        }
    }

    // disjoint bumps: a midpoint threshold on the most separating band splits
    // the classes exactly
    int best_band = 0;
    double best_gap = -1.0;
    for (int b = 0; b < 8; ++b) {
        const double gap = std::abs(first[1][static_cast<std::size_t>(b)] -
                                    first[2][static_cast<std::size_t>(b)]);
        if (gap > best_gap) {
            best_gap = gap;
            best_band = b;
        }
    }
    const double mid = (first[1][static_cast<std::size_t>(best_band)] +
                        first[2][static_cast<std::size_t>(best_band)]) / 2.0;
    const bool c1_above = first[1][static_cast<std::size_t>(best_band)] > mid;
    for (int px = 0; px < cube.height * cube.width; ++px) {
        const int label = labels.labels[static_cast<std::size_t>(px)];
        if (label == 0) continue;
        const double v = cube.values[static_cast<std::size_t>(px * 8 + best_band)];
        CHECK(((label == 1) == (c1_above ? v > mid : v < mid)));
    }

    auto [cube2, labels2] = generate_synthetic(sc);
    CHECK(cube.values == cube2.values);
    CHECK(labels.labels == labels2.labels);
}

TEST_CASE("metrics on the hand-computed confusion matrix") {
    Metrics m = metrics_from_confusion({50, 10, 5, 35}, 2);
    CHECK(m.oa == doctest::Approx(0.85).epsilon(1e-9));
    CHECK(m.aa == doctest::Approx(0.8541666667).epsilon(1e-9));
    CHECK(m.kappa == doctest::Approx(0.6938775510).epsilon(1e-9));
}

TEST_CASE("metric edge cases") {
    Metrics perfect = metrics_from_confusion({30, 0, 0, 20}, 2);
    CHECK(perfect.oa == 1.0);
    CHECK(perfect.aa == 1.0);
    CHECK(perfect.kappa == 1.0);

    // single-class predictor on balanced data agrees only by chance
    Metrics chance = metrics_from_confusion({50, 0, 50, 0}, 2);
    CHECK(chance.kappa == doctest::Approx(0.0).scale(1.0));

    // kappa is 1 exactly when the matrix is diagonal with positive trace
    Metrics diag = metrics_from_confusion({7, 0, 0, 0, 3, 0, 0, 0, 11}, 3);
    CHECK(diag.kappa == doctest::Approx(1.0));
    Metrics off = metrics_from_confusion({7, 1, 0, 0, 3, 0, 0, 0, 11}, 3);
    CHECK(off.kappa < 1.0);

    CHECK_THROWS_AS(metrics_from_confusion({0, 0, 0, 0}, 2), Error);
    CHECK_THROWS_AS(compute_metrics({0, 1}, {0}, 2), Error);
}

TEST_CASE("confusion csv layout") {
    Metrics m = metrics_from_confusion({50, 10, 5, 35}, 2);
    const std::string csv = confusion_to_csv(m);
    CHECK(csv.find("50,10") != std::string::npos);
    CHECK(csv.find("5,35") != std::string::npos);
}

}  // TEST_SUITE
